#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "typeplan/type_analysis.hpp"

namespace reachfuzz::harness {

using typeplan::ArgPlan;

// Argument-construction plan with exactly one constructor bound per complex
// node. tree_id is a stable content hash so sampling and artifacts are
// reproducible across runs.
struct DependencyTree {
    int32_t target_fn = -1;
    std::string target_path;
    std::vector<ArgPlan> args; // trimmed: every complex node has <= 1 constructor
    uint64_t tree_id = 0;
};

// [OP] build_dependency_trees — Cartesian expansion over constructor
// choices, each complex node limited to its first max_ctors candidates.
struct TreeBuildResult {
    std::vector<DependencyTree> trees;
    std::string diagnostic; // set when a mandatory node is unconstructible
};
TreeBuildResult build_dependency_trees(int32_t target_fn, const std::string& target_path,
                                       const std::vector<ArgPlan>& plans, int max_ctors);

// [OP] sample_trees — deterministic seeded sample without replacement.
std::vector<DependencyTree> sample_trees(const std::vector<DependencyTree>& trees, uint64_t seed,
                                         size_t limit);

} // namespace reachfuzz::harness
