#include "harness/dep_tree.hpp"

#include <algorithm>
#include <numeric>
#include <random>

namespace reachfuzz::harness {

namespace {

constexpr size_t kMaxTrees = 4096; // expansion cap; sampling trims further anyway

uint64_t fnv1a(uint64_t h, const void* data, size_t len) {
    const auto* p = static_cast<const uint8_t*>(data);
    for (size_t i = 0; i < len; ++i) {
        h ^= p[i];
        h *= 0x100000001b3ull;
    }
    return h;
}

uint64_t fnv_str(uint64_t h, const std::string& s) { return fnv1a(h, s.data(), s.size()); }

// Collect per-complex-node choice counts in deterministic DFS order.
void count_choices(const ArgPlan& plan, int max_ctors, std::vector<size_t>& counts,
                   bool& dead_end) {
    if (plan.kind == typeplan::PlanKind::Complex) {
        if (plan.cycle_guard) return; // handled at generation time
        if (plan.unconstructible) {
            dead_end = true;
            return;
        }
        size_t n = std::min<size_t>(plan.constructors.size(), static_cast<size_t>(max_ctors));
        counts.push_back(n);
        // all candidate subtrees participate in the count walk
        for (size_t ci = 0; ci < n; ++ci)
            for (const auto& a : plan.constructors[ci].arg_plans)
                count_choices(a, max_ctors, counts, dead_end);
        return;
    }
    for (const auto& c : plan.children) count_choices(c, max_ctors, counts, dead_end);
    for (const auto& tf : plan.trait_fns)
        for (const auto& a : tf.arg_plans) count_choices(a, max_ctors, counts, dead_end);
}

// The same walk, binding one constructor per complex node from `choices`.
ArgPlan bind_choices(const ArgPlan& plan, int max_ctors, const std::vector<size_t>& choices,
                     size_t& cursor) {
    ArgPlan out = plan;
    if (plan.kind == typeplan::PlanKind::Complex && !plan.cycle_guard && !plan.unconstructible) {
        size_t n = std::min<size_t>(plan.constructors.size(), static_cast<size_t>(max_ctors));
        size_t pick = choices[cursor++];
        // walk candidates in the same order as count_choices, keeping only
        // the picked constructor (with its subtree bound recursively)
        typeplan::ConstructorCandidate chosen;
        for (size_t ci = 0; ci < n; ++ci) {
            if (ci == pick) {
                chosen = plan.constructors[ci];
                chosen.arg_plans.clear();
                for (const auto& a : plan.constructors[ci].arg_plans)
                    chosen.arg_plans.push_back(bind_choices(a, max_ctors, choices, cursor));
            } else {
                for (const auto& a : plan.constructors[ci].arg_plans) {
                    // advance the cursor past the unpicked subtree's choices
                    std::vector<size_t> dummy;
                    bool dead = false;
                    count_choices(a, max_ctors, dummy, dead);
                    for (size_t k = 0; k < dummy.size(); ++k) cursor++;
                }
            }
        }
        out.constructors.clear();
        out.constructors.push_back(std::move(chosen));
        return out;
    }
    out.children.clear();
    for (const auto& c : plan.children)
        out.children.push_back(bind_choices(c, max_ctors, choices, cursor));
    out.trait_fns.clear();
    for (const auto& tf : plan.trait_fns) {
        typeplan::TraitFnPlan tfp = tf;
        tfp.arg_plans.clear();
        for (const auto& a : tf.arg_plans)
            tfp.arg_plans.push_back(bind_choices(a, max_ctors, choices, cursor));
        out.trait_fns.push_back(std::move(tfp));
    }
    return out;
}

// Content hash over the bound tree: equal constructor assignments hash
// equal, so ghost choices in unpicked subtrees do not duplicate trees.
void hash_plan(const ArgPlan& plan, uint64_t& h) {
    int kind = static_cast<int>(plan.kind);
    h = fnv1a(h, &kind, sizeof(kind));
    for (const auto& ctor : plan.constructors) {
        h = fnv_str(h, ctor.public_path);
        for (const auto& a : ctor.arg_plans) hash_plan(a, h);
    }
    for (const auto& c : plan.children) hash_plan(c, h);
    for (const auto& tf : plan.trait_fns) {
        h = fnv_str(h, tf.trait_ref.name);
        h = fnv_str(h, tf.signature.name);
        for (const auto& a : tf.arg_plans) hash_plan(a, h);
    }
}

uint64_t hash_tree(const DependencyTree& tree) {
    uint64_t h = 0xcbf29ce484222325ull;
    h = fnv_str(h, tree.target_path);
    for (const auto& a : tree.args) hash_plan(a, h);
    return h;
}

} // namespace

TreeBuildResult build_dependency_trees(int32_t target_fn, const std::string& target_path,
                                       const std::vector<ArgPlan>& plans, int max_ctors) {
    TreeBuildResult result;
    if (max_ctors < 1) max_ctors = 1;

    std::vector<size_t> counts;
    bool dead_end = false;
    for (const auto& p : plans) count_choices(p, max_ctors, counts, dead_end);
    if (dead_end) {
        result.diagnostic = "argument of '" + target_path +
                            "' has an unconstructible complex type; no dependency trees";
        return result;
    }
    for (size_t c : counts) {
        if (c == 0) {
            result.diagnostic =
                "constructor choice collapsed to zero candidates for '" + target_path + "'";
            return result;
        }
    }

    // enumerate the Cartesian product in mixed-radix order
    std::vector<size_t> choices(counts.size(), 0);
    std::vector<uint64_t> seen;
    while (true) {
        DependencyTree tree;
        tree.target_fn = target_fn;
        tree.target_path = target_path;
        size_t cursor = 0;
        for (const auto& p : plans)
            tree.args.push_back(bind_choices(p, max_ctors, choices, cursor));
        tree.tree_id = hash_tree(tree);
        if (std::find(seen.begin(), seen.end(), tree.tree_id) == seen.end()) {
            seen.push_back(tree.tree_id);
            result.trees.push_back(std::move(tree));
        }
        if (result.trees.size() >= kMaxTrees) break;

        // increment mixed-radix counter
        size_t pos = 0;
        while (pos < choices.size()) {
            if (++choices[pos] < counts[pos]) break;
            choices[pos] = 0;
            ++pos;
        }
        if (pos == choices.size()) break;
        if (counts.empty()) break;
    }
    return result;
}

std::vector<DependencyTree> sample_trees(const std::vector<DependencyTree>& trees, uint64_t seed,
                                         size_t limit) {
    if (limit < 1) limit = 1;
    if (trees.size() <= limit) return trees;
    std::vector<size_t> idx(trees.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::mt19937_64 rng(seed);
    for (size_t i = 0; i < limit; ++i) {
        std::uniform_int_distribution<size_t> pick(i, idx.size() - 1);
        std::swap(idx[i], idx[pick(rng)]);
    }
    std::vector<DependencyTree> out;
    out.reserve(limit);
    for (size_t i = 0; i < limit; ++i) out.push_back(trees[idx[i]]);
    return out;
}

} // namespace reachfuzz::harness
