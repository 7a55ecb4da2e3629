#pragma once

#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "model/crate_model.hpp"

namespace reachfuzz::graph {

using FnId = int32_t; // index into CrateModel::functions

enum class CallKind { DirectSingle, DirectMulti, Indirect };

struct CallEdge {
    FnId caller = -1;
    FnId callee = -1; // -1 for indirect edges (no resolution)
    CallKind kind = CallKind::DirectSingle;
    Span site;
    // set when the edge was resolved through a generic bound
    std::string via_generic;
    std::string via_trait;
};

struct UnsafetyClass {
    bool sf = false;
    bool uf = false;
    bool uef = false;
    bool urf = false;
    bool uapi = false;
    bool urapi = false;

    std::string to_string() const;
    bool operator==(const UnsafetyClass&) const = default;
};

struct CallGraph {
    struct Node {
        FnId fn = -1;
        bool is_public = false;    // externally exported
        bool is_unsafe_fn = false; // UF
        bool has_unsafe_block = false;
        std::string label;         // public path or crate-internal name
    };
    std::vector<Node> nodes;                // index == FnId
    std::vector<CallEdge> edges;
    std::vector<CallEdge> indirect_edges;   // kept out of reachability, reported only
    std::map<FnId, UnsafetyClass> classification;

    std::vector<std::vector<FnId>> callers_of; // reversed adjacency
    std::vector<std::vector<FnId>> callees_of;

    void rebuild_adjacency();
    nlohmann::ordered_json to_json() const;
    std::string to_dot() const;
};

// [OP] resolve_callee — resolution for one call site.
struct ResolvedCallee {
    std::vector<FnId> targets;
    CallKind kind = CallKind::DirectSingle;
    std::string via_generic;
    std::string via_trait;
};

// [OP] build_call_graph — every function becomes a node; call sites in each
// body are resolved per the call-kind taxonomy (single, multi, indirect).
CallGraph build_call_graph(const model::LoadedCrate& crate, DiagnosticSink* diags = nullptr);

// [OP] extract_urapis — reverse BFS from each UEF, collecting public safe
// ancestors (public UEFs include themselves). UFs never qualify.
std::set<FnId> extract_urapis(const CallGraph& graph);

// [OP] classify_function
UnsafetyClass classify_function(FnId fn, const CallGraph& graph);

// Test oracle: boolean-matrix transitive closure instead of reverse BFS.
std::set<FnId> extract_urapis_bruteforce(const CallGraph& graph);

} // namespace reachfuzz::graph
