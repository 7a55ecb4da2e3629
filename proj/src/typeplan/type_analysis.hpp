#pragma once

#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "model/crate_model.hpp"

namespace reachfuzz::typeplan {

using model::CrateModel;
using model::FnSignature;
using model::ItemId;
using model::TraitId;
using model::TypeDescriptor;

enum class ReturnWrapping { Direct, Option, Result, TupleMember };

struct ArgPlan;

struct ConstructorCandidate {
    int32_t fn_record = -1;
    std::string public_path;
    TypeDescriptor target_type;
    ReturnWrapping wrapping = ReturnWrapping::Direct;
    int tuple_index = 0;
    // one plan per argument; when the constructor is a method, the receiver
    // plan comes first and self_kind says how it is taken
    model::SelfKind self_kind = model::SelfKind::None;
    std::vector<ArgPlan> arg_plans;
};

struct TraitBoundSet {
    std::string param;
    // (trait, is_unsafe); external traits keep id == kNoItem
    std::vector<std::pair<TraitId, bool>> traits;
    bool transitively_closed = false;
    std::vector<model::AssocConstraint> associated_constraints;

    bool contains(const TraitId& t) const {
        for (const auto& [tr, u] : traits)
            if (tr.id == t.id && tr.name == t.name) return true;
        return false;
    }
};

// Per-trait-function synthesis input: the signature plus recursively
// analyzed plans for its non-self arguments.
struct TraitFnPlan {
    TraitId trait_ref;
    FnSignature signature;
    bool is_default = false;
    std::vector<ArgPlan> arg_plans;
};

enum class PlanKind {
    PrimitiveLeaf,
    StdContainer,
    Slice,
    Compound, // tuple / array
    Complex,
    Reference,
    Generic,
    Closure,
    TraitObject,
    AssociatedType,
};

struct ArgPlan {
    PlanKind kind = PlanKind::PrimitiveLeaf;
    TypeDescriptor source_type;
    std::vector<ArgPlan> children;

    // Complex
    std::vector<ConstructorCandidate> constructors;
    bool unconstructible = false;
    bool cycle_guard = false; // complex type already being expanded on this path

    // Generic / TraitObject
    TraitBoundSet bounds;
    std::vector<TraitFnPlan> trait_fns;
    bool external_opaque = false;

    // Closure
    std::vector<TypeDescriptor> closure_params;
    TypeDescriptor closure_ret;

    nlohmann::ordered_json to_json() const;
};

// [OP] find_constructors — public fns whose return yields the target
// (directly, Option/Result/Box-wrapped, or as a tuple member) and whose
// inputs never contain the target; path-lexicographic order.
std::vector<ConstructorCandidate> find_constructors(const TypeDescriptor& target,
                                                    const CrateModel& model);

// [OP] collect_trait_bounds — transitively closed bound set for one generic.
TraitBoundSet collect_trait_bounds(const model::GenericParam& param, const CrateModel& model);

// [OP] collect_trait_items
struct TraitItems {
    std::vector<FnSignature> required_fns;
    std::vector<FnSignature> overridable_default_fns;
    std::vector<model::AssociatedTypeDecl> associated_types;
    bool external_unmodeled = false;
};
TraitItems collect_trait_items(const TraitId& trait_ref, const CrateModel& model);

// [OP] analyze_args — one plan per parameter, self included.
std::vector<ArgPlan> analyze_args(int32_t fn_record, const CrateModel& model);

// Single-type entry point used by the recursion and by tests.
ArgPlan analyze_type(const TypeDescriptor& type, const CrateModel& model,
                     std::vector<ItemId>& complex_path,
                     const std::vector<model::GenericParam>& generics_in_scope);

// Plan node for one generic parameter (bounds closed, trait fns analyzed);
// harness generation uses this to materialize custom types up front.
ArgPlan plan_for_generic(const model::GenericParam& param, const CrateModel& model);

} // namespace reachfuzz::typeplan
