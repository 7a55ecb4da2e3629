#include "typeplan/type_analysis.hpp"

#include <algorithm>

namespace reachfuzz::typeplan {

using namespace model;

namespace {

// does `haystack` mention the complex item of `target` anywhere?
bool mentions_target(const TypeDescriptor& haystack, const TypeDescriptor& target) {
    if (target.shape == Shape::Complex && haystack.shape == Shape::Complex &&
        haystack.complex_item == target.complex_item)
        return true;
    for (const auto& c : haystack.children)
        if (mentions_target(c, target)) return true;
    return false;
}

std::optional<std::pair<ReturnWrapping, int>> match_return(const TypeDescriptor& ret,
                                                           const TypeDescriptor& target) {
    auto same = [&](const TypeDescriptor& t) {
        return t.shape == Shape::Complex && target.shape == Shape::Complex &&
               t.complex_item == target.complex_item;
    };
    if (same(ret)) return std::make_pair(ReturnWrapping::Direct, 0);
    if (ret.shape == Shape::StdContainer) {
        if (ret.container == StdContainerKind::Option && !ret.children.empty() && same(ret.children[0]))
            return std::make_pair(ReturnWrapping::Option, 0);
        if (ret.container == StdContainerKind::Result && !ret.children.empty() && same(ret.children[0]))
            return std::make_pair(ReturnWrapping::Result, 0);
        if (ret.container == StdContainerKind::BoxT && !ret.children.empty() && same(ret.children[0]))
            return std::make_pair(ReturnWrapping::Direct, 0); // Box<T> derefs to T at call site
    }
    if (ret.shape == Shape::Tuple) {
        for (size_t i = 0; i < ret.children.size(); ++i)
            if (same(ret.children[i]))
                return std::make_pair(ReturnWrapping::TupleMember, static_cast<int>(i));
    }
    return std::nullopt;
}

} // namespace

std::vector<ConstructorCandidate> find_constructors(const TypeDescriptor& target,
                                                    const CrateModel& model) {
    std::vector<ConstructorCandidate> out;
    if (target.shape != Shape::Complex) return out;

    for (size_t i = 0; i < model.functions.size(); ++i) {
        const FunctionRecord& fn = model.functions[i];
        // (a) publicly exported
        auto path = model.public_path(fn.item);
        if (!path) continue;
        if (fn.is_unsafe_fn) continue; // calling it would require unsafe harness code
        // (c) return yields the target
        auto m = match_return(fn.ret, target);
        if (!m) continue;
        // (b) no input is or contains the target type (the receiver counts)
        bool touches_target = false;
        if (fn.self_kind != SelfKind::None && fn.owning_impl >= 0)
            touches_target = mentions_target(model.impls[fn.owning_impl].self_type, target);
        for (const auto& p : fn.params) touches_target = touches_target || mentions_target(p.type, target);
        if (touches_target) continue;

        ConstructorCandidate cc;
        cc.fn_record = static_cast<int32_t>(i);
        cc.public_path = *path;
        cc.target_type = target;
        cc.wrapping = m->first;
        cc.tuple_index = m->second;
        cc.self_kind = fn.self_kind;
        out.push_back(std::move(cc));
    }
    std::sort(out.begin(), out.end(), [](const ConstructorCandidate& a, const ConstructorCandidate& b) {
        return a.public_path < b.public_path;
    });
    return out;
}

TraitBoundSet collect_trait_bounds(const model::GenericParam& param, const CrateModel& model) {
    TraitBoundSet out;
    out.param = param.name;
    out.associated_constraints = param.assoc_constraints;

    std::vector<TraitId> work = param.bounds;
    while (!work.empty()) {
        TraitId t = work.back();
        work.pop_back();
        if (out.contains(t)) continue;
        bool is_unsafe = false;
        if (t.id != kNoItem) {
            if (const TraitRecord* tr = model.trait_for(t.id)) {
                is_unsafe = tr->is_unsafe_trait;
                for (const auto& s : tr->supertraits) work.push_back(s);
            }
        }
        out.traits.emplace_back(t, is_unsafe);
    }
    std::sort(out.traits.begin(), out.traits.end(),
              [](const auto& a, const auto& b) { return a.first.name < b.first.name; });
    out.transitively_closed = true;
    return out;
}

TraitItems collect_trait_items(const TraitId& trait_ref, const CrateModel& model) {
    TraitItems out;
    if (trait_ref.id == kNoItem) {
        out.external_unmodeled = true;
        return out;
    }
    const TraitRecord* tr = model.trait_for(trait_ref.id);
    if (!tr) {
        out.external_unmodeled = true;
        return out;
    }
    out.required_fns = tr->required_fns;
    out.overridable_default_fns = tr->default_fns;
    out.associated_types = tr->associated_types;
    return out;
}

namespace {

// External traits with well-known shapes that custom types can implement
// without a modeled TraitRecord.
std::optional<FnSignature> known_external_signature(const std::string& trait_name) {
    if (trait_name == "Clone") {
        FnSignature sig;
        sig.name = "clone";
        sig.self_kind = SelfKind::SharedRef;
        sig.ret.shape = Shape::GenericParam;
        sig.ret.name = "Self";
        return sig;
    }
    if (trait_name == "Default") {
        FnSignature sig;
        sig.name = "default";
        sig.self_kind = SelfKind::None;
        sig.ret.shape = Shape::GenericParam;
        sig.ret.name = "Self";
        return sig;
    }
    return std::nullopt;
}

ArgPlan make_generic_plan(const model::GenericParam& gp, const CrateModel& model,
                          std::vector<ItemId>& complex_path) {
    ArgPlan plan;
    if (gp.is_fn_like) {
        plan.kind = PlanKind::Closure;
        plan.closure_params = gp.fn_sugar_params;
        plan.closure_ret = gp.fn_sugar_ret.value_or(TypeDescriptor{});
        plan.source_type.shape = Shape::GenericParam;
        plan.source_type.name = gp.name;
        return plan;
    }
    plan.kind = PlanKind::Generic;
    plan.source_type.shape = Shape::GenericParam;
    plan.source_type.name = gp.name;
    plan.bounds = collect_trait_bounds(gp, model);
    plan.external_opaque = true;
    for (const auto& [trait, is_unsafe] : plan.bounds.traits) {
        (void)is_unsafe;
        TraitItems items = collect_trait_items(trait, model);
        if (items.external_unmodeled) {
            if (auto sig = known_external_signature(trait.name)) {
                plan.external_opaque = false;
                TraitFnPlan tfp;
                tfp.trait_ref = trait;
                tfp.signature = *sig;
                plan.trait_fns.push_back(std::move(tfp));
            }
            continue;
        }
        plan.external_opaque = false;
        auto add = [&](const FnSignature& sig, bool is_default) {
            TraitFnPlan tfp;
            tfp.trait_ref = trait;
            tfp.signature = sig;
            tfp.is_default = is_default;
            for (const auto& p : sig.params) {
                std::vector<model::GenericParam> none;
                tfp.arg_plans.push_back(analyze_type(p.type, model, complex_path, none));
            }
            plan.trait_fns.push_back(std::move(tfp));
        };
        for (const auto& sig : items.required_fns) add(sig, false);
        for (const auto& sig : items.overridable_default_fns) add(sig, true);
    }
    if (plan.bounds.traits.empty()) plan.external_opaque = false; // unbounded: any type works
    return plan;
}

} // namespace

ArgPlan analyze_type(const TypeDescriptor& type, const CrateModel& model,
                     std::vector<ItemId>& complex_path,
                     const std::vector<model::GenericParam>& generics_in_scope) {
    ArgPlan plan;
    plan.source_type = type;

    switch (type.shape) {
        case Shape::Primitive:
        case Shape::StringSlice:
        case Shape::Unit:
            plan.kind = PlanKind::PrimitiveLeaf;
            return plan;

        case Shape::StdContainer: {
            plan.kind = PlanKind::StdContainer;
            for (const auto& inner : type.children)
                plan.children.push_back(analyze_type(inner, model, complex_path, generics_in_scope));
            return plan;
        }
        case Shape::Slice: {
            plan.kind = PlanKind::Slice;
            for (const auto& inner : type.children)
                plan.children.push_back(analyze_type(inner, model, complex_path, generics_in_scope));
            return plan;
        }
        case Shape::Array:
        case Shape::Tuple: {
            plan.kind = PlanKind::Compound;
            for (const auto& inner : type.children)
                plan.children.push_back(analyze_type(inner, model, complex_path, generics_in_scope));
            return plan;
        }
        case Shape::Reference: {
            plan.kind = PlanKind::Reference;
            if (!type.children.empty())
                plan.children.push_back(
                    analyze_type(type.children[0], model, complex_path, generics_in_scope));
            return plan;
        }
        case Shape::RawPointer: {
            // raw pointer arguments cannot be produced by a forbid-unsafe harness;
            // planned as an unconstructible complex-like leaf
            plan.kind = PlanKind::Complex;
            plan.unconstructible = true;
            return plan;
        }
        case Shape::Complex: {
            plan.kind = PlanKind::Complex;
            if (std::find(complex_path.begin(), complex_path.end(), type.complex_item) !=
                complex_path.end()) {
                plan.cycle_guard = true; // already expanding this type on the current path
                return plan;
            }
            complex_path.push_back(type.complex_item);
            plan.constructors = find_constructors(type, model);
            for (auto& ctor : plan.constructors) {
                const FunctionRecord& fn = model.functions[ctor.fn_record];
                if (fn.self_kind != SelfKind::None && fn.owning_impl >= 0) {
                    const TypeDescriptor& recv = model.impls[fn.owning_impl].self_type;
                    if (fn.self_kind == SelfKind::Value) {
                        ctor.arg_plans.push_back(
                            analyze_type(recv, model, complex_path, fn.generic_params));
                    } else {
                        ArgPlan rp;
                        rp.kind = PlanKind::Reference;
                        rp.source_type.shape = Shape::Reference;
                        rp.source_type.is_mut = fn.self_kind == SelfKind::UniqueRef;
                        rp.source_type.children.push_back(recv);
                        rp.children.push_back(analyze_type(recv, model, complex_path, fn.generic_params));
                        ctor.arg_plans.push_back(std::move(rp));
                    }
                }
                for (const auto& p : fn.params)
                    ctor.arg_plans.push_back(analyze_type(p.type, model, complex_path, fn.generic_params));
            }
            complex_path.pop_back();
            if (plan.constructors.empty()) plan.unconstructible = true;
            return plan;
        }
        case Shape::GenericParam: {
            for (const auto& gp : generics_in_scope) {
                if (gp.name == type.name) return make_generic_plan(gp, model, complex_path);
            }
            // unbound generic (e.g. inside a constructor of a generic type):
            // synthesized as a custom type with no trait obligations
            plan.kind = PlanKind::Generic;
            plan.bounds.param = type.name;
            plan.bounds.transitively_closed = true;
            return plan;
        }
        case Shape::Closure: {
            plan.kind = PlanKind::Closure;
            if (!type.children.empty()) {
                plan.closure_params.assign(type.children.begin(), type.children.end() - 1);
                plan.closure_ret = type.children.back();
            }
            return plan;
        }
        case Shape::TraitObject: {
            plan.kind = PlanKind::TraitObject;
            model::GenericParam pseudo;
            pseudo.name = "dyn";
            pseudo.bounds = {type.trait_ref};
            plan.bounds = collect_trait_bounds(pseudo, model);
            return plan;
        }
        case Shape::AssociatedType: {
            plan.kind = PlanKind::AssociatedType;
            return plan;
        }
        case Shape::Unresolved: {
            plan.kind = PlanKind::Generic;
            plan.external_opaque = true;
            return plan;
        }
    }
    return plan;
}

ArgPlan plan_for_generic(const model::GenericParam& param, const CrateModel& model) {
    std::vector<ItemId> path;
    return make_generic_plan(param, model, path);
}

std::vector<ArgPlan> analyze_args(int32_t fn_record, const CrateModel& model) {
    const FunctionRecord& fn = model.functions.at(fn_record);
    std::vector<ArgPlan> out;
    std::vector<ItemId> path;

    if (fn.self_kind != SelfKind::None && fn.owning_impl >= 0) {
        const TypeDescriptor& self_ty = model.impls[fn.owning_impl].self_type;
        ArgPlan self_plan;
        if (fn.self_kind == SelfKind::Value) {
            self_plan = analyze_type(self_ty, model, path, fn.generic_params);
        } else {
            self_plan.kind = PlanKind::Reference;
            self_plan.source_type.shape = Shape::Reference;
            self_plan.source_type.is_mut = fn.self_kind == SelfKind::UniqueRef;
            self_plan.source_type.children.push_back(self_ty);
            self_plan.children.push_back(analyze_type(self_ty, model, path, fn.generic_params));
        }
        out.push_back(std::move(self_plan));
    }
    for (const auto& p : fn.params)
        out.push_back(analyze_type(p.type, model, path, fn.generic_params));
    return out;
}

nlohmann::ordered_json ArgPlan::to_json() const {
    nlohmann::ordered_json j;
    static const char* names[] = {"primitive-leaf", "std-container", "slice",        "compound",
                                  "complex",        "reference",     "generic",      "closure",
                                  "trait-object",   "associated-type"};
    j["kind"] = names[static_cast<int>(kind)];
    j["type"] = source_type.display();
    if (unconstructible) j["unconstructible"] = true;
    if (cycle_guard) j["cycle_guard"] = true;
    if (external_opaque) j["external_opaque"] = true;
    if (!constructors.empty()) {
        nlohmann::ordered_json cs = nlohmann::ordered_json::array();
        for (const auto& c : constructors) {
            nlohmann::ordered_json cj;
            cj["fn"] = c.public_path;
            cj["wrapping"] = c.wrapping == ReturnWrapping::Direct     ? "direct"
                             : c.wrapping == ReturnWrapping::Option   ? "option"
                             : c.wrapping == ReturnWrapping::Result   ? "result"
                                                                      : "tuple-member";
            if (c.wrapping == ReturnWrapping::TupleMember) cj["index"] = c.tuple_index;
            nlohmann::ordered_json args = nlohmann::ordered_json::array();
            for (const auto& a : c.arg_plans) args.push_back(a.to_json());
            cj["args"] = args;
            cs.push_back(cj);
        }
        j["constructors"] = cs;
    }
    if (!bounds.traits.empty()) {
        nlohmann::ordered_json bs = nlohmann::ordered_json::array();
        for (const auto& [t, u] : bounds.traits) bs.push_back({{"trait", t.name}, {"unsafe", u}});
        j["bounds"] = bs;
    }
    if (!trait_fns.empty()) {
        nlohmann::ordered_json fs = nlohmann::ordered_json::array();
        for (const auto& f : trait_fns) {
            nlohmann::ordered_json fj;
            fj["trait"] = f.trait_ref.name;
            fj["fn"] = f.signature.name;
            fj["default"] = f.is_default;
            nlohmann::ordered_json args = nlohmann::ordered_json::array();
            for (const auto& a : f.arg_plans) args.push_back(a.to_json());
            fj["args"] = args;
            fs.push_back(fj);
        }
        j["trait_fns"] = fs;
    }
    if (kind == PlanKind::Closure) {
        nlohmann::ordered_json ps = nlohmann::ordered_json::array();
        for (const auto& p : closure_params) ps.push_back(p.display());
        j["closure_params"] = ps;
        j["closure_ret"] = closure_ret.display();
    }
    if (!children.empty()) {
        nlohmann::ordered_json cs = nlohmann::ordered_json::array();
        for (const auto& c : children) cs.push_back(c.to_json());
        j["children"] = cs;
    }
    return j;
}

} // namespace reachfuzz::typeplan
