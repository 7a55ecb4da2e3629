#include "model/crate_model.hpp"

#include <algorithm>
#include <cassert>
#include <functional>

namespace reachfuzz::model {

using nlohmann::ordered_json;

// ------------------------------------------------------------ descriptors

static const char* const kPrimitives[] = {"u8",  "u16", "u32", "u64",  "u128", "usize", "i8",
                                          "i16", "i32", "i64", "i128", "isize", "bool", "char",
                                          "f32", "f64"};

static bool is_primitive_name(const std::string& n) {
    for (const char* p : kPrimitives)
        if (n == p) return true;
    return false;
}

bool TypeDescriptor::contains(const TypeDescriptor& other) const {
    if (*this == other) return true;
    // complex identity matters more than exact type-args when checking
    // "contains the target type as inner type"
    if (shape == Shape::Complex && other.shape == Shape::Complex && complex_item == other.complex_item)
        return true;
    for (const auto& c : children)
        if (c.contains(other)) return true;
    return false;
}

int TypeDescriptor::category() const {
    switch (shape) {
        case Shape::Primitive: return 1;
        case Shape::StdContainer: return 2;
        case Shape::Slice:
        case Shape::StringSlice: return 3;
        case Shape::Array:
        case Shape::Tuple: return 4;
        case Shape::Complex: return 5;
        case Shape::Reference:
            // &[T] and &str stay in the slice category
            if (!children.empty() &&
                (children[0].shape == Shape::Slice || children[0].shape == Shape::StringSlice))
                return 3;
            return 6;
        case Shape::RawPointer: return 6;
        case Shape::GenericParam: return 7;
        case Shape::Closure:
        case Shape::TraitObject:
        case Shape::AssociatedType: return 8;
        case Shape::Unit: return 4; // empty tuple
        case Shape::Unresolved: return 0;
    }
    return 0;
}

std::string TypeDescriptor::display() const {
    switch (shape) {
        case Shape::Primitive: return name;
        case Shape::StdContainer: {
            const char* head = container == StdContainerKind::Vec      ? "Vec"
                               : container == StdContainerKind::BoxT   ? "Box"
                               : container == StdContainerKind::Option ? "Option"
                               : container == StdContainerKind::Result ? "Result"
                                                                       : "String";
            std::string out = head;
            if (!children.empty()) {
                out += "<";
                for (size_t i = 0; i < children.size(); ++i) {
                    if (i) out += ", ";
                    out += children[i].display();
                }
                out += ">";
            }
            return out;
        }
        case Shape::Slice: return "[" + children[0].display() + "]";
        case Shape::StringSlice: return "&str";
        case Shape::Array: return "[" + children[0].display() + "; " + std::to_string(array_len) + "]";
        case Shape::Tuple: {
            std::string out = "(";
            for (size_t i = 0; i < children.size(); ++i) {
                if (i) out += ", ";
                out += children[i].display();
            }
            return out + ")";
        }
        case Shape::Complex: {
            std::string out = name;
            if (!children.empty()) {
                out += "<";
                for (size_t i = 0; i < children.size(); ++i) {
                    if (i) out += ", ";
                    out += children[i].display();
                }
                out += ">";
            }
            return out;
        }
        case Shape::Reference: return std::string("&") + (is_mut ? "mut " : "") + children[0].display();
        case Shape::RawPointer: return std::string("*") + (is_mut ? "mut " : "const ") + children[0].display();
        case Shape::GenericParam: return name;
        case Shape::Closure: {
            std::string out = "fn(";
            for (size_t i = 0; i + 1 < children.size(); ++i) {
                if (i) out += ", ";
                out += children[i].display();
            }
            out += ")";
            if (!children.empty() && children.back().shape != Shape::Unit)
                out += " -> " + children.back().display();
            return out;
        }
        case Shape::TraitObject: return "dyn " + trait_ref.name;
        case Shape::AssociatedType: return name;
        case Shape::Unit: return "()";
        case Shape::Unresolved: return name;
    }
    return "?";
}

std::string vis_name(Vis v) {
    switch (v) {
        case Vis::Private: return "private";
        case Vis::Public: return "public";
        case Vis::Restricted: return "restricted";
    }
    return "?";
}

// ---------------------------------------------------------------- builder

namespace {

Vis to_vis(ast::Visibility v) {
    switch (v) {
        case ast::Visibility::Private: return Vis::Private;
        case ast::Visibility::Public: return Vis::Public;
        case ast::Visibility::Restricted: return Vis::Restricted;
    }
    return Vis::Private;
}

SelfKind to_self(ast::SelfKind k) {
    switch (k) {
        case ast::SelfKind::None: return SelfKind::None;
        case ast::SelfKind::Value: return SelfKind::Value;
        case ast::SelfKind::SharedRef: return SelfKind::SharedRef;
        case ast::SelfKind::UniqueRef: return SelfKind::UniqueRef;
    }
    return SelfKind::None;
}

// Extract `feature = "x"` from a cfg attribute argument string.
std::optional<std::string> cfg_feature(const std::string& args) {
    auto pos = args.find("feature");
    if (pos == std::string::npos) return std::nullopt;
    auto q1 = args.find('"', pos);
    if (q1 == std::string::npos) return std::nullopt;
    auto q2 = args.find('"', q1 + 1);
    if (q2 == std::string::npos) return std::nullopt;
    return args.substr(q1 + 1, q2 - q1 - 1);
}

bool cfg_enabled(const std::vector<ast::Attribute>& attrs, const std::set<std::string>& features,
                 DiagnosticSink& diags, Span sp) {
    for (const auto& a : attrs) {
        if (a.name != "cfg") continue;
        if (auto feat = cfg_feature(a.args)) return features.count(*feat) > 0;
        if (a.args == "test") return false;
        diags.warning("unrecognized cfg condition '" + a.args + "', item kept", sp);
    }
    return true;
}

struct Builder {
    CrateModel& m;
    NameIndex& index;
    DiagnosticSink& diags;
    const std::set<std::string>& features;

    struct PendingImpl {
        const ast::ImplBlock* block;
        ItemId module;
    };
    struct PendingTrait {
        const ast::TraitDef* def;
        ItemId item;
        ItemId module;
    };
    struct PendingFn {
        const ast::FnDecl* decl;
        ItemId item;
        ItemId module;
    };
    struct PendingUse {
        const ast::UseDecl* decl;
        ItemId item;
        ItemId module;
    };
    struct PendingStruct {
        const ast::StructDef* def;
        ItemId item;
        ItemId module;
    };
    struct PendingEnum {
        const ast::EnumDef* def;
        ItemId item;
        ItemId module;
    };
    std::vector<PendingImpl> pending_impls;
    std::vector<PendingTrait> pending_traits;
    std::vector<PendingFn> pending_fns;
    std::vector<PendingUse> pending_uses;
    std::vector<PendingStruct> pending_structs;
    std::vector<PendingEnum> pending_enums;

    ItemId add_item(ItemKind kind, std::string name, ItemId parent, Vis vis, Span sp) {
        ItemRecord rec;
        rec.id = static_cast<ItemId>(m.items.size());
        rec.kind = kind;
        rec.name = std::move(name);
        rec.parent_module = parent;
        rec.declared_visibility = vis;
        rec.span = sp;
        m.items.push_back(rec);
        return m.items.back().id;
    }

    void declare(ItemId module, const std::string& name, ItemId item) {
        index.module_scope[module].emplace(name, item);
    }

    // pass 1: declarations
    void collect_module(const std::vector<ast::ItemPtr>& items, ItemId module) {
        for (const auto& ip : items) {
            const ast::Item& it = *ip;
            if (const auto* fn = std::get_if<ast::FnDecl>(&it.kind)) {
                if (!cfg_enabled(fn->attrs, features, diags, fn->span)) continue;
                ItemId id = add_item(ItemKind::Function, fn->name, module, to_vis(fn->vis), fn->span);
                declare(module, fn->name, id);
                pending_fns.push_back({fn, id, module});
            } else if (const auto* sd = std::get_if<ast::StructDef>(&it.kind)) {
                if (!cfg_enabled(sd->attrs, features, diags, sd->span)) continue;
                ItemId id = add_item(ItemKind::Struct, sd->name, module, to_vis(sd->vis), sd->span);
                declare(module, sd->name, id);
                pending_structs.push_back({sd, id, module});
            } else if (const auto* ed = std::get_if<ast::EnumDef>(&it.kind)) {
                if (!cfg_enabled(ed->attrs, features, diags, ed->span)) continue;
                ItemId id = add_item(ItemKind::Enum, ed->name, module, to_vis(ed->vis), ed->span);
                declare(module, ed->name, id);
                pending_enums.push_back({ed, id, module});
            } else if (const auto* td = std::get_if<ast::TraitDef>(&it.kind)) {
                if (!cfg_enabled(td->attrs, features, diags, td->span)) continue;
                ItemId id = add_item(ItemKind::Trait, td->name, module, to_vis(td->vis), td->span);
                declare(module, td->name, id);
                pending_traits.push_back({td, id, module});
            } else if (const auto* ib = std::get_if<ast::ImplBlock>(&it.kind)) {
                if (!cfg_enabled(ib->attrs, features, diags, ib->span)) continue;
                pending_impls.push_back({ib, module});
            } else if (const auto* md = std::get_if<ast::Module>(&it.kind)) {
                if (!cfg_enabled(md->attrs, features, diags, md->span)) continue;
                ItemId id = add_item(ItemKind::Module, md->name, module, to_vis(md->vis), md->span);
                declare(module, md->name, id);
                collect_module(md->items, id);
            } else if (const auto* ud = std::get_if<ast::UseDecl>(&it.kind)) {
                std::string alias = ud->rename.empty() ? ud->path.tail() : ud->rename;
                ItemId id = add_item(ItemKind::ReExport, alias, module, to_vis(ud->vis), ud->span);
                pending_uses.push_back({ud, id, module});
            } else if (const auto* st = std::get_if<ast::StaticDef>(&it.kind)) {
                ItemId id = add_item(ItemKind::Struct, st->name, module, to_vis(st->vis), st->span);
                m.items[id].unsupported = true;
                m.items[id].unsupported_note = st->is_const ? "const item" : "static item";
            } else if (const auto* mcd = std::get_if<ast::MacroDef>(&it.kind)) {
                ItemId id = add_item(ItemKind::Struct, mcd->name, module, Vis::Private, mcd->span);
                m.items[id].unsupported = true;
                m.items[id].unsupported_note = "macro definition";
            }
        }
    }

    // ---- name resolution -------------------------------------------------

    ItemId resolve_path(ItemId module, const ast::TypePath& path) const {
        if (path.segments.empty()) return kNoItem;
        ItemId scope = module;
        // leading `crate::`
        size_t start = 0;
        if (path.segments[0].name == "crate") {
            scope = index.root_module;
            start = 1;
        }
        ItemId cur = kNoItem;
        for (size_t i = start; i < path.segments.size(); ++i) {
            const std::string& seg = path.segments[i].name;
            ItemId found = lookup_from(scope, seg, i == start);
            if (found == kNoItem) return kNoItem;
            found = resolve_reexport(found);
            cur = found;
            scope = found; // only meaningful when `found` is a module
        }
        return cur;
    }

    ItemId lookup_from(ItemId module, const std::string& name, bool allow_parents) const {
        ItemId cur = module;
        while (cur != kNoItem) {
            auto mod_it = index.module_scope.find(cur);
            if (mod_it != index.module_scope.end()) {
                auto it = mod_it->second.find(name);
                if (it != mod_it->second.end()) return it->second;
            }
            if (!allow_parents) break;
            cur = m.items[cur].parent_module;
        }
        return kNoItem;
    }

    ItemId resolve_reexport(ItemId id) const {
        int fuel = 8; // re-export chains are short; cycles bail out
        while (id != kNoItem && m.items[id].kind == ItemKind::ReExport && fuel-- > 0)
            id = m.items[id].reexport_target;
        return id;
    }

    TraitId resolve_trait_ref(ItemId module, const ast::TraitRef& tr) const {
        TraitId out;
        out.name = tr.name();
        ItemId id = resolve_path(module, tr.path);
        if (id != kNoItem && m.trait_by_item.count(id)) out.id = id;
        return out;
    }

    // ---- type descriptors ------------------------------------------------

    TypeDescriptor resolve_type(const ast::Type& ty, ItemId module,
                                const std::vector<GenericParam>& generics,
                                const TypeDescriptor* self_ty) const {
        TypeDescriptor d;
        if (const auto* p = std::get_if<ast::Type::Path>(&ty.kind)) {
            return resolve_path_type(p->path, module, generics, self_ty);
        }
        if (const auto* r = std::get_if<ast::Type::Ref>(&ty.kind)) {
            TypeDescriptor inner = resolve_type(*r->inner, module, generics, self_ty);
            if (inner.shape == Shape::StringSlice) return inner; // &str normalizes to string-slice
            d.shape = Shape::Reference;
            d.is_mut = r->is_mut;
            d.children.push_back(std::move(inner));
            return d;
        }
        if (const auto* r = std::get_if<ast::Type::RawPtr>(&ty.kind)) {
            d.shape = Shape::RawPointer;
            d.is_mut = r->is_mut;
            d.children.push_back(resolve_type(*r->inner, module, generics, self_ty));
            return d;
        }
        if (const auto* s = std::get_if<ast::Type::Slice>(&ty.kind)) {
            d.shape = Shape::Slice;
            d.children.push_back(resolve_type(*s->inner, module, generics, self_ty));
            return d;
        }
        if (const auto* a = std::get_if<ast::Type::Array>(&ty.kind)) {
            d.shape = Shape::Array;
            d.array_len = a->len;
            d.children.push_back(resolve_type(*a->inner, module, generics, self_ty));
            return d;
        }
        if (const auto* t = std::get_if<ast::Type::Tuple>(&ty.kind)) {
            if (t->members.empty()) {
                d.shape = Shape::Unit;
                return d;
            }
            d.shape = Shape::Tuple;
            for (const auto& mty : t->members)
                d.children.push_back(resolve_type(*mty, module, generics, self_ty));
            return d;
        }
        if (const auto* o = std::get_if<ast::Type::TraitObject>(&ty.kind)) {
            d.shape = Shape::TraitObject;
            d.trait_ref = resolve_trait_ref(module, o->trait_ref);
            d.name = "dyn " + d.trait_ref.name;
            return d;
        }
        d.shape = Shape::Unresolved;
        d.name = "_";
        return d;
    }

    TypeDescriptor resolve_path_type(const ast::TypePath& path, ItemId module,
                                     const std::vector<GenericParam>& generics,
                                     const TypeDescriptor* self_ty) const {
        TypeDescriptor d;
        const std::string& head = path.segments[0].name;

        auto resolve_args = [&](const ast::PathSegment& seg) {
            std::vector<TypeDescriptor> out;
            for (const auto& a : seg.type_args) out.push_back(resolve_type(*a, module, generics, self_ty));
            return out;
        };

        if (path.segments.size() == 1) {
            const auto& seg = path.segments[0];
            if (head == "Self" && self_ty) return *self_ty;
            if (is_primitive_name(head)) {
                d.shape = Shape::Primitive;
                d.name = head;
                return d;
            }
            if (head == "str") {
                d.shape = Shape::StringSlice;
                return d;
            }
            if (head == "String") {
                d.shape = Shape::StdContainer;
                d.container = StdContainerKind::String;
                return d;
            }
            if (head == "Vec" || head == "Box" || head == "Option" || head == "Result") {
                d.shape = Shape::StdContainer;
                d.container = head == "Vec"      ? StdContainerKind::Vec
                              : head == "Box"    ? StdContainerKind::BoxT
                              : head == "Option" ? StdContainerKind::Option
                                                 : StdContainerKind::Result;
                d.children = resolve_args(seg);
                return d;
            }
            for (const auto& g : generics) {
                if (g.name == head) {
                    d.shape = Shape::GenericParam;
                    d.name = head;
                    return d;
                }
            }
            ItemId id = resolve_path(module, path);
            if (id != kNoItem &&
                (m.items[id].kind == ItemKind::Struct || m.items[id].kind == ItemKind::Enum) &&
                !m.items[id].unsupported && !m.trait_by_item.count(id)) {
                d.shape = Shape::Complex;
                d.complex_item = id;
                d.name = m.items[id].name;
                d.children = resolve_args(seg);
                return d;
            }
            d.shape = Shape::Unresolved;
            d.name = head;
            return d;
        }

        // `T::Assoc` — associated type projection on a generic parameter
        if (path.segments.size() == 2) {
            for (const auto& g : generics) {
                if (g.name == head) {
                    d.shape = Shape::AssociatedType;
                    d.name = head + "::" + path.segments[1].name;
                    // find the bound trait declaring this associated type
                    for (const auto& b : g.bounds) {
                        if (b.id == kNoItem) continue;
                        const TraitRecord* tr = m.trait_for(b.id);
                        if (!tr) continue;
                        for (const auto& at : tr->associated_types) {
                            if (at.name == path.segments[1].name) {
                                d.trait_ref = b;
                                return d;
                            }
                        }
                    }
                    d.trait_ref.name = "";
                    return d;
                }
            }
        }

        ItemId id = resolve_path(module, path);
        if (id != kNoItem &&
            (m.items[id].kind == ItemKind::Struct || m.items[id].kind == ItemKind::Enum) &&
            !m.trait_by_item.count(id)) {
            d.shape = Shape::Complex;
            d.complex_item = id;
            d.name = m.items[id].name;
            d.children = resolve_args(path.segments.back());
            return d;
        }
        d.shape = Shape::Unresolved;
        std::string joined;
        for (size_t i = 0; i < path.segments.size(); ++i) {
            if (i) joined += "::";
            joined += path.segments[i].name;
        }
        d.name = joined;
        return d;
    }

    std::vector<GenericParam> resolve_generics(const ast::Generics& g, ItemId module,
                                               const std::vector<GenericParam>& outer) const {
        std::vector<GenericParam> out = outer;
        // declare all names first: Fn-sugar bounds may reference siblings
        size_t first_new = out.size();
        for (const auto& p : g.params) {
            GenericParam gp;
            gp.name = p.name;
            gp.from_where_clause = p.from_where_clause;
            out.push_back(std::move(gp));
        }
        size_t ast_index = 0;
        for (size_t oi = first_new; oi < out.size(); ++oi, ++ast_index) {
            const auto& p = g.params[ast_index];
            GenericParam& gp = out[oi];
            for (const auto& b : p.bounds) {
                if (b.has_fn_sugar) {
                    gp.is_fn_like = true;
                    for (const auto& fp : b.fn_params)
                        gp.fn_sugar_params.push_back(resolve_type(*fp, module, out, nullptr));
                    if (b.fn_ret)
                        gp.fn_sugar_ret = resolve_type(*b.fn_ret, module, out, nullptr);
                    else
                        gp.fn_sugar_ret = TypeDescriptor{}; // unit
                    continue;
                }
                TraitId tid = resolve_trait_ref(module, b);
                // dedupe
                bool dup = false;
                for (const auto& e : gp.bounds) dup = dup || e == tid;
                if (!dup) gp.bounds.push_back(tid);
                // Tr<Assoc = Ty> bindings become required-type constraints
                for (const auto& [assoc, ty] : b.assoc_bindings) {
                    AssocConstraint ac;
                    ac.assoc_name = assoc;
                    ac.on_trait = tid;
                    std::vector<GenericParam> none;
                    ac.required = resolve_type(*ty, module, none, nullptr);
                    gp.assoc_constraints.push_back(std::move(ac));
                }
            }
        }
        // where T::Assoc: Bound clauses
        for (const auto& aw : g.assoc_wheres) {
            for (auto& gp : out) {
                if (gp.name != aw.param) continue;
                AssocConstraint ac;
                ac.assoc_name = aw.assoc;
                for (const auto& b : aw.bounds) ac.bounds.push_back(resolve_trait_ref(module, b));
                // find the declaring trait among the param's bounds
                for (const auto& bound : gp.bounds) {
                    if (bound.id == kNoItem) continue;
                    if (const TraitRecord* tr = m.trait_for(bound.id)) {
                        for (const auto& at : tr->associated_types)
                            if (at.name == aw.assoc) ac.on_trait = bound;
                    }
                }
                gp.assoc_constraints.push_back(std::move(ac));
            }
        }
        return out;
    }

    // ---- pass 2: records -------------------------------------------------

    void collect_unsafe_spans(const ast::Block& block, std::vector<Span>& out) const;
    void collect_unsafe_spans_expr(const ast::Expr& e, std::vector<Span>& out) const;

    FnSignature make_signature(const ast::FnDecl& fn, ItemId module,
                               const std::vector<GenericParam>& generics,
                               const TypeDescriptor* self_ty) const {
        FnSignature sig;
        sig.name = fn.name;
        sig.self_kind = to_self(fn.self_kind);
        sig.is_unsafe = fn.is_unsafe;
        auto all_generics = resolve_generics(fn.generics, module, generics);
        for (const auto& p : fn.params) {
            ParamDescriptor pd;
            pd.name = p.name;
            pd.type = resolve_type(*p.ty, module, all_generics, self_ty);
            sig.params.push_back(std::move(pd));
        }
        if (fn.ret)
            sig.ret = resolve_type(*fn.ret, module, all_generics, self_ty);
        else
            sig.ret = TypeDescriptor{}; // unit
        return sig;
    }

    int32_t make_fn_record(const ast::FnDecl& fn, ItemId item, ItemId module,
                           const std::vector<GenericParam>& outer_generics,
                           const TypeDescriptor* self_ty, int32_t owning_impl,
                           int32_t owning_trait) {
        FunctionRecord rec;
        rec.item = item;
        rec.is_unsafe_fn = fn.is_unsafe;
        rec.self_kind = to_self(fn.self_kind);
        rec.owning_impl = owning_impl;
        rec.owning_trait = owning_trait;
        rec.body_ast = &fn;
        rec.generic_params = resolve_generics(fn.generics, module, outer_generics);
        for (const auto& p : fn.params) {
            ParamDescriptor pd;
            pd.name = p.name;
            pd.type = resolve_type(*p.ty, module, rec.generic_params, self_ty);
            rec.params.push_back(std::move(pd));
        }
        rec.ret = fn.ret ? resolve_type(*fn.ret, module, rec.generic_params, self_ty) : TypeDescriptor{};
        if (fn.body && !fn.is_unsafe) collect_unsafe_spans(*fn.body, rec.unsafe_block_spans);
        int32_t idx = static_cast<int32_t>(m.functions.size());
        m.functions.push_back(std::move(rec));
        m.fn_record_by_item[item] = idx;
        return idx;
    }

    void build_traits() {
        // first register all trait records so bounds can resolve by item id
        for (auto& pt : pending_traits) {
            TraitRecord tr;
            tr.id = pt.item;
            tr.name = pt.def->name;
            tr.is_unsafe_trait = pt.def->is_unsafe;
            m.trait_by_item[pt.item] = static_cast<int32_t>(m.traits.size());
            m.traits.push_back(std::move(tr));
        }
        for (auto& pt : pending_traits) {
            TraitRecord& tr = m.traits[m.trait_by_item[pt.item]];
            for (const auto& st : pt.def->supertraits) {
                TraitId tid = resolve_trait_ref(pt.module, st);
                tr.supertraits.push_back(tid);
            }
            for (const auto& at : pt.def->assoc_types) {
                AssociatedTypeDecl decl;
                decl.name = at.name;
                for (const auto& b : at.bounds) decl.bounds.push_back(resolve_trait_ref(pt.module, b));
                tr.associated_types.push_back(std::move(decl));
            }
            std::vector<GenericParam> none;
            for (const auto& fn : pt.def->fns) {
                FnSignature sig = make_signature(fn, pt.module, none, nullptr);
                if (fn.body) {
                    tr.default_fns.push_back(sig);
                    ItemId fid = add_item(ItemKind::Function, fn.name, pt.module, Vis::Private, fn.span);
                    int32_t rec = make_fn_record(fn, fid, pt.module, none, nullptr, -1,
                                                 m.trait_by_item[pt.item]);
                    tr.default_fn_records.push_back(rec);
                } else {
                    tr.required_fns.push_back(sig);
                }
            }
            check_supertrait_cycle(tr);
        }
    }

    void check_supertrait_cycle(const TraitRecord& start) {
        std::set<ItemId> seen{start.id};
        std::vector<ItemId> stack;
        for (const auto& s : start.supertraits)
            if (s.id != kNoItem) stack.push_back(s.id);
        while (!stack.empty()) {
            ItemId id = stack.back();
            stack.pop_back();
            if (id == start.id) {
                diags.error("supertrait cycle involving trait '" + start.name + "'",
                            m.items[start.id].span);
                return;
            }
            if (!seen.insert(id).second) continue;
            if (const TraitRecord* tr = m.trait_for(id))
                for (const auto& s : tr->supertraits)
                    if (s.id != kNoItem) stack.push_back(s.id);
        }
    }

    void build_fns() {
        std::vector<GenericParam> none;
        for (auto& pf : pending_fns)
            make_fn_record(*pf.decl, pf.item, pf.module, none, nullptr, -1, -1);
    }

    void build_adts() {
        for (auto& ps : pending_structs) {
            auto generics = resolve_generics(ps.def->generics, ps.module, {});
            std::vector<FieldRecord> fields;
            int tuple_idx = 0;
            for (const auto& f : ps.def->fields) {
                FieldRecord fr;
                fr.name = f.name.empty() ? std::to_string(tuple_idx++) : f.name;
                fr.type = resolve_type(*f.ty, ps.module, generics, nullptr);
                fr.vis = to_vis(f.vis);
                fields.push_back(std::move(fr));
            }
            m.struct_fields[ps.item] = std::move(fields);
        }
        for (auto& pe : pending_enums) {
            auto generics = resolve_generics(pe.def->generics, pe.module, {});
            std::vector<VariantRecord> variants;
            for (const auto& v : pe.def->variants) {
                VariantRecord vr;
                vr.name = v.name;
                for (const auto& t : v.fields)
                    vr.payload.push_back(resolve_type(*t, pe.module, generics, nullptr));
                variants.push_back(std::move(vr));
            }
            m.enum_variants[pe.item] = std::move(variants);
        }
    }

    void build_impls() {
        for (auto& pi : pending_impls) {
            const ast::ImplBlock& ib = *pi.block;
            ImplRecord rec;
            rec.is_unsafe_impl = ib.is_unsafe;
            rec.generic_params = resolve_generics(ib.generics, pi.module, {});
            rec.self_type = resolve_type(*ib.self_ty, pi.module, rec.generic_params, nullptr);
            if (ib.trait_ref) rec.trait_ref = resolve_trait_ref(pi.module, *ib.trait_ref);
            for (const auto& ab : ib.assoc_types) {
                AssocBinding b;
                b.name = ab.name;
                b.type = resolve_type(*ab.ty, pi.module, rec.generic_params, nullptr);
                rec.assoc_types.push_back(std::move(b));
            }
            int32_t impl_idx = static_cast<int32_t>(m.impls.size());
            m.impls.push_back(rec);

            for (const auto& fn : ib.fns) {
                ItemId fid = add_item(ItemKind::Function, fn.name, pi.module, to_vis(fn.vis), fn.span);
                int32_t fr = make_fn_record(fn, fid, pi.module, m.impls[impl_idx].generic_params,
                                            &m.impls[impl_idx].self_type, impl_idx, -1);
                m.impls[impl_idx].fn_records.push_back(fr);
            }

            if (m.impls[impl_idx].self_type.shape == Shape::Complex) {
                index.impls_by_complex[m.impls[impl_idx].self_type.complex_item].push_back(impl_idx);
            }
            if (rec.trait_ref && rec.trait_ref->id != kNoItem) {
                index.impls_by_trait[rec.trait_ref->id].push_back(impl_idx);
                validate_trait_impl(m.impls[impl_idx], pi.block->span);
            }
        }
    }

    void validate_trait_impl(const ImplRecord& rec, Span sp) {
        const TraitRecord* tr = m.trait_for(rec.trait_ref->id);
        if (!tr) return;
        for (const auto& req : tr->required_fns) {
            bool found = false;
            for (int32_t fr : rec.fn_records)
                if (m.items[m.functions[fr].item].name == req.name) found = true;
            if (!found)
                diags.warning("impl of trait '" + tr->name + "' for '" + rec.self_type.display() +
                                  "' is missing required fn '" + req.name + "'",
                              sp);
        }
    }

    void resolve_uses() {
        // two rounds: plain targets first, then re-exports of re-exports
        for (int round = 0; round < 2; ++round) {
            for (auto& pu : pending_uses) {
                if (m.items[pu.item].reexport_target != kNoItem) continue;
                ItemId target = resolve_path(pu.module, pu.decl->path);
                if (target != kNoItem) {
                    if (pu.decl->is_glob) {
                        // glob of an in-crate module: merge its names into scope
                        if (m.items[target].kind == ItemKind::Module) {
                            auto src = index.module_scope.find(target);
                            if (src != index.module_scope.end())
                                for (const auto& [name, id] : src->second)
                                    index.module_scope[pu.module].emplace(name, id);
                        }
                        m.items[pu.item].reexport_target = target;
                        continue;
                    }
                    m.items[pu.item].reexport_target = target;
                    declare(pu.module, m.items[pu.item].name, pu.item);
                } else if (round == 1) {
                    // imports of external crates (and the fuzz runtime) resolve
                    // outside this model; only broken public re-exports warn
                    m.items[pu.item].unsupported = true;
                    m.items[pu.item].unsupported_note = "external import";
                    if (!pu.decl->is_glob && pu.decl->vis == ast::Visibility::Public)
                        diags.warning("public re-export target not found", pu.decl->span);
                }
            }
        }
    }

    // ---- exports ----------------------------------------------------------

    void compute_exports() {
        // modules reachable from outside, with their shortest access path
        std::map<ItemId, std::string> visible_modules;
        std::vector<std::pair<ItemId, std::string>> queue;
        visible_modules[index.root_module] = "";
        queue.emplace_back(index.root_module, "");

        auto path_join = [](const std::string& a, const std::string& b) {
            return a.empty() ? b : a + "::" + b;
        };
        auto better = [](const std::string& cand, const std::string& cur) {
            size_t cs = std::count(cand.begin(), cand.end(), ':');
            size_t us = std::count(cur.begin(), cur.end(), ':');
            if (cs != us) return cs < us;
            return cand < cur;
        };
        auto record_export = [&](ItemId id, const std::string& path) {
            auto it = m.export_table.find(id);
            if (it == m.export_table.end() || better(path, it->second)) m.export_table[id] = path;
        };

        // iterate to fixpoint: re-exports can make more modules visible
        bool changed = true;
        int fuel = 16;
        while (changed && fuel-- > 0) {
            changed = false;
            for (size_t qi = 0; qi < queue.size(); ++qi) {
                auto [mod, prefix] = queue[qi];
                for (const auto& rec : m.items) {
                    if (rec.parent_module != mod) continue;
                    if (rec.kind == ItemKind::Module) {
                        if (rec.declared_visibility == Vis::Public) {
                            std::string p = path_join(prefix, rec.name);
                            auto it = visible_modules.find(rec.id);
                            if (it == visible_modules.end() || better(p, it->second)) {
                                visible_modules[rec.id] = p;
                                queue.emplace_back(rec.id, p);
                                changed = true;
                            }
                        }
                    } else if (rec.kind == ItemKind::ReExport) {
                        if (rec.declared_visibility != Vis::Public || rec.reexport_target == kNoItem)
                            continue;
                        ItemId tgt = rec.reexport_target;
                        // chase chained re-exports
                        int chase = 8;
                        while (tgt != kNoItem && m.items[tgt].kind == ItemKind::ReExport && chase-- > 0)
                            tgt = m.items[tgt].reexport_target;
                        if (tgt == kNoItem) continue;
                        std::string p = path_join(prefix, rec.name);
                        if (m.items[tgt].kind == ItemKind::Module) {
                            auto it = visible_modules.find(tgt);
                            if (it == visible_modules.end() || better(p, it->second)) {
                                visible_modules[tgt] = p;
                                queue.emplace_back(tgt, p);
                                changed = true;
                            }
                        } else {
                            record_export(tgt, p);
                        }
                    } else if (rec.declared_visibility == Vis::Public && !rec.unsupported) {
                        // impl/trait methods are not module-level names
                        if (rec.kind == ItemKind::Function) {
                            auto fr = m.fn_record_by_item.find(rec.id);
                            if (fr != m.fn_record_by_item.end() &&
                                (m.functions[fr->second].owning_impl >= 0 ||
                                 m.functions[fr->second].owning_trait >= 0))
                                continue;
                        }
                        record_export(rec.id, path_join(prefix, rec.name));
                    }
                }
            }
        }

        // impl fns: exported when the self type (and trait, if any) is exported
        for (size_t ii = 0; ii < m.impls.size(); ++ii) {
            const ImplRecord& impl = m.impls[ii];
            if (impl.self_type.shape != Shape::Complex) continue;
            auto self_path = m.public_path(impl.self_type.complex_item);
            if (!self_path) continue;
            bool trait_ok = true;
            std::string trait_path;
            if (impl.trait_ref) {
                if (impl.trait_ref->id == kNoItem) {
                    trait_ok = true; // external trait: assume importable by users
                    trait_path = impl.trait_ref->name;
                } else if (auto tp = m.public_path(impl.trait_ref->id)) {
                    trait_path = *tp;
                } else {
                    trait_ok = false;
                }
            }
            if (!trait_ok) continue;
            for (int32_t fr : impl.fn_records) {
                const FunctionRecord& fn = m.functions[fr];
                const ItemRecord& item = m.items[fn.item];
                if (!impl.trait_ref && item.declared_visibility != Vis::Public) continue;
                std::string p = impl.trait_ref
                                    ? "<" + *self_path + " as " + trait_path + ">::" + item.name
                                    : *self_path + "::" + item.name;
                record_export(fn.item, p);
            }
        }

        // default trait methods: callable externally on any exported impl'ing type
        for (const auto& tr : m.traits) {
            if (!m.public_path(tr.id)) continue;
            for (int32_t fr : tr.default_fn_records) {
                const FunctionRecord& fn = m.functions[fr];
                bool any_public_impl = false;
                auto it = index.impls_by_trait.find(tr.id);
                if (it != index.impls_by_trait.end()) {
                    for (int32_t ii : it->second) {
                        const ImplRecord& impl = m.impls[ii];
                        if (impl.self_type.shape == Shape::Complex &&
                            m.is_exported(impl.self_type.complex_item))
                            any_public_impl = true;
                    }
                }
                if (any_public_impl)
                    record_export(fn.item, *m.public_path(tr.id) + "::" + m.items[fn.item].name);
            }
        }
    }
};

void Builder::collect_unsafe_spans_expr(const ast::Expr& e, std::vector<Span>& out) const {
    using namespace ast;
    if (const auto* b = std::get_if<Expr::BlockExpr>(&e.kind)) {
        if (b->is_unsafe) {
            out.push_back(e.span);
            return; // nested unsafe blocks add nothing
        }
        collect_unsafe_spans(*b->block, out);
        return;
    }
    auto walk = [&](const ExprPtr& p) {
        if (p) collect_unsafe_spans_expr(*p, out);
    };
    std::visit(
        [&](const auto& node) {
            using T = std::decay_t<decltype(node)>;
            if constexpr (std::is_same_v<T, Expr::Unary>) walk(node.operand);
            else if constexpr (std::is_same_v<T, Expr::RefExpr>) walk(node.operand);
            else if constexpr (std::is_same_v<T, Expr::Binary>) { walk(node.lhs); walk(node.rhs); }
            else if constexpr (std::is_same_v<T, Expr::Assign>) { walk(node.lhs); walk(node.rhs); }
            else if constexpr (std::is_same_v<T, Expr::Call>) {
                walk(node.callee);
                for (const auto& a : node.args) walk(a);
            } else if constexpr (std::is_same_v<T, Expr::MethodCall>) {
                walk(node.receiver);
                for (const auto& a : node.args) walk(a);
            } else if constexpr (std::is_same_v<T, Expr::Field>) walk(node.base);
            else if constexpr (std::is_same_v<T, Expr::Index>) { walk(node.base); walk(node.index); }
            else if constexpr (std::is_same_v<T, Expr::StructLit>) {
                for (const auto& f : node.fields) walk(f.second);
            } else if constexpr (std::is_same_v<T, Expr::TupleExpr>) {
                for (const auto& a : node.elems) walk(a);
            } else if constexpr (std::is_same_v<T, Expr::ArrayExpr>) {
                for (const auto& a : node.elems) walk(a);
            } else if constexpr (std::is_same_v<T, Expr::ArrayRepeat>) { walk(node.elem); walk(node.count); }
            else if constexpr (std::is_same_v<T, Expr::If>) {
                walk(node.cond);
                collect_unsafe_spans(*node.then_block, out);
                walk(node.else_expr);
            } else if constexpr (std::is_same_v<T, Expr::IfLet>) {
                walk(node.scrutinee);
                collect_unsafe_spans(*node.then_block, out);
                walk(node.else_expr);
            } else if constexpr (std::is_same_v<T, Expr::Match>) {
                walk(node.scrutinee);
                for (const auto& arm : node.arms) {
                    if (arm.guard) collect_unsafe_spans_expr(*arm.guard, out);
                    collect_unsafe_spans_expr(*arm.body, out);
                }
            } else if constexpr (std::is_same_v<T, Expr::While>) {
                walk(node.cond);
                collect_unsafe_spans(*node.body, out);
            } else if constexpr (std::is_same_v<T, Expr::WhileLet>) {
                walk(node.scrutinee);
                collect_unsafe_spans(*node.body, out);
            } else if constexpr (std::is_same_v<T, Expr::Loop>) {
                collect_unsafe_spans(*node.body, out);
            } else if constexpr (std::is_same_v<T, Expr::For>) {
                walk(node.iter);
                collect_unsafe_spans(*node.body, out);
            } else if constexpr (std::is_same_v<T, Expr::Return>) walk(node.value);
            else if constexpr (std::is_same_v<T, Expr::Closure>) walk(node.body);
            else if constexpr (std::is_same_v<T, Expr::MacroCall>) {
                for (const auto& a : node.args) walk(a);
            } else if constexpr (std::is_same_v<T, Expr::Cast>) walk(node.operand);
            else if constexpr (std::is_same_v<T, Expr::Range>) { walk(node.lo); walk(node.hi); }
            else if constexpr (std::is_same_v<T, Expr::Question>) walk(node.inner);
            else {
                (void)node;
            }
        },
        e.kind);
}

void Builder::collect_unsafe_spans(const ast::Block& block, std::vector<Span>& out) const {
    for (const auto& st : block.stmts) {
        if (const auto* let = std::get_if<ast::Stmt::Let>(&st.kind)) {
            if (let->init) collect_unsafe_spans_expr(*let->init, out);
        } else if (const auto* es = std::get_if<ast::Stmt::ExprStmt>(&st.kind)) {
            collect_unsafe_spans_expr(*es->expr, out);
        }
    }
}

} // namespace

// ------------------------------------------------------------- operations

LoadedCrate build_model_from_ast(std::string crate_name, std::shared_ptr<ast::Crate> crate,
                                 std::shared_ptr<SourceMap> sources,
                                 const std::set<std::string>& features, DiagnosticSink diags) {
    LoadedCrate out;
    out.sources = std::move(sources);
    out.ast = std::move(crate);
    out.diagnostics = std::move(diags);
    out.model.crate_name = crate_name;
    out.model.feature_set = features;

    Builder b{out.model, out.index, out.diagnostics, out.model.feature_set};
    ItemId root = b.add_item(ItemKind::Module, crate_name, kNoItem, Vis::Public, Span{});
    out.index.root_module = root;
    b.collect_module(out.ast->items, root);
    b.resolve_uses();
    b.build_traits();
    b.build_adts();
    b.build_fns();
    b.build_impls();
    b.resolve_uses(); // late re-export targets (impl fns do not participate)
    b.compute_exports();
    out.diagnostics.resolve_locations(*out.sources);
    return out;
}

bool effective_visibility(ItemId item, const CrateModel& model) {
    if (item < 0 || static_cast<size_t>(item) >= model.items.size())
        throw std::out_of_range("effective_visibility: unknown item id");
    return model.export_table.count(item) > 0;
}

std::vector<UnsafeSite> locate_unsafe(const CrateModel& model) {
    std::vector<UnsafeSite> out;
    for (size_t i = 0; i < model.functions.size(); ++i) {
        const FunctionRecord& fn = model.functions[i];
        if (fn.is_unsafe_fn) {
            out.push_back(UnsafeSite{static_cast<int32_t>(i), model.items[fn.item].span});
            continue;
        }
        for (const auto& sp : fn.unsafe_block_spans)
            out.push_back(UnsafeSite{static_cast<int32_t>(i), sp});
    }
    return out;
}

// ------------------------------------------------------------------- json

static ordered_json span_json(const Span& s) {
    return ordered_json{{"file", s.file}, {"lo", s.lo}, {"hi", s.hi}};
}
static Span span_from_json(const ordered_json& j) {
    return Span{j.at("file").get<uint32_t>(), j.at("lo").get<uint32_t>(), j.at("hi").get<uint32_t>()};
}

static ordered_json trait_id_json(const TraitId& t) {
    return ordered_json{{"id", t.id}, {"name", t.name}};
}
static TraitId trait_id_from(const ordered_json& j) {
    return TraitId{j.at("id").get<ItemId>(), j.at("name").get<std::string>()};
}

static ordered_json type_json(const TypeDescriptor& t) {
    ordered_json j;
    j["shape"] = static_cast<int>(t.shape);
    if (!t.name.empty()) j["name"] = t.name;
    if (t.shape == Shape::StdContainer) j["container"] = static_cast<int>(t.container);
    if (t.complex_item != kNoItem) j["complex_item"] = t.complex_item;
    if (t.trait_ref.id != kNoItem || !t.trait_ref.name.empty()) j["trait"] = trait_id_json(t.trait_ref);
    if (t.is_mut) j["mut"] = true;
    if (t.array_len) j["len"] = t.array_len;
    if (!t.children.empty()) {
        ordered_json ch = ordered_json::array();
        for (const auto& c : t.children) ch.push_back(type_json(c));
        j["children"] = ch;
    }
    return j;
}

static TypeDescriptor type_from_json(const ordered_json& j) {
    TypeDescriptor t;
    t.shape = static_cast<Shape>(j.at("shape").get<int>());
    if (j.contains("name")) t.name = j.at("name").get<std::string>();
    if (j.contains("container")) t.container = static_cast<StdContainerKind>(j.at("container").get<int>());
    if (j.contains("complex_item")) t.complex_item = j.at("complex_item").get<ItemId>();
    if (j.contains("trait")) t.trait_ref = trait_id_from(j.at("trait"));
    if (j.contains("mut")) t.is_mut = j.at("mut").get<bool>();
    if (j.contains("len")) t.array_len = j.at("len").get<uint64_t>();
    if (j.contains("children"))
        for (const auto& c : j.at("children")) t.children.push_back(type_from_json(c));
    return t;
}

static ordered_json generic_json(const GenericParam& g) {
    ordered_json j;
    j["name"] = g.name;
    ordered_json bounds = ordered_json::array();
    for (const auto& b : g.bounds) bounds.push_back(trait_id_json(b));
    j["bounds"] = bounds;
    if (!g.assoc_constraints.empty()) {
        ordered_json acs = ordered_json::array();
        for (const auto& ac : g.assoc_constraints) {
            ordered_json aj;
            aj["assoc"] = ac.assoc_name;
            aj["trait"] = trait_id_json(ac.on_trait);
            ordered_json bs = ordered_json::array();
            for (const auto& b : ac.bounds) bs.push_back(trait_id_json(b));
            aj["bounds"] = bs;
            if (ac.required) aj["required"] = type_json(*ac.required);
            acs.push_back(aj);
        }
        j["assoc_constraints"] = acs;
    }
    j["where"] = g.from_where_clause;
    if (g.is_fn_like) {
        j["fn_like"] = true;
        ordered_json ps = ordered_json::array();
        for (const auto& p : g.fn_sugar_params) ps.push_back(type_json(p));
        j["fn_params"] = ps;
        if (g.fn_sugar_ret) j["fn_ret"] = type_json(*g.fn_sugar_ret);
    }
    return j;
}

static GenericParam generic_from_json(const ordered_json& j) {
    GenericParam g;
    g.name = j.at("name").get<std::string>();
    for (const auto& b : j.at("bounds")) g.bounds.push_back(trait_id_from(b));
    if (j.contains("assoc_constraints")) {
        for (const auto& aj : j.at("assoc_constraints")) {
            AssocConstraint ac;
            ac.assoc_name = aj.at("assoc").get<std::string>();
            ac.on_trait = trait_id_from(aj.at("trait"));
            for (const auto& b : aj.at("bounds")) ac.bounds.push_back(trait_id_from(b));
            if (aj.contains("required")) ac.required = type_from_json(aj.at("required"));
            g.assoc_constraints.push_back(std::move(ac));
        }
    }
    g.from_where_clause = j.at("where").get<bool>();
    if (j.contains("fn_like")) {
        g.is_fn_like = true;
        for (const auto& p : j.at("fn_params")) g.fn_sugar_params.push_back(type_from_json(p));
        if (j.contains("fn_ret")) g.fn_sugar_ret = type_from_json(j.at("fn_ret"));
    }
    return g;
}

static ordered_json sig_json(const FnSignature& s) {
    ordered_json j;
    j["name"] = s.name;
    ordered_json ps = ordered_json::array();
    for (const auto& p : s.params) ps.push_back({{"name", p.name}, {"type", type_json(p.type)}});
    j["params"] = ps;
    j["ret"] = type_json(s.ret);
    j["self"] = static_cast<int>(s.self_kind);
    j["unsafe"] = s.is_unsafe;
    return j;
}

static FnSignature sig_from_json(const ordered_json& j) {
    FnSignature s;
    s.name = j.at("name").get<std::string>();
    for (const auto& p : j.at("params"))
        s.params.push_back(ParamDescriptor{p.at("name").get<std::string>(), type_from_json(p.at("type"))});
    s.ret = type_from_json(j.at("ret"));
    s.self_kind = static_cast<SelfKind>(j.at("self").get<int>());
    s.is_unsafe = j.at("unsafe").get<bool>();
    return s;
}

nlohmann::ordered_json CrateModel::to_json() const {
    ordered_json j;
    j["schema_version"] = 1;
    j["crate_name"] = crate_name;
    j["features"] = feature_set;

    ordered_json items_j = ordered_json::array();
    for (const auto& it : items) {
        ordered_json ij;
        ij["id"] = it.id;
        ij["kind"] = static_cast<int>(it.kind);
        ij["name"] = it.name;
        ij["parent"] = it.parent_module;
        ij["vis"] = static_cast<int>(it.declared_visibility);
        ij["span"] = span_json(it.span);
        if (it.unsupported) {
            ij["unsupported"] = true;
            ij["note"] = it.unsupported_note;
        }
        if (it.reexport_target != kNoItem) ij["target"] = it.reexport_target;
        items_j.push_back(ij);
    }
    j["items"] = items_j;

    ordered_json fns_j = ordered_json::array();
    for (const auto& fn : functions) {
        ordered_json fj;
        fj["item"] = fn.item;
        ordered_json ps = ordered_json::array();
        for (const auto& p : fn.params) ps.push_back({{"name", p.name}, {"type", type_json(p.type)}});
        fj["params"] = ps;
        fj["ret"] = type_json(fn.ret);
        fj["unsafe_fn"] = fn.is_unsafe_fn;
        ordered_json spans = ordered_json::array();
        for (const auto& s : fn.unsafe_block_spans) spans.push_back(span_json(s));
        fj["unsafe_blocks"] = spans;
        fj["self"] = static_cast<int>(fn.self_kind);
        ordered_json gs = ordered_json::array();
        for (const auto& g : fn.generic_params) gs.push_back(generic_json(g));
        fj["generics"] = gs;
        fj["impl"] = fn.owning_impl;
        fj["trait"] = fn.owning_trait;
        fns_j.push_back(fj);
    }
    j["functions"] = fns_j;

    ordered_json traits_j = ordered_json::array();
    for (const auto& tr : traits) {
        ordered_json tj;
        tj["id"] = tr.id;
        tj["name"] = tr.name;
        tj["unsafe"] = tr.is_unsafe_trait;
        ordered_json sts = ordered_json::array();
        for (const auto& s : tr.supertraits) sts.push_back(trait_id_json(s));
        tj["supertraits"] = sts;
        ordered_json req = ordered_json::array();
        for (const auto& s : tr.required_fns) req.push_back(sig_json(s));
        tj["required_fns"] = req;
        ordered_json def = ordered_json::array();
        for (const auto& s : tr.default_fns) def.push_back(sig_json(s));
        tj["default_fns"] = def;
        ordered_json ats = ordered_json::array();
        for (const auto& at : tr.associated_types) {
            ordered_json aj;
            aj["name"] = at.name;
            ordered_json bs = ordered_json::array();
            for (const auto& b : at.bounds) bs.push_back(trait_id_json(b));
            aj["bounds"] = bs;
            ats.push_back(aj);
        }
        tj["assoc_types"] = ats;
        tj["default_fn_records"] = tr.default_fn_records;
        traits_j.push_back(tj);
    }
    j["traits"] = traits_j;

    ordered_json impls_j = ordered_json::array();
    for (const auto& im : impls) {
        ordered_json ij;
        ij["self_type"] = type_json(im.self_type);
        if (im.trait_ref) ij["trait"] = trait_id_json(*im.trait_ref);
        ij["fns"] = im.fn_records;
        ordered_json abs = ordered_json::array();
        for (const auto& ab : im.assoc_types)
            abs.push_back({{"name", ab.name}, {"type", type_json(ab.type)}});
        ij["assoc_types"] = abs;
        ij["unsafe"] = im.is_unsafe_impl;
        ordered_json gs = ordered_json::array();
        for (const auto& g : im.generic_params) gs.push_back(generic_json(g));
        ij["generics"] = gs;
        impls_j.push_back(ij);
    }
    j["impls"] = impls_j;

    ordered_json exports = ordered_json::object();
    for (const auto& [id, path] : export_table) exports[std::to_string(id)] = path;
    j["exports"] = exports;

    ordered_json sf = ordered_json::object();
    for (const auto& [id, fields] : struct_fields) {
        ordered_json arr = ordered_json::array();
        for (const auto& f : fields)
            arr.push_back({{"name", f.name}, {"type", type_json(f.type)}, {"vis", static_cast<int>(f.vis)}});
        sf[std::to_string(id)] = arr;
    }
    j["struct_fields"] = sf;

    ordered_json ev = ordered_json::object();
    for (const auto& [id, variants] : enum_variants) {
        ordered_json arr = ordered_json::array();
        for (const auto& v : variants) {
            ordered_json pj = ordered_json::array();
            for (const auto& p : v.payload) pj.push_back(type_json(p));
            arr.push_back({{"name", v.name}, {"payload", pj}});
        }
        ev[std::to_string(id)] = arr;
    }
    j["enum_variants"] = ev;
    return j;
}

CrateModel CrateModel::from_json(const nlohmann::ordered_json& j) {
    CrateModel m;
    m.crate_name = j.at("crate_name").get<std::string>();
    for (const auto& f : j.at("features")) m.feature_set.insert(f.get<std::string>());

    for (const auto& ij : j.at("items")) {
        ItemRecord it;
        it.id = ij.at("id").get<ItemId>();
        it.kind = static_cast<ItemKind>(ij.at("kind").get<int>());
        it.name = ij.at("name").get<std::string>();
        it.parent_module = ij.at("parent").get<ItemId>();
        it.declared_visibility = static_cast<Vis>(ij.at("vis").get<int>());
        it.span = span_from_json(ij.at("span"));
        if (ij.contains("unsupported")) {
            it.unsupported = true;
            it.unsupported_note = ij.at("note").get<std::string>();
        }
        if (ij.contains("target")) it.reexport_target = ij.at("target").get<ItemId>();
        m.items.push_back(std::move(it));
    }
    for (const auto& fj : j.at("functions")) {
        FunctionRecord fn;
        fn.item = fj.at("item").get<ItemId>();
        for (const auto& p : fj.at("params"))
            fn.params.push_back(
                ParamDescriptor{p.at("name").get<std::string>(), type_from_json(p.at("type"))});
        fn.ret = type_from_json(fj.at("ret"));
        fn.is_unsafe_fn = fj.at("unsafe_fn").get<bool>();
        for (const auto& s : fj.at("unsafe_blocks")) fn.unsafe_block_spans.push_back(span_from_json(s));
        fn.self_kind = static_cast<SelfKind>(fj.at("self").get<int>());
        for (const auto& g : fj.at("generics")) fn.generic_params.push_back(generic_from_json(g));
        fn.owning_impl = fj.at("impl").get<int32_t>();
        fn.owning_trait = fj.at("trait").get<int32_t>();
        m.fn_record_by_item[fn.item] = static_cast<int32_t>(m.functions.size());
        m.functions.push_back(std::move(fn));
    }
    for (const auto& tj : j.at("traits")) {
        TraitRecord tr;
        tr.id = tj.at("id").get<ItemId>();
        tr.name = tj.at("name").get<std::string>();
        tr.is_unsafe_trait = tj.at("unsafe").get<bool>();
        for (const auto& s : tj.at("supertraits")) tr.supertraits.push_back(trait_id_from(s));
        for (const auto& s : tj.at("required_fns")) tr.required_fns.push_back(sig_from_json(s));
        for (const auto& s : tj.at("default_fns")) tr.default_fns.push_back(sig_from_json(s));
        for (const auto& aj : tj.at("assoc_types")) {
            AssociatedTypeDecl at;
            at.name = aj.at("name").get<std::string>();
            for (const auto& b : aj.at("bounds")) at.bounds.push_back(trait_id_from(b));
            tr.associated_types.push_back(std::move(at));
        }
        tr.default_fn_records = tj.at("default_fn_records").get<std::vector<int32_t>>();
        m.trait_by_item[tr.id] = static_cast<int32_t>(m.traits.size());
        m.traits.push_back(std::move(tr));
    }
    for (const auto& ij : j.at("impls")) {
        ImplRecord im;
        im.self_type = type_from_json(ij.at("self_type"));
        if (ij.contains("trait")) im.trait_ref = trait_id_from(ij.at("trait"));
        im.fn_records = ij.at("fns").get<std::vector<int32_t>>();
        for (const auto& ab : ij.at("assoc_types"))
            im.assoc_types.push_back(
                AssocBinding{ab.at("name").get<std::string>(), type_from_json(ab.at("type"))});
        im.is_unsafe_impl = ij.at("unsafe").get<bool>();
        for (const auto& g : ij.at("generics")) im.generic_params.push_back(generic_from_json(g));
        m.impls.push_back(std::move(im));
    }
    for (const auto& [key, value] : j.at("exports").items())
        m.export_table[static_cast<ItemId>(std::stol(key))] = value.get<std::string>();
    for (const auto& [key, value] : j.at("struct_fields").items()) {
        std::vector<FieldRecord> fields;
        for (const auto& f : value)
            fields.push_back(FieldRecord{f.at("name").get<std::string>(), type_from_json(f.at("type")),
                                         static_cast<Vis>(f.at("vis").get<int>())});
        m.struct_fields[static_cast<ItemId>(std::stol(key))] = std::move(fields);
    }
    for (const auto& [key, value] : j.at("enum_variants").items()) {
        std::vector<VariantRecord> variants;
        for (const auto& v : value) {
            VariantRecord vr;
            vr.name = v.at("name").get<std::string>();
            for (const auto& p : v.at("payload")) vr.payload.push_back(type_from_json(p));
            variants.push_back(std::move(vr));
        }
        m.enum_variants[static_cast<ItemId>(std::stol(key))] = std::move(variants);
    }
    return m;
}

bool CrateModel::equals(const CrateModel& o) const { return to_json() == o.to_json(); }

} // namespace reachfuzz::model
