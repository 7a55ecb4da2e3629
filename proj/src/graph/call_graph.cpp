#include "graph/call_graph.hpp"

#include <algorithm>
#include <deque>
#include <functional>

namespace reachfuzz::graph {

using namespace model;

std::string UnsafetyClass::to_string() const {
    std::string out;
    auto add = [&](bool flag, const char* name) {
        if (!flag) return;
        if (!out.empty()) out += "/";
        out += name;
    };
    add(sf, "SF");
    add(uf, "UF");
    add(uef, "UEF");
    add(urf, "URF");
    add(uapi, "UAPI");
    add(urapi, "URAPI");
    return out.empty() ? "-" : out;
}

namespace {

// ------------------------------------------------------- body analysis

struct BodyAnalyzer {
    const LoadedCrate& crate;
    const CrateModel& m;
    FnId current;
    CallGraph& graph;
    DiagnosticSink* diags;

    std::vector<std::map<std::string, TypeDescriptor>> scopes;

    const FunctionRecord& fn() const { return m.functions[current]; }

    void push_scope() { scopes.emplace_back(); }
    void pop_scope() { scopes.pop_back(); }
    void bind(const std::string& name, TypeDescriptor ty) {
        if (!scopes.empty()) scopes.back()[name] = std::move(ty);
    }
    const TypeDescriptor* lookup(const std::string& name) const {
        for (auto it = scopes.rbegin(); it != scopes.rend(); ++it) {
            auto f = it->find(name);
            if (f != it->end()) return &f->second;
        }
        return nullptr;
    }

    TypeDescriptor self_type() const {
        if (fn().owning_impl >= 0) return m.impls[fn().owning_impl].self_type;
        if (fn().owning_trait >= 0) {
            // default trait method: `self` behaves like a generic bounded by the trait
            TypeDescriptor d;
            d.shape = Shape::GenericParam;
            d.name = "Self";
            return d;
        }
        return TypeDescriptor{};
    }

    std::vector<TraitId> self_bounds() const {
        if (fn().owning_trait >= 0) {
            const TraitRecord& tr = m.traits[fn().owning_trait];
            return {TraitId{tr.id, tr.name}};
        }
        return {};
    }

    // ---- trait helpers ---------------------------------------------------

    void closure_over_supertraits(const std::vector<TraitId>& bounds,
                                  std::vector<TraitId>& out) const {
        std::deque<TraitId> work(bounds.begin(), bounds.end());
        while (!work.empty()) {
            TraitId t = work.front();
            work.pop_front();
            bool seen = false;
            for (const auto& e : out) seen = seen || (e.id == t.id && e.name == t.name);
            if (seen) continue;
            out.push_back(t);
            if (t.id == kNoItem) continue;
            if (const TraitRecord* tr = m.trait_for(t.id))
                for (const auto& s : tr->supertraits) work.push_back(s);
        }
    }

    const TraitRecord* trait_declaring(const std::vector<TraitId>& closed,
                                       const std::string& method, bool* is_default) const {
        for (const auto& t : closed) {
            if (t.id == kNoItem) continue;
            const TraitRecord* tr = m.trait_for(t.id);
            if (!tr) continue;
            for (const auto& s : tr->required_fns)
                if (s.name == method) {
                    *is_default = false;
                    return tr;
                }
            for (const auto& s : tr->default_fns)
                if (s.name == method) {
                    *is_default = true;
                    return tr;
                }
        }
        return nullptr;
    }

    // all implementations of a trait method: overriding impl fns, plus the
    // default body once when some impl relies on it
    ResolvedCallee targets_via_trait(const TraitRecord& tr, const std::string& method) const {
        ResolvedCallee out;
        out.via_trait = tr.name;
        bool default_needed = false;
        auto it = crate.index.impls_by_trait.find(tr.id);
        if (it != crate.index.impls_by_trait.end()) {
            for (int32_t ii : it->second) {
                const ImplRecord& impl = m.impls[ii];
                bool overridden = false;
                for (int32_t fr : impl.fn_records) {
                    if (m.items[m.functions[fr].item].name == method) {
                        out.targets.push_back(fr);
                        overridden = true;
                    }
                }
                if (!overridden) default_needed = true;
            }
        } else {
            default_needed = true;
        }
        if (default_needed) {
            for (size_t di = 0; di < tr.default_fns.size(); ++di) {
                if (tr.default_fns[di].name == method && di < tr.default_fn_records.size())
                    out.targets.push_back(tr.default_fn_records[di]);
            }
        }
        std::sort(out.targets.begin(), out.targets.end());
        out.targets.erase(std::unique(out.targets.begin(), out.targets.end()), out.targets.end());
        out.kind = out.targets.size() > 1 ? CallKind::DirectMulti : CallKind::DirectSingle;
        return out;
    }

    // ---- type inference (receiver resolution only; best effort) ----------

    TypeDescriptor infer(const ast::Expr& e) {
        using namespace ast;
        TypeDescriptor unknown;
        unknown.shape = Shape::Unresolved;
        unknown.name = "?";

        if (const auto* p = std::get_if<Expr::Path>(&e.kind)) {
            const auto& segs = p->path.segments;
            if (segs.size() == 1) {
                if (segs[0].name == "self") return self_type();
                if (const TypeDescriptor* t = lookup(segs[0].name)) return *t;
                // generic parameter used as a value (fn-item); leave unresolved
                return unknown;
            }
            return unknown;
        }
        if (const auto* lit = std::get_if<Expr::LitInt>(&e.kind)) {
            TypeDescriptor d;
            d.shape = Shape::Primitive;
            d.name = lit->suffix.empty() ? "i32" : lit->suffix;
            return d;
        }
        if (std::holds_alternative<Expr::LitBool>(e.kind)) {
            TypeDescriptor d;
            d.shape = Shape::Primitive;
            d.name = "bool";
            return d;
        }
        if (std::holds_alternative<Expr::LitStr>(e.kind)) {
            TypeDescriptor d;
            d.shape = Shape::StringSlice;
            return d;
        }
        if (const auto* u = std::get_if<Expr::Unary>(&e.kind)) {
            TypeDescriptor inner = infer(*u->operand);
            if (u->op == UnOp::Deref &&
                (inner.shape == Shape::Reference || inner.shape == Shape::RawPointer) &&
                !inner.children.empty())
                return inner.children[0];
            if (u->op == UnOp::Not || u->op == UnOp::Neg) return inner;
            return unknown;
        }
        if (const auto* r = std::get_if<Expr::RefExpr>(&e.kind)) {
            TypeDescriptor d;
            d.shape = Shape::Reference;
            d.is_mut = r->is_mut;
            d.children.push_back(infer(*r->operand));
            return d;
        }
        if (const auto* f = std::get_if<Expr::Field>(&e.kind)) {
            TypeDescriptor base = peel_refs(infer(*f->base));
            if (base.shape == Shape::Complex) {
                auto it = m.struct_fields.find(base.complex_item);
                if (it != m.struct_fields.end()) {
                    for (const auto& fr : it->second)
                        if (fr.name == f->name) return substitute_args(fr.type, base);
                }
            }
            if (base.shape == Shape::Tuple) {
                size_t idx = std::strtoul(f->name.c_str(), nullptr, 10);
                if (idx < base.children.size()) return base.children[idx];
            }
            return unknown;
        }
        if (const auto* ix = std::get_if<Expr::Index>(&e.kind)) {
            TypeDescriptor base = peel_refs(infer(*ix->base));
            if (std::holds_alternative<Expr::Range>(ix->index->kind)) return base; // slicing
            if (base.shape == Shape::StdContainer && base.container == StdContainerKind::Vec &&
                !base.children.empty())
                return base.children[0];
            if ((base.shape == Shape::Slice || base.shape == Shape::Array) && !base.children.empty())
                return base.children[0];
            return unknown;
        }
        if (const auto* c = std::get_if<Expr::Call>(&e.kind)) {
            if (const auto* cp = std::get_if<Expr::Path>(&c->callee->kind))
                return infer_path_call(cp->path, *c);
            return unknown;
        }
        if (const auto* mcall = std::get_if<Expr::MethodCall>(&e.kind)) {
            TypeDescriptor recv = peel_refs(infer(*mcall->receiver));
            return builtin_method_ret(recv, mcall->method);
        }
        if (const auto* cast = std::get_if<Expr::Cast>(&e.kind)) return resolve_ast_type(*cast->ty);
        if (const auto* blk = std::get_if<Expr::BlockExpr>(&e.kind)) {
            (void)blk;
            return unknown;
        }
        if (const auto* mc = std::get_if<Expr::MacroCall>(&e.kind)) {
            if (mc->name == "vec") {
                TypeDescriptor d;
                d.shape = Shape::StdContainer;
                d.container = StdContainerKind::Vec;
                if (!mc->args.empty()) d.children.push_back(infer(*mc->args[0]));
                return d;
            }
            return unknown;
        }
        if (const auto* sl = std::get_if<Expr::StructLit>(&e.kind)) {
            return resolve_path_as_type(sl->path);
        }
        return unknown;
    }

    TypeDescriptor peel_refs(TypeDescriptor t) const {
        while ((t.shape == Shape::Reference || t.shape == Shape::RawPointer) && !t.children.empty())
            t = t.children[0];
        return t;
    }

    // substitute the impl's generic args into a field type; positional match only
    TypeDescriptor substitute_args(const TypeDescriptor& field, const TypeDescriptor& base) const {
        if (field.shape == Shape::GenericParam) {
            // find the declaring struct's generic position by name
            auto it = m.struct_fields.find(base.complex_item);
            (void)it;
            // match against the base's type args by generic order: the model
            // does not retain declaration order of ADT generics, so fall back
            // to the single-arg case which covers the supported corpus
            if (base.children.size() == 1) return base.children[0];
            return field;
        }
        TypeDescriptor out = field;
        for (auto& c : out.children) c = substitute_args(c, base);
        return out;
    }

    TypeDescriptor resolve_ast_type(const ast::Type& ty) const {
        // lightweight re-resolution in the function's scope
        TypeDescriptor unknown;
        unknown.shape = Shape::Unresolved;
        if (const auto* p = std::get_if<ast::Type::Path>(&ty.kind)) return resolve_path_as_type(p->path);
        if (const auto* r = std::get_if<ast::Type::Ref>(&ty.kind)) {
            TypeDescriptor d;
            d.shape = Shape::Reference;
            d.is_mut = r->is_mut;
            d.children.push_back(resolve_ast_type(*r->inner));
            return d;
        }
        if (const auto* r = std::get_if<ast::Type::RawPtr>(&ty.kind)) {
            TypeDescriptor d;
            d.shape = Shape::RawPointer;
            d.is_mut = r->is_mut;
            d.children.push_back(resolve_ast_type(*r->inner));
            return d;
        }
        return unknown;
    }

    TypeDescriptor resolve_path_as_type(const ast::TypePath& path) const {
        TypeDescriptor unknown;
        unknown.shape = Shape::Unresolved;
        if (path.segments.empty()) return unknown;
        const std::string& head = path.segments[0].name;
        if (head == "Self") return self_type();
        static const char* prims[] = {"u8", "u16", "u32", "u64", "usize", "i8", "i16",
                                      "i32", "i64", "isize", "bool", "char", "f32", "f64"};
        for (const char* pr : prims) {
            if (head == pr) {
                TypeDescriptor d;
                d.shape = Shape::Primitive;
                d.name = head;
                return d;
            }
        }
        for (const auto& g : fn().generic_params) {
            if (g.name == head) {
                TypeDescriptor d;
                d.shape = Shape::GenericParam;
                d.name = head;
                return d;
            }
        }
        ItemId id = resolve_item_path(path, path.segments.size());
        if (id != kNoItem &&
            (m.items[id].kind == ItemKind::Struct || m.items[id].kind == ItemKind::Enum)) {
            TypeDescriptor d;
            d.shape = Shape::Complex;
            d.complex_item = id;
            d.name = m.items[id].name;
            return d;
        }
        if (head == "String") {
            TypeDescriptor d;
            d.shape = Shape::StdContainer;
            d.container = StdContainerKind::String;
            return d;
        }
        return unknown;
    }

    // resolve the first `take` segments through modules; kNoItem when foreign
    ItemId resolve_item_path(const ast::TypePath& path, size_t take) const {
        ItemId module = module_of(fn().item);
        ItemId cur = kNoItem;
        ItemId scope = module;
        for (size_t i = 0; i < take && i < path.segments.size(); ++i) {
            const std::string& seg = path.segments[i].name;
            if (i == 0 && seg == "crate") {
                scope = crate.index.root_module;
                continue;
            }
            ItemId found = kNoItem;
            ItemId s = scope;
            bool allow_parents = (cur == kNoItem);
            while (s != kNoItem) {
                auto mod_it = crate.index.module_scope.find(s);
                if (mod_it != crate.index.module_scope.end()) {
                    auto f = mod_it->second.find(seg);
                    if (f != mod_it->second.end()) {
                        found = f->second;
                        break;
                    }
                }
                if (!allow_parents) break;
                s = m.items[s].parent_module;
            }
            if (found == kNoItem) return kNoItem;
            while (found != kNoItem && m.items[found].kind == ItemKind::ReExport)
                found = m.items[found].reexport_target;
            cur = found;
            scope = found;
        }
        return cur;
    }

    ItemId module_of(ItemId item) const {
        ItemId p = m.items[item].parent_module;
        return p == kNoItem ? crate.index.root_module : p;
    }

    TypeDescriptor infer_path_call(const ast::TypePath& path, const ast::Expr::Call& call) {
        TypeDescriptor unknown;
        unknown.shape = Shape::Unresolved;
        const std::string tail = path.tail();
        // std constructors that matter for local inference
        if (tail == "new" || tail == "with_capacity") {
            if (path.segments.size() >= 2) {
                const std::string& head = path.segments[path.segments.size() - 2].name;
                if (head == "Vec") {
                    TypeDescriptor d;
                    d.shape = Shape::StdContainer;
                    d.container = StdContainerKind::Vec;
                    return d;
                }
                if (head == "String") {
                    TypeDescriptor d;
                    d.shape = Shape::StdContainer;
                    d.container = StdContainerKind::String;
                    return d;
                }
            }
        }
        if (path.segments.size() == 1) {
            if (tail == "Some" || tail == "Ok" || tail == "Err") {
                TypeDescriptor d;
                d.shape = Shape::StdContainer;
                d.container = StdContainerKind::Option;
                if (tail != "Some") d.container = StdContainerKind::Result;
                if (!call.args.empty()) d.children.push_back(infer(*call.args[0]));
                return d;
            }
        }
        if (path.segments.size() >= 2) {
            if (path.segments[0].name == "Box" && tail == "new") {
                TypeDescriptor d;
                d.shape = Shape::StdContainer;
                d.container = StdContainerKind::BoxT;
                if (!call.args.empty()) d.children.push_back(infer(*call.args[0]));
                return d;
            }
            if (path.segments[0].name == "String" && tail == "from") {
                TypeDescriptor d;
                d.shape = Shape::StdContainer;
                d.container = StdContainerKind::String;
                return d;
            }
        }
        // crate function: return type from its record
        if (auto r = resolve_crate_fn(path)) return m.functions[*r].ret;
        return unknown;
    }

    TypeDescriptor builtin_method_ret(const TypeDescriptor& recv, const std::string& method) const {
        TypeDescriptor unknown;
        unknown.shape = Shape::Unresolved;
        TypeDescriptor usize_d;
        usize_d.shape = Shape::Primitive;
        usize_d.name = "usize";
        if (recv.shape == Shape::StdContainer && recv.container == StdContainerKind::Vec) {
            TypeDescriptor elem = recv.children.empty() ? unknown : recv.children[0];
            if (method == "len" || method == "capacity") return usize_d;
            if (method == "as_ptr" || method == "as_mut_ptr") {
                TypeDescriptor d;
                d.shape = Shape::RawPointer;
                d.is_mut = method == "as_mut_ptr";
                d.children.push_back(elem);
                return d;
            }
            if (method == "pop") {
                TypeDescriptor d;
                d.shape = Shape::StdContainer;
                d.container = StdContainerKind::Option;
                d.children.push_back(elem);
                return d;
            }
            if (method == "clone") return recv;
            if (method == "as_slice" || method == "as_mut_slice") {
                TypeDescriptor s;
                s.shape = Shape::Slice;
                s.children.push_back(elem);
                TypeDescriptor d;
                d.shape = Shape::Reference;
                d.is_mut = method == "as_mut_slice";
                d.children.push_back(std::move(s));
                return d;
            }
            return unknown;
        }
        if (recv.shape == Shape::RawPointer) {
            if (method == "add" || method == "sub" || method == "offset") return recv;
            if (method == "read") return recv.children.empty() ? unknown : recv.children[0];
            return unknown;
        }
        if (recv.shape == Shape::StdContainer &&
            (recv.container == StdContainerKind::Option || recv.container == StdContainerKind::Result)) {
            if (method == "unwrap" || method == "expect")
                return recv.children.empty() ? unknown : recv.children[0];
            return unknown;
        }
        if (recv.shape == Shape::StdContainer && recv.container == StdContainerKind::String) {
            if (method == "len") return usize_d;
            if (method == "clone") return recv;
            return unknown;
        }
        if (recv.shape == Shape::Slice || recv.shape == Shape::Array) {
            if (method == "len") return usize_d;
        }
        return unknown;
    }

    std::optional<FnId> resolve_crate_fn(const ast::TypePath& path) const {
        // free function (possibly through modules)
        ItemId id = resolve_item_path(path, path.segments.size());
        if (id != kNoItem && m.items[id].kind == ItemKind::Function) {
            auto it = m.fn_record_by_item.find(id);
            if (it != m.fn_record_by_item.end()) return it->second;
        }
        // Type::assoc_fn
        if (path.segments.size() >= 2) {
            ast::TypePath prefix;
            for (size_t i = 0; i + 1 < path.segments.size(); ++i) {
                prefix.segments.push_back(ast::PathSegment{path.segments[i].name, {}});
            }
            const std::string& fn_name = path.segments.back().name;
            TypeDescriptor ty;
            if (prefix.segments.size() == 1 && prefix.segments[0].name == "Self")
                ty = self_type();
            else {
                ItemId tid = resolve_item_path(prefix, prefix.segments.size());
                if (tid != kNoItem &&
                    (m.items[tid].kind == ItemKind::Struct || m.items[tid].kind == ItemKind::Enum)) {
                    ty.shape = Shape::Complex;
                    ty.complex_item = tid;
                }
            }
            if (ty.shape == Shape::Complex) {
                auto it = crate.index.impls_by_complex.find(ty.complex_item);
                if (it != crate.index.impls_by_complex.end()) {
                    for (int32_t ii : it->second) {
                        for (int32_t fr : m.impls[ii].fn_records)
                            if (m.items[m.functions[fr].item].name == fn_name) return fr;
                    }
                }
            }
        }
        return std::nullopt;
    }

    // ---- callee resolution ------------------------------------------------

    ResolvedCallee resolve_method(const TypeDescriptor& recv_in, const std::string& method) const {
        ResolvedCallee out;
        TypeDescriptor recv = recv_in;
        // peel references; `dyn Tr` often arrives behind a reference or Box
        while ((recv.shape == Shape::Reference || recv.shape == Shape::RawPointer ||
                (recv.shape == Shape::StdContainer && recv.container == StdContainerKind::BoxT)) &&
               !recv.children.empty())
            recv = recv.children[0];

        if (recv.shape == Shape::GenericParam) {
            std::vector<TraitId> bounds;
            if (recv.name == "Self" && fn().owning_trait >= 0) {
                bounds = self_bounds();
            } else {
                for (const auto& g : fn().generic_params)
                    if (g.name == recv.name) bounds = g.bounds;
            }
            std::vector<TraitId> closed;
            closure_over_supertraits(bounds, closed);
            bool is_default = false;
            if (const TraitRecord* tr = trait_declaring(closed, method, &is_default)) {
                ResolvedCallee r = targets_via_trait(*tr, method);
                r.via_generic = recv.name;
                return r;
            }
            return out; // unresolved
        }

        if (recv.shape == Shape::TraitObject) {
            if (recv.trait_ref.id != kNoItem) {
                if (const TraitRecord* tr = m.trait_for(recv.trait_ref.id)) {
                    ResolvedCallee r = targets_via_trait(*tr, method);
                    r.kind = r.targets.size() > 1 ? CallKind::DirectMulti : r.kind;
                    return r;
                }
            }
            return out;
        }

        if (recv.shape == Shape::Complex) {
            auto it = crate.index.impls_by_complex.find(recv.complex_item);
            if (it != crate.index.impls_by_complex.end()) {
                // inherent impls win
                for (int32_t ii : it->second) {
                    const ImplRecord& impl = m.impls[ii];
                    if (impl.trait_ref) continue;
                    for (int32_t fr : impl.fn_records) {
                        if (m.items[m.functions[fr].item].name == method) {
                            out.targets.push_back(fr);
                            out.kind = CallKind::DirectSingle;
                            return out;
                        }
                    }
                }
                // then trait impls on this type
                for (int32_t ii : it->second) {
                    const ImplRecord& impl = m.impls[ii];
                    if (!impl.trait_ref) continue;
                    for (int32_t fr : impl.fn_records)
                        if (m.items[m.functions[fr].item].name == method) out.targets.push_back(fr);
                }
                // trait default methods available on this type
                if (out.targets.empty()) {
                    for (int32_t ii : it->second) {
                        const ImplRecord& impl = m.impls[ii];
                        if (!impl.trait_ref || impl.trait_ref->id == kNoItem) continue;
                        const TraitRecord* tr = m.trait_for(impl.trait_ref->id);
                        if (!tr) continue;
                        for (size_t di = 0; di < tr->default_fns.size(); ++di)
                            if (tr->default_fns[di].name == method &&
                                di < tr->default_fn_records.size())
                                out.targets.push_back(tr->default_fn_records[di]);
                    }
                }
                std::sort(out.targets.begin(), out.targets.end());
                out.targets.erase(std::unique(out.targets.begin(), out.targets.end()),
                                  out.targets.end());
                out.kind = out.targets.size() > 1 ? CallKind::DirectMulti : CallKind::DirectSingle;
            }
            return out;
        }

        return out; // std containers etc: external leaf, no edge
    }

    void add_edges(const ResolvedCallee& r, Span site) {
        for (FnId t : r.targets) {
            CallEdge e;
            e.caller = current;
            e.callee = t;
            e.kind = r.kind;
            e.site = site;
            e.via_generic = r.via_generic;
            e.via_trait = r.via_trait;
            graph.edges.push_back(std::move(e));
        }
    }

    void add_indirect(Span site) {
        CallEdge e;
        e.caller = current;
        e.callee = -1;
        e.kind = CallKind::Indirect;
        e.site = site;
        graph.indirect_edges.push_back(std::move(e));
        if (diags)
            diags->warning("indirect call excluded from reachability", site);
    }

    // true when the expression names a callable value (local, param, field)
    bool is_value_callee(const ast::Expr& callee) const {
        using namespace ast;
        if (const auto* p = std::get_if<Expr::Path>(&callee.kind)) {
            if (p->path.segments.size() != 1) return false;
            const std::string& n = p->path.segments[0].name;
            if (lookup(n)) {
                // a local with a known non-fn type that is also a crate fn name
                // cannot happen in valid source; locals win
                return true;
            }
            for (const auto& prm : fn().params)
                if (prm.name == n) return true;
            return false;
        }
        if (std::holds_alternative<Expr::Field>(callee.kind)) return true;
        return false;
    }

    // ---- walking -----------------------------------------------------------

    void walk_block(const ast::Block& b) {
        push_scope();
        for (const auto& st : b.stmts) walk_stmt(st);
        pop_scope();
    }

    void bind_pattern(const ast::Pat& pat, const TypeDescriptor& ty) {
        using namespace ast;
        if (const auto* b = std::get_if<Pat::Binding>(&pat.kind)) {
            bind(b->name, ty);
            return;
        }
        if (const auto* t = std::get_if<Pat::Tuple>(&pat.kind)) {
            for (size_t i = 0; i < t->elems.size(); ++i) {
                TypeDescriptor sub;
                sub.shape = Shape::Unresolved;
                if (ty.shape == Shape::Tuple && i < ty.children.size()) sub = ty.children[i];
                bind_pattern(*t->elems[i], sub);
            }
            return;
        }
        if (const auto* v = std::get_if<Pat::Variant>(&pat.kind)) {
            TypeDescriptor sub;
            sub.shape = Shape::Unresolved;
            if (ty.shape == Shape::StdContainer && !ty.children.empty()) sub = ty.children[0];
            for (const auto& el : v->elems) bind_pattern(*el, sub);
            return;
        }
        if (const auto* r = std::get_if<Pat::Ref>(&pat.kind)) {
            TypeDescriptor sub = ty;
            if (ty.shape == Shape::Reference && !ty.children.empty()) sub = ty.children[0];
            bind_pattern(*r->inner, sub);
        }
    }

    void walk_stmt(const ast::Stmt& st) {
        using namespace ast;
        if (const auto* let = std::get_if<Stmt::Let>(&st.kind)) {
            TypeDescriptor ty;
            ty.shape = Shape::Unresolved;
            if (let->init) {
                walk_expr(*let->init);
                ty = infer(*let->init);
            }
            if (let->ty) {
                TypeDescriptor annotated = resolve_ast_type(*let->ty);
                if (annotated.shape != Shape::Unresolved) ty = annotated;
            }
            bind_pattern(*let->pat, ty);
            return;
        }
        if (const auto* es = std::get_if<Stmt::ExprStmt>(&st.kind)) walk_expr(*es->expr);
    }

    void walk_expr(const ast::Expr& e) {
        using namespace ast;
        std::visit(
            [&](const auto& node) {
                using T = std::decay_t<decltype(node)>;
                if constexpr (std::is_same_v<T, Expr::Call>) {
                    for (const auto& a : node.args) walk_expr(*a);
                    handle_call(node, e.span);
                } else if constexpr (std::is_same_v<T, Expr::MethodCall>) {
                    walk_expr(*node.receiver);
                    for (const auto& a : node.args) walk_expr(*a);
                    TypeDescriptor recv = infer(*node.receiver);
                    ResolvedCallee r = resolve_method(recv, node.method);
                    if (!r.targets.empty()) add_edges(r, node.method_span);
                } else if constexpr (std::is_same_v<T, Expr::Unary>) {
                    walk_expr(*node.operand);
                } else if constexpr (std::is_same_v<T, Expr::RefExpr>) {
                    walk_expr(*node.operand);
                } else if constexpr (std::is_same_v<T, Expr::Binary>) {
                    walk_expr(*node.lhs);
                    walk_expr(*node.rhs);
                } else if constexpr (std::is_same_v<T, Expr::Assign>) {
                    walk_expr(*node.lhs);
                    walk_expr(*node.rhs);
                } else if constexpr (std::is_same_v<T, Expr::Field>) {
                    walk_expr(*node.base);
                } else if constexpr (std::is_same_v<T, Expr::Index>) {
                    walk_expr(*node.base);
                    walk_expr(*node.index);
                } else if constexpr (std::is_same_v<T, Expr::StructLit>) {
                    for (const auto& f : node.fields) walk_expr(*f.second);
                } else if constexpr (std::is_same_v<T, Expr::TupleExpr>) {
                    for (const auto& a : node.elems) walk_expr(*a);
                } else if constexpr (std::is_same_v<T, Expr::ArrayExpr>) {
                    for (const auto& a : node.elems) walk_expr(*a);
                } else if constexpr (std::is_same_v<T, Expr::ArrayRepeat>) {
                    walk_expr(*node.elem);
                    walk_expr(*node.count);
                } else if constexpr (std::is_same_v<T, Expr::If>) {
                    walk_expr(*node.cond);
                    walk_block(*node.then_block);
                    if (node.else_expr) walk_expr(*node.else_expr);
                } else if constexpr (std::is_same_v<T, Expr::IfLet>) {
                    walk_expr(*node.scrutinee);
                    push_scope();
                    bind_pattern(*node.pat, infer(*node.scrutinee));
                    walk_block(*node.then_block);
                    pop_scope();
                    if (node.else_expr) walk_expr(*node.else_expr);
                } else if constexpr (std::is_same_v<T, Expr::Match>) {
                    walk_expr(*node.scrutinee);
                    TypeDescriptor scrut_ty = infer(*node.scrutinee);
                    for (const auto& arm : node.arms) {
                        push_scope();
                        bind_pattern(*arm.pat, scrut_ty);
                        if (arm.guard) walk_expr(*arm.guard);
                        walk_expr(*arm.body);
                        pop_scope();
                    }
                } else if constexpr (std::is_same_v<T, Expr::While>) {
                    walk_expr(*node.cond);
                    walk_block(*node.body);
                } else if constexpr (std::is_same_v<T, Expr::WhileLet>) {
                    walk_expr(*node.scrutinee);
                    push_scope();
                    bind_pattern(*node.pat, infer(*node.scrutinee));
                    walk_block(*node.body);
                    pop_scope();
                } else if constexpr (std::is_same_v<T, Expr::Loop>) {
                    walk_block(*node.body);
                } else if constexpr (std::is_same_v<T, Expr::For>) {
                    walk_expr(*node.iter);
                    push_scope();
                    TypeDescriptor it_ty = infer(*node.iter);
                    TypeDescriptor elem;
                    elem.shape = Shape::Unresolved;
                    TypeDescriptor peeled = peel_refs(it_ty);
                    if (peeled.shape == Shape::StdContainer &&
                        peeled.container == StdContainerKind::Vec && !peeled.children.empty())
                        elem = peeled.children[0];
                    else if (std::holds_alternative<Expr::Range>(node.iter->kind)) {
                        elem.shape = Shape::Primitive;
                        elem.name = "usize";
                    }
                    bind_pattern(*node.pat, elem);
                    walk_block(*node.body);
                    pop_scope();
                } else if constexpr (std::is_same_v<T, Expr::Return>) {
                    if (node.value) walk_expr(*node.value);
                } else if constexpr (std::is_same_v<T, Expr::BlockExpr>) {
                    walk_block(*node.block);
                } else if constexpr (std::is_same_v<T, Expr::Closure>) {
                    push_scope();
                    for (const auto& p : node.params) {
                        TypeDescriptor ty;
                        ty.shape = Shape::Unresolved;
                        if (p.ty) ty = resolve_ast_type(*p.ty);
                        bind(p.name, ty);
                    }
                    walk_expr(*node.body);
                    pop_scope();
                } else if constexpr (std::is_same_v<T, Expr::MacroCall>) {
                    for (const auto& a : node.args) walk_expr(*a);
                } else if constexpr (std::is_same_v<T, Expr::Cast>) {
                    walk_expr(*node.operand);
                } else if constexpr (std::is_same_v<T, Expr::Range>) {
                    if (node.lo) walk_expr(*node.lo);
                    if (node.hi) walk_expr(*node.hi);
                } else if constexpr (std::is_same_v<T, Expr::Question>) {
                    walk_expr(*node.inner);
                } else {
                    (void)node;
                }
            },
            e.kind);
    }

    void handle_call(const ast::Expr::Call& call, Span site) {
        using namespace ast;
        if (const auto* p = std::get_if<Expr::Path>(&call.callee->kind)) {
            if (is_value_callee(*call.callee)) {
                add_indirect(site);
                return;
            }
            if (auto target = resolve_crate_fn(p->path)) {
                ResolvedCallee r;
                r.targets.push_back(*target);
                r.kind = CallKind::DirectSingle;
                add_edges(r, site);
                return;
            }
            // Self::helper() style paths resolved as method-on-type above;
            // anything left is a std/external leaf or an enum constructor
            return;
        }
        // calling a non-path expression is a call through a function value
        walk_expr(*call.callee);
        add_indirect(site);
    }

    void run() {
        const FunctionRecord& f = fn();
        if (!f.body_ast || !f.body_ast->body) return;
        push_scope();
        for (const auto& p : f.params) bind(p.name, p.type);
        walk_block(*f.body_ast->body);
        pop_scope();
    }
};

} // namespace

// -------------------------------------------------------------- call graph

void CallGraph::rebuild_adjacency() {
    callers_of.assign(nodes.size(), {});
    callees_of.assign(nodes.size(), {});
    for (const auto& e : edges) {
        if (e.callee < 0) continue;
        callees_of[e.caller].push_back(e.callee);
        callers_of[e.callee].push_back(e.caller);
    }
}

CallGraph build_call_graph(const LoadedCrate& crate, DiagnosticSink* diags) {
    const CrateModel& m = crate.model;
    CallGraph g;
    g.nodes.resize(m.functions.size());
    for (size_t i = 0; i < m.functions.size(); ++i) {
        const FunctionRecord& fn = m.functions[i];
        CallGraph::Node n;
        n.fn = static_cast<FnId>(i);
        n.is_public = m.is_exported(fn.item);
        n.is_unsafe_fn = fn.is_unsafe_fn;
        n.has_unsafe_block = !fn.unsafe_block_spans.empty();
        n.label = m.public_path(fn.item).value_or(m.items[fn.item].name);
        g.nodes[i] = std::move(n);
    }
    for (size_t i = 0; i < m.functions.size(); ++i) {
        BodyAnalyzer analyzer{crate, m, static_cast<FnId>(i), g, diags};
        analyzer.run();
    }
    // dedupe identical resolved edges from one site
    std::sort(g.edges.begin(), g.edges.end(), [](const CallEdge& a, const CallEdge& b) {
        return std::tie(a.caller, a.callee, a.site.lo) < std::tie(b.caller, b.callee, b.site.lo);
    });
    g.edges.erase(std::unique(g.edges.begin(), g.edges.end(),
                              [](const CallEdge& a, const CallEdge& b) {
                                  return a.caller == b.caller && a.callee == b.callee &&
                                         a.site.lo == b.site.lo;
                              }),
                  g.edges.end());
    g.rebuild_adjacency();

    // classification for every node
    for (size_t i = 0; i < g.nodes.size(); ++i)
        g.classification[static_cast<FnId>(i)] = classify_function(static_cast<FnId>(i), g);
    return g;
}

namespace {

// nodes with a path of length >= 1 to some UEF
std::vector<bool> reaches_uef(const CallGraph& g) {
    std::vector<bool> mark(g.nodes.size(), false);
    std::deque<FnId> work;
    for (const auto& n : g.nodes) {
        if (!n.is_unsafe_fn && n.has_unsafe_block) {
            // callers of a UEF reach unsafe code
            for (FnId c : g.callers_of[n.fn])
                if (!mark[c]) {
                    mark[c] = true;
                    work.push_back(c);
                }
        }
    }
    while (!work.empty()) {
        FnId cur = work.front();
        work.pop_front();
        for (FnId c : g.callers_of[cur]) {
            if (!mark[c]) {
                mark[c] = true;
                work.push_back(c);
            }
        }
    }
    return mark;
}

} // namespace

UnsafetyClass classify_function(FnId fn, const CallGraph& graph) {
    if (fn < 0 || static_cast<size_t>(fn) >= graph.nodes.size())
        throw std::out_of_range("classify_function: unknown function id");
    const CallGraph::Node& n = graph.nodes[fn];
    UnsafetyClass c;
    c.uf = n.is_unsafe_fn;
    c.sf = !c.uf;
    c.uef = c.sf && n.has_unsafe_block;
    std::vector<bool> reach = reaches_uef(graph);
    c.urf = c.sf && !c.uef && reach[fn];
    c.uapi = c.uf && n.is_public;
    c.urapi = n.is_public && c.sf && (c.uef || c.urf);
    return c;
}

std::set<FnId> extract_urapis(const CallGraph& graph) {
    std::set<FnId> out;
    std::vector<bool> visited(graph.nodes.size(), false);
    std::deque<FnId> work;
    for (const auto& n : graph.nodes) {
        if (!n.is_unsafe_fn && n.has_unsafe_block) {
            // the UEF itself is a candidate (public UEFs are URAPIs)
            if (!visited[n.fn]) {
                visited[n.fn] = true;
                work.push_back(n.fn);
            }
        }
    }
    while (!work.empty()) {
        FnId cur = work.front();
        work.pop_front();
        const CallGraph::Node& n = graph.nodes[cur];
        if (n.is_public && !n.is_unsafe_fn) out.insert(cur);
        for (FnId caller : graph.callers_of[cur]) {
            if (!visited[caller]) {
                visited[caller] = true;
                work.push_back(caller);
            }
        }
    }
    return out;
}

std::set<FnId> extract_urapis_bruteforce(const CallGraph& graph) {
    size_t n = graph.nodes.size();
    // boolean reachability matrix over forward edges
    std::vector<std::vector<bool>> reach(n, std::vector<bool>(n, false));
    for (const auto& e : graph.edges) {
        if (e.callee >= 0) reach[e.caller][e.callee] = true;
    }
    for (size_t k = 0; k < n; ++k)
        for (size_t i = 0; i < n; ++i) {
            if (!reach[i][k]) continue;
            for (size_t j = 0; j < n; ++j)
                if (reach[k][j]) reach[i][j] = true;
        }
    std::set<FnId> out;
    for (size_t i = 0; i < n; ++i) {
        const auto& node = graph.nodes[i];
        if (!node.is_public || node.is_unsafe_fn) continue;
        bool is_uef = node.has_unsafe_block;
        bool reaches = false;
        for (size_t j = 0; j < n; ++j) {
            const auto& tgt = graph.nodes[j];
            if (!tgt.is_unsafe_fn && tgt.has_unsafe_block && reach[i][j]) reaches = true;
        }
        if (is_uef || reaches) out.insert(static_cast<FnId>(i));
    }
    return out;
}

nlohmann::ordered_json CallGraph::to_json() const {
    nlohmann::ordered_json j;
    nlohmann::ordered_json nodes_j = nlohmann::ordered_json::array();
    for (const auto& n : nodes) {
        auto cls = classification.find(n.fn);
        nodes_j.push_back({{"fn", n.fn},
                           {"label", n.label},
                           {"public", n.is_public},
                           {"unsafe_fn", n.is_unsafe_fn},
                           {"unsafe_block", n.has_unsafe_block},
                           {"class", cls == classification.end() ? "-" : cls->second.to_string()}});
    }
    j["nodes"] = nodes_j;
    nlohmann::ordered_json edges_j = nlohmann::ordered_json::array();
    for (const auto& e : edges) {
        nlohmann::ordered_json ej = {{"caller", e.caller},
                                     {"callee", e.callee},
                                     {"kind", e.kind == CallKind::DirectSingle ? "direct-single"
                                              : e.kind == CallKind::DirectMulti ? "direct-multi"
                                                                                : "indirect"}};
        if (!e.via_generic.empty()) ej["via_generic"] = e.via_generic;
        if (!e.via_trait.empty()) ej["via_trait"] = e.via_trait;
        edges_j.push_back(ej);
    }
    j["edges"] = edges_j;
    j["indirect_sites"] = indirect_edges.size();
    return j;
}

std::string CallGraph::to_dot() const {
    std::string out = "digraph calls {\n";
    for (const auto& n : nodes) {
        auto cls = classification.find(n.fn);
        std::string label = n.label;
        if (cls != classification.end()) label += "\\n" + cls->second.to_string();
        out += "  n" + std::to_string(n.fn) + " [label=\"" + label + "\"";
        if (n.is_public) out += ", shape=box";
        if (n.has_unsafe_block && !n.is_unsafe_fn) out += ", color=red";
        out += "];\n";
    }
    for (const auto& e : edges) {
        out += "  n" + std::to_string(e.caller) + " -> n" + std::to_string(e.callee);
        if (e.kind == CallKind::DirectMulti) out += " [style=dashed]";
        out += ";\n";
    }
    out += "}\n";
    return out;
}

} // namespace reachfuzz::graph
