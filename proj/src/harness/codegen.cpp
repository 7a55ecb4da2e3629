#include "harness/codegen.hpp"

#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

namespace reachfuzz::harness {

using namespace model;
using typeplan::ArgPlan;
using typeplan::PlanKind;
using typeplan::ReturnWrapping;

namespace {

struct Layout {
    std::vector<DecoderField>* fields;
    size_t next_offset = 0;

    size_t fixed(FieldSemantic sem, size_t width, std::string consumer, int modulus = 0) {
        size_t off = next_offset;
        next_offset += width;
        fields->push_back(DecoderField{sem, off, width, modulus, false, std::move(consumer)});
        return off;
    }
    void cursor(FieldSemantic sem, std::string consumer) {
        fields->push_back(DecoderField{sem, SIZE_MAX, 0, 0, true, std::move(consumer)});
    }
};

struct Emitter {
    const CrateModel& model;
    const GenOptions& opts;
    HarnessArtifact& art;
    Layout layout;

    std::ostringstream body;        // statements inside the fuzz closure
    std::ostringstream preamble;    // custom types and custom fns
    int local_counter = 0;
    int custom_ty_counter = 0;
    int custom_fn_counter = 0;
    std::string indent = "        ";
    // generic param name -> synthesized custom type (unified per tree)
    std::map<std::string, std::string> custom_for_generic;
    std::set<std::string> mut_locals;
    std::string diagnostic;

    std::string fresh_local() { return "t" + std::to_string(local_counter++); }

    std::string crate_path(const std::string& public_path) const {
        return opts.crate_name + "::" + public_path;
    }

    // ---- type rendering ---------------------------------------------------

    std::string type_text(const TypeDescriptor& t) {
        switch (t.shape) {
            case Shape::Primitive: return t.name;
            case Shape::StringSlice: return "&str";
            case Shape::Unit: return "()";
            case Shape::StdContainer: {
                const char* head = t.container == StdContainerKind::Vec      ? "Vec"
                                   : t.container == StdContainerKind::BoxT   ? "Box"
                                   : t.container == StdContainerKind::Option ? "Option"
                                   : t.container == StdContainerKind::Result ? "Result"
                                                                             : "String";
                std::string out = head;
                if (!t.children.empty()) {
                    out += "<";
                    for (size_t i = 0; i < t.children.size(); ++i) {
                        if (i) out += ", ";
                        out += type_text(t.children[i]);
                    }
                    out += ">";
                }
                return out;
            }
            case Shape::Slice: return "[" + type_text(t.children[0]) + "]";
            case Shape::Array:
                return "[" + type_text(t.children[0]) + "; " + std::to_string(t.array_len) + "]";
            case Shape::Tuple: {
                std::string out = "(";
                for (size_t i = 0; i < t.children.size(); ++i) {
                    if (i) out += ", ";
                    out += type_text(t.children[i]);
                }
                return out + ")";
            }
            case Shape::Reference:
                return std::string("&") + (t.is_mut ? "mut " : "") + type_text(t.children[0]);
            case Shape::Complex: {
                auto path = model.public_path(t.complex_item);
                std::string out = crate_path(path.value_or(t.name));
                if (!t.children.empty()) {
                    out += "<";
                    for (size_t i = 0; i < t.children.size(); ++i) {
                        if (i) out += ", ";
                        out += type_text(t.children[i]);
                    }
                    out += ">";
                }
                return out;
            }
            case Shape::GenericParam: {
                auto it = custom_for_generic.find(t.name);
                return it != custom_for_generic.end() ? it->second : t.name;
            }
            case Shape::TraitObject: return "dyn " + crate_path(t.trait_ref.name);
            case Shape::Unresolved: return t.name;
            default: return "()";
        }
    }

    // ---- custom code synthesis ---------------------------------------------

    // returns an expression producing a value of `ret` from decoder bytes, or
    // empty when the shape is not synthesizable
    std::string decoder_value_expr(const TypeDescriptor& ret, const std::string& consumer,
                                   const std::string& self_custom_ty) {
        if (ret.shape == Shape::Primitive) {
            const std::string& n = ret.name;
            if (n == "u8" || n == "i8") {
                size_t off = layout.fixed(FieldSemantic::U8, 1, consumer);
                return "_to_u8(DATA, " + std::to_string(off) + ")" + (n == "i8" ? " as i8" : "");
            }
            if (n == "u16" || n == "i16") {
                size_t off = layout.fixed(FieldSemantic::U16, 2, consumer);
                return "_to_u16(DATA, " + std::to_string(off) + ")" + (n == "i16" ? " as i16" : "");
            }
            if (n == "u32" || n == "i32" || n == "char" || n == "f32") {
                size_t off = layout.fixed(FieldSemantic::U32, 4, consumer);
                if (n == "char") return "(_to_u8(DATA, " + std::to_string(off) + ") % 26 + 97) as char";
                if (n == "f32") return "_to_u32(DATA, " + std::to_string(off) + ") as f32";
                return "_to_u32(DATA, " + std::to_string(off) + ")" + (n == "i32" ? " as i32" : "");
            }
            if (n == "bool") {
                size_t off = layout.fixed(FieldSemantic::Bool, 1, consumer);
                return "_to_bool(DATA, " + std::to_string(off) + ")";
            }
            if (n == "usize" || n == "isize" || n == "u64" || n == "i64" || n == "f64") {
                size_t off = layout.fixed(FieldSemantic::Usize, 8, consumer);
                std::string base = "_to_usize(DATA, " + std::to_string(off) + ")";
                if (n == "isize") return base + " as isize";
                if (n == "u64") return "_to_u64(DATA, " + std::to_string(off) + ")";
                if (n == "i64") return base + " as i64";
                if (n == "f64") return base + " as f64";
                return base;
            }
            return {};
        }
        if (ret.shape == Shape::StdContainer && ret.container == StdContainerKind::String) {
            size_t off = layout.fixed(FieldSemantic::LengthPrefixedString, 1, consumer);
            std::string len = "_to_u8(DATA, " + std::to_string(off) + ")";
            return "String::from(_to_str(DATA, " + std::to_string(off + 1) + ", " +
                   std::to_string(off + 1) + " + " + len + " as usize))";
        }
        if (ret.shape == Shape::StdContainer && ret.container == StdContainerKind::Option &&
            !ret.children.empty()) {
            std::string inner = decoder_value_expr(ret.children[0], consumer, self_custom_ty);
            if (inner.empty()) return {};
            size_t off = layout.fixed(FieldSemantic::Bool, 1, consumer + " (option tag)");
            return "if _to_bool(DATA, " + std::to_string(off) + ") { Some(" + inner +
                   ") } else { None }";
        }
        if (ret.shape == Shape::StdContainer && ret.container == StdContainerKind::Result &&
            !ret.children.empty()) {
            std::string inner = decoder_value_expr(ret.children[0], consumer, self_custom_ty);
            if (inner.empty()) return {};
            return "Ok(" + inner + ")";
        }
        if (ret.shape == Shape::Unit) return "()";
        if (ret.shape == Shape::GenericParam && ret.name == "Self" && !self_custom_ty.empty()) {
            size_t off = layout.fixed(FieldSemantic::LengthPrefixedString, 1, consumer);
            std::string len = "_to_u8(DATA, " + std::to_string(off) + ")";
            return self_custom_ty + "(String::from(_to_str(DATA, " + std::to_string(off + 1) +
                   ", " + std::to_string(off + 1) + " + " + len + " as usize)))";
        }
        return {};
    }

    std::string trait_fn_body(const model::FnSignature& sig, const std::string& self_custom_ty,
                              const std::string& qual) {
        std::ostringstream out;
        size_t sel_off = layout.fixed(FieldSemantic::Selector, 1, qual + " (panic selector)");
        out << "        if _to_u8(DATA, " << sel_off << ") < " << opts.panic_threshold << " {\n";
        out << "            panic!(\"INTENTIONAL PANIC!\");\n";
        out << "        }\n";
        bool unit_ret = sig.ret.shape == Shape::Unit;
        if (!unit_ret) {
            std::string value = decoder_value_expr(sig.ret, qual + " (return)", self_custom_ty);
            if (value.empty()) {
                art.degraded_returns.push_back(qual);
                out << "        panic!(\"INTENTIONAL PANIC!\");\n";
            } else {
                out << "        " << value << "\n";
            }
        }
        return out.str();
    }

    std::string signature_text(const model::FnSignature& sig, const std::string& self_custom_ty) {
        std::ostringstream out;
        out << "fn " << sig.name << "(";
        bool first = true;
        switch (sig.self_kind) {
            case SelfKind::SharedRef: out << "&self"; first = false; break;
            case SelfKind::UniqueRef: out << "&mut self"; first = false; break;
            case SelfKind::Value: out << "self"; first = false; break;
            case SelfKind::None: break;
        }
        int arg_i = 0;
        for (const auto& p : sig.params) {
            if (!first) out << ", ";
            first = false;
            std::string ty = type_text(p.type);
            out << "arg" << arg_i++ << ": " << ty;
        }
        out << ")";
        if (sig.ret.shape != Shape::Unit) {
            std::string ret = type_text(sig.ret);
            if (sig.ret.shape == Shape::GenericParam && sig.ret.name == "Self" &&
                !self_custom_ty.empty())
                ret = self_custom_ty;
            out << " -> " << ret;
        }
        return out.str();
    }

    // synthesize (or fetch) the custom type standing in for a generic plan
    std::string custom_type_for(const ArgPlan& plan) {
        std::string key = plan.source_type.name.empty() ? plan.bounds.param : plan.source_type.name;
        if (key.empty()) key = "T";
        auto it = custom_for_generic.find(key);
        if (it != custom_for_generic.end()) return it->second;

        std::string name = "CustomTy" + std::to_string(custom_ty_counter++);
        custom_for_generic[key] = name;
        art.has_custom_functionality = true;

        preamble << "struct " << name << "(String);\n";
        // one impl block per bound trait
        for (const auto& [trait, is_unsafe] : plan.bounds.traits) {
            std::string qual = trait.name + " for " + name;
            std::ostringstream impl_block;
            impl_block << (is_unsafe ? "unsafe impl " : "impl ");
            std::string trait_path;
            if (trait.id != kNoItem) {
                auto p = model.public_path(trait.id);
                trait_path = crate_path(p.value_or(trait.name));
            } else {
                trait_path = trait.name; // std-known externals: Clone, Default
            }
            impl_block << trait_path << " for " << name << " {\n";
            bool any = false;
            for (const auto& tf : plan.trait_fns) {
                if (tf.trait_ref.name != trait.name) continue;
                if (tf.is_default && !opts.override_defaults) continue;
                any = true;
                impl_block << "    " << signature_text(tf.signature, name) << " {\n";
                impl_block << trait_fn_body(tf.signature, name, name + "::" + tf.signature.name);
                impl_block << "    }\n";
            }
            (void)any;
            impl_block << "}\n";
            preamble << impl_block.str();
            if (is_unsafe) art.contains_unsafe = true;
        }
        return name;
    }

    std::string custom_fn_for(const ArgPlan& plan) {
        std::string fn_name = "_custom_fn" + std::to_string(custom_fn_counter++);
        art.has_custom_functionality = true;

        // substitute generic params in the closure signature with custom types
        std::vector<std::string> param_texts;
        for (const auto& p : plan.closure_params) {
            TypeDescriptor t = p;
            param_texts.push_back(closure_param_text(t));
        }
        std::ostringstream out;
        out << "fn " << fn_name << "(";
        for (size_t i = 0; i < param_texts.size(); ++i) {
            if (i) out << ", ";
            out << "arg" << i << ": " << param_texts[i];
        }
        out << ")";
        bool unit_ret = plan.closure_ret.shape == Shape::Unit;
        if (!unit_ret) out << " -> " << type_text(plan.closure_ret);
        out << " {\n";
        // custom fns read the monotone cursor so repeated calls can answer
        // differently within one execution
        layout.cursor(FieldSemantic::Selector, fn_name + " (panic selector)");
        out << "    if _next_u8(DATA) < " << opts.panic_threshold << " {\n";
        out << "        panic!(\"INTENTIONAL PANIC!\");\n";
        out << "    }\n";
        if (!unit_ret) {
            std::string value = cursor_value_expr(plan.closure_ret, fn_name + " (return)");
            if (value.empty()) {
                art.degraded_returns.push_back(fn_name);
                out << "    panic!(\"INTENTIONAL PANIC!\");\n";
            } else {
                out << "    " << value << "\n";
            }
        }
        out << "}\n";
        preamble << out.str();
        return fn_name;
    }

    // true when every generic inside `t` is substitutable by a custom type
    bool can_annotate(const TypeDescriptor& t) const {
        if (t.shape == Shape::GenericParam) return custom_for_generic.count(t.name) > 0;
        if (t.shape == Shape::Unresolved || t.shape == Shape::AssociatedType) return false;
        for (const auto& c : t.children)
            if (!can_annotate(c)) return false;
        return true;
    }

    std::string closure_param_text(const TypeDescriptor& t) {
        if (t.shape == Shape::GenericParam) {
            auto it = custom_for_generic.find(t.name);
            if (it != custom_for_generic.end()) return it->second;
            // a closure over an otherwise-unseen generic gets its own type
            std::string name = "CustomTy" + std::to_string(custom_ty_counter++);
            custom_for_generic[t.name] = name;
            preamble << "struct " << name << "(String);\n";
            art.has_custom_functionality = true;
            return name;
        }
        if (t.shape == Shape::Reference && !t.children.empty())
            return std::string("&") + (t.is_mut ? "mut " : "") + closure_param_text(t.children[0]);
        return type_text(t);
    }

    std::string cursor_value_expr(const TypeDescriptor& ret, const std::string& consumer) {
        if (ret.shape == Shape::Primitive) {
            const std::string& n = ret.name;
            layout.cursor(FieldSemantic::U8, consumer);
            if (n == "bool") return "_next_bool(DATA)";
            if (n == "u8") return "_next_u8(DATA)";
            if (n == "u16") return "_next_u16(DATA)";
            if (n == "u32") return "_next_u32(DATA)";
            if (n == "usize") return "_next_usize(DATA)";
            if (n == "u64") return "_next_usize(DATA) as u64";
            if (n == "i8") return "_next_u8(DATA) as i8";
            if (n == "i16") return "_next_u16(DATA) as i16";
            if (n == "i32") return "_next_u32(DATA) as i32";
            if (n == "i64") return "_next_usize(DATA) as i64";
            if (n == "isize") return "_next_usize(DATA) as isize";
            return {};
        }
        if (ret.shape == Shape::StdContainer && ret.container == StdContainerKind::String) {
            layout.cursor(FieldSemantic::LengthPrefixedString, consumer);
            return "_next_string(DATA)";
        }
        if (ret.shape == Shape::Unit) return "()";
        return {};
    }

    // ---- argument emission (leaves to root) --------------------------------

    // emits statements building a value for `plan`; returns the expression
    // (usually a fresh local) that denotes it, or nullopt on failure
    std::optional<std::string> emit_value(const ArgPlan& plan, const std::string& consumer) {
        switch (plan.kind) {
            case PlanKind::PrimitiveLeaf: {
                if (plan.source_type.shape == Shape::StringSlice) {
                    // build an owned String local; call sites take &str via as_str()
                    std::string local = fresh_local();
                    std::string expr = decoder_value_expr(
                        TypeDescriptor{.shape = Shape::StdContainer,
                                       .container = StdContainerKind::String},
                        consumer, "");
                    body << indent << "let " << local << " = " << expr << ";\n";
                    return local + ".as_str()";
                }
                std::string expr = decoder_value_expr(plan.source_type, consumer, "");
                if (expr.empty()) return std::nullopt;
                std::string local = fresh_local();
                body << indent << "let " << local << " = " << expr << ";\n";
                return local;
            }
            case PlanKind::StdContainer: {
                const TypeDescriptor& ty = plan.source_type;
                if (ty.container == StdContainerKind::String) {
                    std::string expr = decoder_value_expr(ty, consumer, "");
                    std::string local = fresh_local();
                    body << indent << "let " << local << " = " << expr << ";\n";
                    return local;
                }
                if (ty.container == StdContainerKind::Vec) {
                    if (plan.children.empty()) return std::nullopt;
                    // generic elements need their custom type before the
                    // annotation can be rendered
                    if (plan.children[0].kind == PlanKind::Generic ||
                        plan.children[0].kind == PlanKind::TraitObject) {
                        if (plan.children[0].external_opaque) {
                            diagnostic = "vector of externally-bounded generic cannot be built";
                            return std::nullopt;
                        }
                        custom_type_for(plan.children[0]);
                    }
                    std::string local = fresh_local();
                    std::string count = fresh_local();
                    size_t off = layout.fixed(FieldSemantic::Selector, 1, consumer + " (element count)", 5);
                    std::string elem_ty = type_text(ty.children[0]);
                    body << indent << "let mut " << local << ": Vec<" << elem_ty
                         << "> = Vec::new();\n";
                    body << indent << "let " << count << " = (_to_u8(DATA, " << off
                         << ") % 5) as usize;\n";
                    std::string iv = fresh_local();
                    body << indent << "let mut " << iv << " = 0;\n";
                    body << indent << "while " << iv << " < " << count << " {\n";
                    std::string saved_indent = indent;
                    indent += "    ";
                    auto elem = emit_value(plan.children[0], consumer + " element");
                    if (!elem) return std::nullopt;
                    body << indent << local << ".push(" << *elem << ");\n";
                    body << indent << iv << " += 1;\n";
                    indent = saved_indent;
                    body << indent << "}\n";
                    return local;
                }
                if (ty.container == StdContainerKind::BoxT) {
                    auto inner = emit_value(plan.children[0], consumer);
                    if (!inner) return std::nullopt;
                    std::string local = fresh_local();
                    body << indent << "let " << local << " = Box::new(" << *inner << ");\n";
                    return local;
                }
                if (ty.container == StdContainerKind::Option) {
                    auto inner = emit_value(plan.children[0], consumer);
                    if (!inner) return std::nullopt;
                    std::string local = fresh_local();
                    body << indent << "let " << local << " = Some(" << *inner << ");\n";
                    return local;
                }
                if (ty.container == StdContainerKind::Result) {
                    auto inner = emit_value(plan.children[0], consumer);
                    if (!inner) return std::nullopt;
                    std::string local = fresh_local();
                    body << indent << "let " << local << " = Ok(" << *inner << ");\n";
                    return local;
                }
                return std::nullopt;
            }
            case PlanKind::Slice: {
                // build a vector local, lend it as a slice
                ArgPlan vec_plan = plan;
                vec_plan.kind = PlanKind::StdContainer;
                vec_plan.source_type.shape = Shape::StdContainer;
                vec_plan.source_type.container = StdContainerKind::Vec;
                vec_plan.source_type.children = {plan.source_type.children.empty()
                                                     ? TypeDescriptor{}
                                                     : plan.source_type.children[0]};
                auto local = emit_value(vec_plan, consumer);
                if (!local) return std::nullopt;
                return "&mut " + *local + "[..]";
            }
            case PlanKind::Compound: {
                if (plan.source_type.shape == Shape::Tuple) {
                    std::vector<std::string> parts;
                    for (const auto& c : plan.children) {
                        auto e = emit_value(c, consumer);
                        if (!e) return std::nullopt;
                        parts.push_back(*e);
                    }
                    std::string local = fresh_local();
                    body << indent << "let " << local << " = (";
                    for (size_t i = 0; i < parts.size(); ++i)
                        body << (i ? ", " : "") << parts[i];
                    body << ");\n";
                    return local;
                }
                // array: unrolled element expressions
                std::vector<std::string> parts;
                for (uint64_t i = 0; i < plan.source_type.array_len; ++i) {
                    auto e = emit_value(plan.children.empty() ? ArgPlan{} : plan.children[0],
                                        consumer + "[" + std::to_string(i) + "]");
                    if (!e) return std::nullopt;
                    parts.push_back(*e);
                }
                std::string local = fresh_local();
                body << indent << "let " << local << " = [";
                for (size_t i = 0; i < parts.size(); ++i) body << (i ? ", " : "") << parts[i];
                body << "];\n";
                return local;
            }
            case PlanKind::Reference: {
                if (plan.children.empty()) return std::nullopt;
                auto inner = emit_value(plan.children[0], consumer);
                if (!inner) return std::nullopt;
                // unique borrows need a named mutable local to borrow from
                std::string target = *inner;
                bool is_mut = plan.source_type.is_mut;
                bool needs_rebind = target.find_first_of(" .&([") != std::string::npos ||
                                    (is_mut && !mut_locals.count(target));
                if (needs_rebind) {
                    std::string local = fresh_local();
                    body << indent << "let " << (is_mut ? "mut " : "") << local << " = " << target
                         << ";\n";
                    if (is_mut) mut_locals.insert(local);
                    target = local;
                }
                return std::string("&") + (is_mut ? "mut " : "") + target;
            }
            case PlanKind::Complex: {
                if (plan.cycle_guard) {
                    diagnostic = "cycle guard hit while constructing " + plan.source_type.display();
                    return std::nullopt;
                }
                if (plan.unconstructible || plan.constructors.empty()) {
                    diagnostic = "no constructor for " + plan.source_type.display();
                    return std::nullopt;
                }
                const auto& ctor = plan.constructors[0];
                if (ctor.public_path.find('<') != std::string::npos) {
                    diagnostic = "trait-qualified constructor path unsupported: " + ctor.public_path;
                    return std::nullopt;
                }
                std::vector<std::string> args;
                for (const auto& a : ctor.arg_plans) {
                    auto e = emit_value(a, ctor.public_path + " arg");
                    if (!e) return std::nullopt;
                    args.push_back(*e);
                }
                art.invoked_paths.push_back(ctor.public_path);
                std::string local = fresh_local();
                std::string call;
                if (ctor.self_kind != SelfKind::None) {
                    // constructor is a method: receiver expression first
                    std::string method = ctor.public_path.substr(ctor.public_path.rfind("::") + 2);
                    call = "(" + args[0] + ")." + method + "(";
                    for (size_t i = 1; i < args.size(); ++i) call += (i > 1 ? ", " : "") + args[i];
                    call += ")";
                } else {
                    call = crate_path(ctor.public_path) + "(";
                    for (size_t i = 0; i < args.size(); ++i) call += (i ? ", " : "") + args[i];
                    call += ")";
                }
                switch (ctor.wrapping) {
                    case ReturnWrapping::Option:
                    case ReturnWrapping::Result: call += ".unwrap()"; break;
                    case ReturnWrapping::TupleMember:
                        call += "." + std::to_string(ctor.tuple_index);
                        break;
                    case ReturnWrapping::Direct: break;
                }
                // explicit annotation pins type parameters the arguments
                // alone would leave uninferred (Slab::<T>::new and friends)
                std::string ann;
                if (can_annotate(plan.source_type)) ann = ": " + type_text(plan.source_type);
                body << indent << "let mut " << local << ann << " = " << call << ";\n";
                mut_locals.insert(local);
                return local;
            }
            case PlanKind::Generic:
            case PlanKind::TraitObject: {
                if (plan.external_opaque) {
                    diagnostic = "generic bound on an external trait cannot be synthesized";
                    return std::nullopt;
                }
                std::string ty = custom_type_for(plan);
                std::string local = fresh_local();
                size_t off = layout.fixed(FieldSemantic::LengthPrefixedString, 1, ty + " payload");
                body << indent << "let " << local << " = " << ty << "(String::from(_to_str(DATA, "
                     << off + 1 << ", " << off + 1 << " + _to_u8(DATA, " << off
                     << ") as usize)));\n";
                if (plan.kind == PlanKind::TraitObject) return "&" + local;
                return local;
            }
            case PlanKind::Closure: {
                std::string fn_name = custom_fn_for(plan);
                std::string local = fresh_local();
                body << indent << "let " << local << " = " << fn_name << ";\n";
                return local;
            }
            case PlanKind::AssociatedType: {
                diagnostic = "associated-type argument without a concrete constraint";
                return std::nullopt;
            }
        }
        return std::nullopt;
    }
};

} // namespace

CustomTypeSpec synth_custom_impl(const typeplan::TraitBoundSet& bounds,
                                 const std::vector<typeplan::TraitFnPlan>& trait_fns,
                                 const model::CrateModel& model, const GenOptions& opts,
                                 int type_index) {
    HarnessArtifact scratch;
    Emitter em{model, opts, scratch, Layout{&scratch.decoder_layout}};
    em.custom_ty_counter = type_index;
    ArgPlan plan;
    plan.kind = PlanKind::Generic;
    plan.bounds = bounds;
    plan.trait_fns = trait_fns;
    plan.source_type.shape = Shape::GenericParam;
    plan.source_type.name = bounds.param;
    CustomTypeSpec spec;
    spec.name = em.custom_type_for(plan);
    for (const auto& [t, u] : bounds.traits) {
        spec.implemented_traits.push_back(t.name);
        spec.is_for_unsafe_trait = spec.is_for_unsafe_trait || u;
    }
    spec.source = em.preamble.str();
    return spec;
}

std::string synth_closure(const std::vector<model::TypeDescriptor>& params,
                          const model::TypeDescriptor& ret, const std::string& fn_name,
                          const std::string& custom_arg_type, const GenOptions& opts) {
    CrateModel empty;
    HarnessArtifact scratch;
    GenOptions local = opts;
    Emitter em{empty, local, scratch, Layout{&scratch.decoder_layout}};
    if (!custom_arg_type.empty()) em.custom_for_generic["T"] = custom_arg_type;
    ArgPlan plan;
    plan.kind = PlanKind::Closure;
    plan.closure_params = params;
    plan.closure_ret = ret;
    std::string got = em.custom_fn_for(plan);
    (void)got;
    (void)fn_name;
    return em.preamble.str();
}

GenResult generate_harness(const DependencyTree& tree, const model::CrateModel& model,
                           const GenOptions& opts) {
    GenResult res;
    HarnessArtifact& art = res.artifact;
    art.target_fn = tree.target_fn;
    art.target_path = tree.target_path;
    art.tree_id = tree.tree_id;
    art.provenance = Provenance::Static;

    Emitter em{model, opts, art, Layout{&art.decoder_layout}};

    const FunctionRecord& fn = model.functions.at(tree.target_fn);
    if (fn.owning_trait >= 0) {
        res.diagnostic = "trait default methods are exercised through implementing types";
        return res;
    }
    if (tree.target_path.find("as Drop>") != std::string::npos) {
        res.diagnostic = "destructors cannot be called explicitly; covered via owner scopes";
        return res;
    }
    bool has_self = fn.self_kind != SelfKind::None;
    if (has_self && fn.owning_impl < 0) {
        res.diagnostic = "method target without an owning impl";
        return res;
    }
    if (fn.is_unsafe_fn) {
        res.diagnostic = "unsafe fn targets are excluded (UAPI misuse causes false positives)";
        return res;
    }

    // trait-impl targets need the trait in scope for method syntax
    std::string trait_import;
    auto as_pos = tree.target_path.find(" as ");
    if (tree.target_path.front() == '<' && as_pos != std::string::npos) {
        auto close = tree.target_path.find('>', as_pos);
        if (close != std::string::npos)
            trait_import = tree.target_path.substr(as_pos + 4, close - as_pos - 4);
    }

    // materialize custom types for the target's generic params up front so
    // annotations and nested plans agree on the substitution
    for (const auto& gp : fn.generic_params) {
        if (gp.is_fn_like) continue;
        auto plan = typeplan::plan_for_generic(gp, model);
        if (plan.external_opaque) {
            res.diagnostic = "generic '" + gp.name + "' is bounded by an unmodeled external trait";
            return res;
        }
        em.custom_type_for(plan);
    }

    std::vector<std::string> arg_exprs;
    for (const auto& plan : tree.args) {
        auto e = em.emit_value(plan, tree.target_path + " arg");
        if (!e) {
            res.diagnostic = em.diagnostic.empty() ? "argument emission failed" : em.diagnostic;
            return res;
        }
        arg_exprs.push_back(*e);
    }

    // target invocation
    std::ostringstream call;
    std::string method = tree.target_path;
    auto pos = method.rfind("::");
    if (pos != std::string::npos) method = method.substr(pos + 2);
    if (!has_self && tree.target_path.front() == '<') {
        res.diagnostic = "trait-qualified associated fn target unsupported";
        return res;
    }
    if (has_self) {
        call << "(" << arg_exprs[0] << ")." << method << "(";
        for (size_t i = 1; i < arg_exprs.size(); ++i) call << (i > 1 ? ", " : "") << arg_exprs[i];
        call << ");";
    } else {
        std::string bind;
        // a self-less target returning generics needs its result annotated
        bool ret_generic = fn.ret.shape != Shape::Unit && !em.can_annotate(fn.ret)
                               ? false
                               : fn.ret.shape != Shape::Unit;
        if (ret_generic && em.can_annotate(fn.ret) && fn.ret.shape != Shape::Primitive) {
            std::string local = em.fresh_local();
            bind = "let " + local + ": " + em.type_text(fn.ret) + " = ";
        }
        call << bind << em.crate_path(tree.target_path) << "(";
        for (size_t i = 0; i < arg_exprs.size(); ++i) call << (i ? ", " : "") << arg_exprs[i];
        call << ");";
    }
    art.invoked_paths.push_back(tree.target_path);

    art.min_input_len = em.layout.next_offset;

    std::ostringstream src;
    if (!art.contains_unsafe) src << "#![forbid(unsafe_code)]\n";
    src << "#![allow(unused_mut, unused_variables, dead_code, unused_imports)]\n";
    src << "#[macro_use]\nmod fuzz_rt;\nuse fuzz_rt::*;\n";
    if (!trait_import.empty()) src << "use " << em.crate_path(trait_import) << ";\n";
    src << "\n";
    std::string pre = em.preamble.str();
    if (!pre.empty()) src << pre << "\n";
    src << "fn main() {\n";
    src << "    fuzz_nohook!(|data: &[u8]| {\n";
    src << "        if data.len() < " << art.min_input_len << " { return; }\n";
    src << "        set_global_data(data);\n";
    src << em.body.str();
    src << "        " << call.str() << "\n";
    src << "    });\n";
    src << "}\n";
    art.source_text = src.str();

    // stable package name
    std::string slug = tree.target_path;
    for (auto& c : slug)
        if (!isalnum(static_cast<unsigned char>(c))) c = '_';
    char hex[32];
    snprintf(hex, sizeof(hex), "%08llx", static_cast<unsigned long long>(tree.tree_id & 0xffffffff));
    art.name = "h_" + slug + "_" + hex;

    res.ok = true;
    return res;
}

// --------------------------------------------------------------- runtime

std::string fuzz_rt_source() {
    return R"RT(// Fuzzing runtime: per-run input buffer, fixed-offset and cursor decoders.
#![allow(dead_code)]

use std::cell::RefCell;

thread_local! {
    static BUF: RefCell<Vec<u8>> = RefCell::new(Vec::new());
    static CURSOR: RefCell<usize> = RefCell::new(0);
}

#[derive(Clone, Copy)]
pub struct GlobalData;

pub static DATA: GlobalData = GlobalData;

pub fn set_global_data(data: &[u8]) {
    BUF.with(|b| {
        let mut buf = b.borrow_mut();
        buf.clear();
        buf.extend_from_slice(data);
    });
    CURSOR.with(|c| {
        *c.borrow_mut() = 0;
    });
}

fn byte_at(i: usize) -> u8 {
    BUF.with(|b| b.borrow().get(i).copied().unwrap_or(0))
}

fn le_at(i: usize, n: usize) -> u64 {
    let mut out: u64 = 0;
    for k in 0..n {
        out |= (byte_at(i + k) as u64) << (8 * k);
    }
    out
}

fn advance(n: usize) -> usize {
    CURSOR.with(|c| {
        let mut cur = c.borrow_mut();
        let at = *cur;
        *cur = at.saturating_add(n);
        at
    })
}

fn printable(b: u8) -> u8 {
    0x20 + (b % 0x5f)
}

pub fn _to_u8(_: GlobalData, i: usize) -> u8 { byte_at(i) }
pub fn _to_u16(_: GlobalData, i: usize) -> u16 { le_at(i, 2) as u16 }
pub fn _to_u32(_: GlobalData, i: usize) -> u32 { le_at(i, 4) as u32 }
pub fn _to_u64(_: GlobalData, i: usize) -> u64 { le_at(i, 8) }
pub fn _to_usize(_: GlobalData, i: usize) -> usize { le_at(i, 8) as usize }
pub fn _to_bool(_: GlobalData, i: usize) -> bool { byte_at(i) & 1 != 0 }

pub fn _to_str(_: GlobalData, s: usize, e: usize) -> String {
    let mut out = String::new();
    BUF.with(|b| {
        let buf = b.borrow();
        let hi = e.min(buf.len());
        let mut i = s;
        while i < hi {
            out.push(printable(buf[i]) as char);
            i += 1;
        }
    });
    out
}

pub fn _next_u8(_: GlobalData) -> u8 { byte_at(advance(1)) }
pub fn _next_u16(_: GlobalData) -> u16 { le_at(advance(2), 2) as u16 }
pub fn _next_u32(_: GlobalData) -> u32 { le_at(advance(4), 4) as u32 }
pub fn _next_usize(_: GlobalData) -> usize { le_at(advance(8), 8) as usize }
pub fn _next_bool(_: GlobalData) -> bool { byte_at(advance(1)) & 1 != 0 }

pub fn _next_string(_: GlobalData) -> String {
    let n = byte_at(advance(1)) as usize;
    let mut out = String::new();
    for _ in 0..n {
        let i = advance(1);
        let done = BUF.with(|b| i >= b.borrow().len());
        if done {
            break;
        }
        out.push(printable(byte_at(i)) as char);
    }
    out
}

// Entry macro: replay one input (argv path or stdin) through the closure.
macro_rules! fuzz_nohook {
    ($body:expr) => {{
        let args: Vec<String> = std::env::args().collect();
        let data: Vec<u8> = if args.len() > 1 {
            std::fs::read(&args[1]).unwrap_or_default()
        } else {
            use std::io::Read;
            let mut buf = Vec::new();
            let _ = std::io::stdin().read_to_end(&mut buf);
            buf
        };
        let run = $body;
        run(&data[..]);
    }};
}
)RT";
}

std::string harness_manifest(const std::string& harness_name, const std::string& crate_name,
                             const std::string& crate_path) {
    std::ostringstream out;
    out << "[package]\n";
    out << "name = \"" << harness_name << "\"\n";
    out << "version = \"0.0.0\"\n";
    out << "edition = \"2021\"\n\n";
    out << "[dependencies]\n";
    out << crate_name << " = { path = \"" << crate_path << "\" }\n\n";
    out << "[[bin]]\n";
    out << "name = \"" << harness_name << "\"\n";
    out << "path = \"src/main.rs\"\n";
    return out.str();
}

void write_harness_package(const std::string& dir, const HarnessArtifact& artifact,
                           const std::string& crate_name, const std::string& crate_path) {
    namespace fs = std::filesystem;
    fs::create_directories(fs::path(dir) / "src");
    std::ofstream(fs::path(dir) / "src" / "main.rs") << artifact.source_text;
    std::ofstream(fs::path(dir) / "src" / "fuzz_rt.rs") << fuzz_rt_source();
    std::ofstream(fs::path(dir) / "Cargo.toml")
        << harness_manifest(artifact.name, crate_name, crate_path);
}

// ------------------------------------------------------------------ json

nlohmann::ordered_json HarnessArtifact::to_json() const {
    nlohmann::ordered_json j;
    j["name"] = name;
    j["target_fn"] = target_fn;
    j["target_path"] = target_path;
    j["provenance"] = provenance == Provenance::Static ? "static" : "augmented";
    j["min_input_len"] = min_input_len;
    j["tree_id"] = tree_id;
    j["invoked"] = invoked_paths;
    j["custom_functionality"] = has_custom_functionality;
    j["contains_unsafe"] = contains_unsafe;
    if (!degraded_returns.empty()) j["degraded_returns"] = degraded_returns;
    nlohmann::ordered_json fields = nlohmann::ordered_json::array();
    for (const auto& f : decoder_layout) {
        nlohmann::ordered_json fj;
        fj["semantic"] = static_cast<int>(f.semantic);
        fj["cursor"] = f.cursor;
        if (!f.cursor) {
            fj["offset"] = f.offset;
            fj["width"] = f.width;
        }
        if (f.modulus) fj["modulus"] = f.modulus;
        fj["consumer"] = f.consumer;
        fields.push_back(fj);
    }
    j["decoder_layout"] = fields;
    j["source"] = source_text;
    return j;
}

HarnessArtifact HarnessArtifact::from_json(const nlohmann::ordered_json& j) {
    HarnessArtifact a;
    a.name = j.at("name").get<std::string>();
    a.target_fn = j.at("target_fn").get<int32_t>();
    a.target_path = j.at("target_path").get<std::string>();
    a.provenance = j.at("provenance") == "static" ? Provenance::Static : Provenance::Augmented;
    a.min_input_len = j.at("min_input_len").get<size_t>();
    a.tree_id = j.at("tree_id").get<uint64_t>();
    a.invoked_paths = j.at("invoked").get<std::vector<std::string>>();
    a.has_custom_functionality = j.at("custom_functionality").get<bool>();
    a.contains_unsafe = j.at("contains_unsafe").get<bool>();
    if (j.contains("degraded_returns"))
        a.degraded_returns = j.at("degraded_returns").get<std::vector<std::string>>();
    for (const auto& fj : j.at("decoder_layout")) {
        DecoderField f;
        f.semantic = static_cast<FieldSemantic>(fj.at("semantic").get<int>());
        f.cursor = fj.at("cursor").get<bool>();
        if (!f.cursor) {
            f.offset = fj.at("offset").get<size_t>();
            f.width = fj.at("width").get<size_t>();
        }
        if (fj.contains("modulus")) f.modulus = fj.at("modulus").get<int>();
        f.consumer = fj.at("consumer").get<std::string>();
        a.decoder_layout.push_back(f);
    }
    a.source_text = j.at("source").get<std::string>();
    return a;
}

} // namespace reachfuzz::harness
