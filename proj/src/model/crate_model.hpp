#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "frontend/ast.hpp"
#include "support/diagnostics.hpp"
#include "support/span.hpp"

namespace reachfuzz::model {

using ItemId = int32_t;
constexpr ItemId kNoItem = -1;

enum class ItemKind { Function, Struct, Enum, Module, ReExport, Trait };

enum class Vis { Private, Public, Restricted };

// ------------------------------------------------------------------ types

enum class Shape {
    Primitive,
    StdContainer,
    Slice,
    StringSlice,
    Array,
    Tuple,
    Complex,
    Reference,
    RawPointer,
    GenericParam,
    Closure,
    TraitObject,
    AssociatedType,
    Unit,
    Unresolved, // named type outside the model (external crate / std leaf)
};

enum class StdContainerKind { Vec, BoxT, Option, Result, String };

struct TraitId {
    ItemId id = kNoItem;     // kNoItem = external trait
    std::string name;        // always set, used for external bounds
    bool operator==(const TraitId&) const = default;
    auto operator<=>(const TraitId&) const = default;
};

struct TypeDescriptor {
    Shape shape = Shape::Unit;
    std::string name;                        // primitive name / generic param / assoc name / unresolved path
    StdContainerKind container = StdContainerKind::Vec;
    ItemId complex_item = kNoItem;           // Shape::Complex
    TraitId trait_ref;                       // TraitObject / AssociatedType
    bool is_mut = false;                     // Reference / RawPointer
    uint64_t array_len = 0;
    // inners / members; closures store params followed by the return type
    std::vector<TypeDescriptor> children;

    bool operator==(const TypeDescriptor& o) const = default;

    bool contains(const TypeDescriptor& other) const;
    bool is_fuzzable_leaf() const { return shape == Shape::Primitive || shape == Shape::StringSlice; }
    std::string display() const;

    // Table-2 category (1..8); 0 when the descriptor is unresolved.
    int category() const;
};

struct AssocConstraint {
    std::string assoc_name;
    TraitId on_trait;                      // declaring trait when known
    std::vector<TraitId> bounds;           // where T::Assoc: Bound
    std::optional<TypeDescriptor> required; // Tr<Assoc = Ty>
    bool operator==(const AssocConstraint&) const = default;
};

struct GenericParam {
    std::string name;
    std::vector<TraitId> bounds;
    std::vector<AssocConstraint> assoc_constraints;
    // Fn-family sugar captured on the bound: when set, this generic is a callable
    std::vector<TypeDescriptor> fn_sugar_params;
    std::optional<TypeDescriptor> fn_sugar_ret;
    bool is_fn_like = false;
    bool from_where_clause = false;
    bool operator==(const GenericParam&) const = default;
};

// ------------------------------------------------------------------ items

struct ItemRecord {
    ItemId id = kNoItem;
    ItemKind kind = ItemKind::Function;
    std::string name;
    ItemId parent_module = kNoItem;
    Vis declared_visibility = Vis::Private;
    Span span;
    bool unsupported = false;      // opaque record, kept so denominators stay honest
    std::string unsupported_note;
    ItemId reexport_target = kNoItem; // ItemKind::ReExport
};

struct ParamDescriptor {
    std::string name;
    TypeDescriptor type;
    bool operator==(const ParamDescriptor&) const = default;
};

enum class SelfKind { None, Value, SharedRef, UniqueRef };

struct FunctionRecord {
    ItemId item = kNoItem;
    std::vector<ParamDescriptor> params;
    TypeDescriptor ret;
    bool is_unsafe_fn = false;
    std::vector<Span> unsafe_block_spans;
    SelfKind self_kind = SelfKind::None;
    std::vector<GenericParam> generic_params;
    int32_t owning_impl = -1;  // index into impls, -1 = free function
    int32_t owning_trait = -1; // index into traits when this is a trait default method
    const ast::FnDecl* body_ast = nullptr; // not serialized; null after JSON reload
};

struct AssociatedTypeDecl {
    std::string name;
    std::vector<TraitId> bounds;
    bool operator==(const AssociatedTypeDecl&) const = default;
};

struct FnSignature {
    std::string name;
    std::vector<ParamDescriptor> params;
    TypeDescriptor ret;
    SelfKind self_kind = SelfKind::None;
    bool is_unsafe = false;
    bool operator==(const FnSignature&) const = default;
};

struct TraitRecord {
    ItemId id = kNoItem;
    std::string name;
    bool is_unsafe_trait = false;
    std::vector<TraitId> supertraits;
    std::vector<FnSignature> required_fns;
    std::vector<FnSignature> default_fns;
    std::vector<AssociatedTypeDecl> associated_types;
    std::vector<int32_t> default_fn_records; // FunctionRecord indices for default bodies
};

struct AssocBinding {
    std::string name;
    TypeDescriptor type;
    bool operator==(const AssocBinding&) const = default;
};

struct ImplRecord {
    TypeDescriptor self_type;
    std::optional<TraitId> trait_ref;
    std::vector<int32_t> fn_records; // FunctionRecord indices
    std::vector<AssocBinding> assoc_types;
    bool is_unsafe_impl = false;
    std::vector<GenericParam> generic_params;
};

// ------------------------------------------------------------------ model

struct FieldRecord {
    std::string name; // "0", "1", ... for tuple structs
    TypeDescriptor type;
    Vis vis = Vis::Private;
    bool operator==(const FieldRecord&) const = default;
};

struct VariantRecord {
    std::string name;
    std::vector<TypeDescriptor> payload;
    bool operator==(const VariantRecord&) const = default;
};

struct CrateModel {
    std::string crate_name;
    std::vector<ItemRecord> items;
    std::vector<FunctionRecord> functions;     // index = "function id" used by graph layers
    std::vector<TraitRecord> traits;
    std::vector<ImplRecord> impls;
    std::map<ItemId, std::string> export_table; // only externally reachable items
    std::set<std::string> feature_set;
    std::map<ItemId, std::vector<FieldRecord>> struct_fields;
    std::map<ItemId, std::vector<VariantRecord>> enum_variants;

    // lookups
    std::map<ItemId, int32_t> fn_record_by_item;
    std::map<ItemId, int32_t> trait_by_item;

    const ItemRecord& item(ItemId id) const { return items.at(static_cast<size_t>(id)); }
    const FunctionRecord* function_for(ItemId id) const {
        auto it = fn_record_by_item.find(id);
        return it == fn_record_by_item.end() ? nullptr : &functions[it->second];
    }
    const TraitRecord* trait_for(ItemId id) const {
        auto it = trait_by_item.find(id);
        return it == trait_by_item.end() ? nullptr : &traits[it->second];
    }
    bool is_exported(ItemId id) const { return export_table.count(id) > 0; }
    std::optional<std::string> public_path(ItemId id) const {
        auto it = export_table.find(id);
        if (it == export_table.end()) return std::nullopt;
        return it->second;
    }

    nlohmann::ordered_json to_json() const;
    static CrateModel from_json(const nlohmann::ordered_json& j);
    bool equals(const CrateModel& o) const; // field-wise, ignores AST backrefs
};

// Name-resolution side tables built during load; required by the analyses
// that resolve paths and method calls inside function bodies.
struct NameIndex {
    // per-module scope: visible name -> item (includes `use` aliases)
    std::map<ItemId, std::map<std::string, ItemId>> module_scope;
    std::map<ItemId, std::vector<int32_t>> impls_by_complex; // struct/enum item -> impl indices
    std::map<ItemId, std::vector<int32_t>> impls_by_trait;   // trait item -> impl indices
    ItemId root_module = kNoItem;
};

// A loaded crate keeps the source map and ASTs alive for the analyses that
// need function bodies; the CrateModel itself is plain data.
struct LoadedCrate {
    CrateModel model;
    NameIndex index;
    std::shared_ptr<SourceMap> sources;
    std::shared_ptr<ast::Crate> ast;
    DiagnosticSink diagnostics;
};

// [OP] load_crate — parse a crate directory (manifest + src/) into a model.
LoadedCrate load_crate(const std::string& source_root, const std::set<std::string>& features = {});

// Same pipeline over in-memory source, used heavily by tests.
LoadedCrate load_crate_from_source(const std::string& crate_name, const std::string& lib_rs,
                                   const std::set<std::string>& features = {});

// Harness sources declare `mod fuzz_rt;` whose runtime has native semantics
// in the executor; the module file is treated as opaque here.
LoadedCrate load_harness_source(const std::string& name, const std::string& main_rs);

// Shared by the directory loader and the in-memory path.
LoadedCrate build_model_from_ast(std::string crate_name, std::shared_ptr<ast::Crate> crate,
                                 std::shared_ptr<SourceMap> sources,
                                 const std::set<std::string>& features, DiagnosticSink diags);

// [OP] effective_visibility — true iff a public module chain or public
// re-export exposes the item outside the crate.
bool effective_visibility(ItemId item, const CrateModel& model);

// [OP] locate_unsafe — one entry per unsafe block; unsafe fns contribute
// their whole body span.
struct UnsafeSite {
    int32_t fn_record;
    Span span;
};
std::vector<UnsafeSite> locate_unsafe(const CrateModel& model);

// Type-descriptor resolution context shared with downstream analyses.
struct ResolveCtx {
    const CrateModel* model = nullptr;
    std::map<std::string, ItemId>* root_scope = nullptr;
    const TypeDescriptor* self_type = nullptr;
    const std::vector<GenericParam>* generics = nullptr;
};

std::string vis_name(Vis v);

} // namespace reachfuzz::model
