#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <variant>
#include <vector>

#include "frontend/ast.hpp"
#include "model/crate_model.hpp"

namespace reachfuzz::exec {

struct Value;
using Cell = std::shared_ptr<Value>;

// Identity of a user-defined type: the defining crate's model plus item id.
struct TypeKey {
    const model::CrateModel* crate = nullptr;
    model::ItemId item = model::kNoItem;
    bool operator==(const TypeKey&) const = default;
};

struct UnitV {};
struct UninitV {};
struct MovedV {};

struct IntV {
    uint64_t bits = 0;
    uint8_t width = 32; // 8/16/32/64; usize modeled as 64
    bool is_signed = false;

    int64_t as_signed() const;
    uint64_t as_unsigned() const { return bits; }
};

struct BoolV {
    bool v = false;
};
struct FloatV {
    double v = 0;
};
struct CharV {
    uint32_t cp = 0;
};
struct StrSliceV {
    std::string text; // immutable view payload, copied by value
};

// Heap-backed string: byte slots live in the allocation record.
struct StringV {
    uint64_t alloc = 0;
    size_t len = 0;
};

struct VecV {
    uint64_t alloc = 0; // 0 = no buffer yet (len & cap both 0)
    size_t len = 0;
    size_t elem_size = 1;
    std::string elem_desc; // for reports
};

struct BoxV {
    uint64_t alloc = 0; // single-slot allocation
};

struct SliceV {
    uint64_t alloc = 0;
    size_t start = 0; // element index
    size_t len = 0;
    size_t elem_size = 1;
    bool is_mut = false;
};

struct RawPtrV {
    uint64_t alloc = 0;
    int64_t byte_off = 0;
    size_t elem_size = 1;
    bool is_mut = false;
};

struct RefV {
    Cell target;
    bool is_mut = false;
};

struct StructV {
    TypeKey type;
    std::string type_name;
    std::vector<std::string> field_names;
    std::vector<Cell> fields;
};

enum class BuiltinEnum { None_ = 0, Option, Result };

struct EnumV {
    BuiltinEnum builtin = BuiltinEnum::None_; // None_ = user enum
    TypeKey type;                             // user enums
    std::string type_name;
    std::string variant; // "Some"/"None"/"Ok"/"Err" or user variant name
    std::vector<Cell> payload;
};

struct TupleV {
    std::vector<Cell> elems;
};

struct ArrayV {
    std::vector<Cell> elems;
};

// A named fn (crate fn or harness custom fn) used as a value.
struct FnItemV {
    const ast::FnDecl* decl = nullptr;
    const model::CrateModel* crate = nullptr;
};

struct ClosureV {
    const ast::Expr* expr = nullptr; // Expr::Closure
    const model::CrateModel* crate = nullptr;
    // captured environment: cells by name (captured by reference semantics)
    std::vector<std::pair<std::string, Cell>> captures;
};

struct RangeV {
    uint64_t lo = 0;
    uint64_t hi = 0; // exclusive
};

struct Value {
    std::variant<UnitV, UninitV, MovedV, IntV, BoolV, FloatV, CharV, StrSliceV, StringV, VecV,
                 BoxV, SliceV, RawPtrV, RefV, StructV, EnumV, TupleV, ArrayV, FnItemV, ClosureV,
                 RangeV>
        kind;
};

inline Value make_uninit() { return Value{UninitV{}}; }
inline Cell cell_of(Value v) { return std::make_shared<Value>(std::move(v)); }

bool is_copy(const Value& v);
std::string value_kind_name(const Value& v);

// Byte width used for pointer arithmetic and allocation sizing.
size_t size_of_value(const Value& v);
size_t size_of_type(const model::TypeDescriptor& t);

} // namespace reachfuzz::exec
