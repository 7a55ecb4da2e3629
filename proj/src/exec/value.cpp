#include "exec/value.hpp"

namespace reachfuzz::exec {

int64_t IntV::as_signed() const {
    switch (width) {
        case 8: return static_cast<int8_t>(bits);
        case 16: return static_cast<int16_t>(bits);
        case 32: return static_cast<int32_t>(bits);
        default: return static_cast<int64_t>(bits);
    }
}

bool is_copy(const Value& v) {
    return std::visit(
        [](const auto& k) {
            using T = std::decay_t<decltype(k)>;
            return std::is_same_v<T, UnitV> || std::is_same_v<T, IntV> || std::is_same_v<T, BoolV> ||
                   std::is_same_v<T, FloatV> || std::is_same_v<T, CharV> ||
                   std::is_same_v<T, StrSliceV> || std::is_same_v<T, RawPtrV> ||
                   std::is_same_v<T, FnItemV> || std::is_same_v<T, SliceV> ||
                   std::is_same_v<T, UninitV> || std::is_same_v<T, RefV> ||
                   std::is_same_v<T, RangeV>;
        },
        v.kind);
}

std::string value_kind_name(const Value& v) {
    return std::visit(
        [](const auto& k) -> std::string {
            using T = std::decay_t<decltype(k)>;
            if constexpr (std::is_same_v<T, UnitV>) return "()";
            else if constexpr (std::is_same_v<T, UninitV>) return "<uninit>";
            else if constexpr (std::is_same_v<T, MovedV>) return "<moved>";
            else if constexpr (std::is_same_v<T, IntV>) return "int";
            else if constexpr (std::is_same_v<T, BoolV>) return "bool";
            else if constexpr (std::is_same_v<T, FloatV>) return "float";
            else if constexpr (std::is_same_v<T, CharV>) return "char";
            else if constexpr (std::is_same_v<T, StrSliceV>) return "&str";
            else if constexpr (std::is_same_v<T, StringV>) return "String";
            else if constexpr (std::is_same_v<T, VecV>) return "Vec";
            else if constexpr (std::is_same_v<T, BoxV>) return "Box";
            else if constexpr (std::is_same_v<T, SliceV>) return "slice";
            else if constexpr (std::is_same_v<T, RawPtrV>) return "raw-ptr";
            else if constexpr (std::is_same_v<T, RefV>) return "ref";
            else if constexpr (std::is_same_v<T, StructV>) return k.type_name;
            else if constexpr (std::is_same_v<T, EnumV>) return k.variant;
            else if constexpr (std::is_same_v<T, TupleV>) return "tuple";
            else if constexpr (std::is_same_v<T, ArrayV>) return "array";
            else if constexpr (std::is_same_v<T, FnItemV>) return "fn-item";
            else if constexpr (std::is_same_v<T, RangeV>) return "range";
            else return "closure";
        },
        v.kind);
}

size_t size_of_value(const Value& v) {
    return std::visit(
        [](const auto& k) -> size_t {
            using T = std::decay_t<decltype(k)>;
            if constexpr (std::is_same_v<T, IntV>) return k.width ? k.width / 8 : 8;
            else if constexpr (std::is_same_v<T, BoolV>) return 1;
            else if constexpr (std::is_same_v<T, CharV>) return 4;
            else if constexpr (std::is_same_v<T, FloatV>) return 8;
            else if constexpr (std::is_same_v<T, StringV>) return 24;
            else if constexpr (std::is_same_v<T, VecV>) return 24;
            else if constexpr (std::is_same_v<T, BoxV>) return 8;
            else if constexpr (std::is_same_v<T, RawPtrV>) return 8;
            else if constexpr (std::is_same_v<T, RefV>) return 8;
            else if constexpr (std::is_same_v<T, SliceV>) return 16;
            else if constexpr (std::is_same_v<T, StrSliceV>) return 16;
            else if constexpr (std::is_same_v<T, StructV>) {
                size_t n = 0;
                for (const auto& f : k.fields) n += f ? size_of_value(*f) : 8;
                return n == 0 ? 1 : n;
            } else if constexpr (std::is_same_v<T, EnumV>) {
                size_t n = 8;
                for (const auto& p : k.payload) n += p ? size_of_value(*p) : 8;
                return n;
            } else if constexpr (std::is_same_v<T, TupleV>) {
                size_t n = 0;
                for (const auto& e : k.elems) n += e ? size_of_value(*e) : 8;
                return n == 0 ? 1 : n;
            } else if constexpr (std::is_same_v<T, ArrayV>) {
                size_t n = 0;
                for (const auto& e : k.elems) n += e ? size_of_value(*e) : 8;
                return n == 0 ? 1 : n;
            } else {
                return 8;
            }
        },
        v.kind);
}

size_t size_of_type(const model::TypeDescriptor& t) {
    using model::Shape;
    switch (t.shape) {
        case Shape::Primitive: {
            if (t.name == "u8" || t.name == "i8" || t.name == "bool") return 1;
            if (t.name == "u16" || t.name == "i16") return 2;
            if (t.name == "u32" || t.name == "i32" || t.name == "char" || t.name == "f32") return 4;
            return 8;
        }
        case Shape::StdContainer:
            if (t.container == model::StdContainerKind::BoxT) return 8;
            if (t.container == model::StdContainerKind::Option ||
                t.container == model::StdContainerKind::Result) {
                size_t inner = 8;
                for (const auto& c : t.children) inner = std::max(inner, size_of_type(c));
                return inner + 8;
            }
            return 24; // Vec / String headers
        case Shape::Reference:
        case Shape::RawPointer: return 8;
        case Shape::Slice:
        case Shape::StringSlice: return 16;
        case Shape::Array: return t.array_len * (t.children.empty() ? 1 : size_of_type(t.children[0]));
        case Shape::Tuple: {
            size_t n = 0;
            for (const auto& c : t.children) n += size_of_type(c);
            return n == 0 ? 1 : n;
        }
        default: return 24; // complex / generic placeholders
    }
}

} // namespace reachfuzz::exec
