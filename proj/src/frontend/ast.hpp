#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "support/span.hpp"

// AST for the supported source subset. Syntax only; semantic resolution
// (visibility, type descriptors, call targets) lives in the model layers.
namespace reachfuzz::ast {

struct Type;
struct Expr;
struct Pat;
struct Item;
using TypePtr = std::unique_ptr<Type>;
using ExprPtr = std::unique_ptr<Expr>;
using PatPtr = std::unique_ptr<Pat>;
using ItemPtr = std::unique_ptr<Item>;

// ---------------------------------------------------------------- types

struct PathSegment {
    std::string name;
    std::vector<TypePtr> type_args;
};

struct TypePath {
    std::vector<PathSegment> segments;
    std::string tail() const { return segments.empty() ? std::string() : segments.back().name; }
};

struct TraitRef {
    TypePath path;
    // Fn-family sugar: FnMut(&mut T) -> bool
    bool has_fn_sugar = false;
    std::vector<TypePtr> fn_params;
    TypePtr fn_ret; // null = unit
    // associated-type bindings: Iterator<Item = u8>
    std::vector<std::pair<std::string, TypePtr>> assoc_bindings;
    Span span;
    std::string name() const { return path.tail(); }
};

struct Type {
    struct Path {
        TypePath path;
    };
    struct Ref {
        bool is_mut = false;
        TypePtr inner;
    };
    struct RawPtr {
        bool is_mut = false;
        TypePtr inner;
    };
    struct Slice {
        TypePtr inner;
    };
    struct Array {
        TypePtr inner;
        uint64_t len = 0;
    };
    struct Tuple {
        std::vector<TypePtr> members; // empty = unit
    };
    struct TraitObject {
        TraitRef trait_ref; // dyn Tr
    };
    struct Infer {};

    std::variant<Path, Ref, RawPtr, Slice, Array, Tuple, TraitObject, Infer> kind;
    Span span;
};

// ------------------------------------------------------------- patterns

struct Pat {
    struct Wild {};
    struct Binding {
        std::string name;
        bool is_mut = false;
        bool by_ref = false;
    };
    struct Tuple {
        std::vector<PatPtr> elems;
    };
    struct Lit {
        ExprPtr value;
    };
    struct Variant { // Some(x), Ok(v), Path::Variant(a, b)
        TypePath path;
        std::vector<PatPtr> elems;
        bool has_parens = false;
    };
    struct Ref {
        PatPtr inner;
        bool is_mut = false;
    };

    std::variant<Wild, Binding, Tuple, Lit, Variant, Ref> kind;
    Span span;
};

// ---------------------------------------------------------- expressions

enum class BinOp {
    Add, Sub, Mul, Div, Rem,
    And, Or,
    BitAnd, BitOr, BitXor, Shl, Shr,
    Eq, Ne, Lt, Gt, Le, Ge,
};

enum class UnOp { Neg, Not, Deref };

struct Block;
using BlockPtr = std::unique_ptr<Block>;

struct MatchArm {
    PatPtr pat;
    ExprPtr guard; // optional
    ExprPtr body;
};

struct ClosureParam {
    std::string name;
    TypePtr ty; // optional
};

struct Expr {
    struct LitInt {
        uint64_t value;
        std::string suffix;
    };
    struct LitFloat {
        double value;
    };
    struct LitBool {
        bool value;
    };
    struct LitStr {
        std::string value;
    };
    struct LitChar {
        std::string value;
    };
    struct Path { // foo::Shape::zero, self, Some
        TypePath path;
    };
    struct Unary {
        UnOp op;
        ExprPtr operand;
    };
    struct RefExpr {
        bool is_mut;
        ExprPtr operand;
    };
    struct Binary {
        BinOp op;
        ExprPtr lhs;
        ExprPtr rhs;
    };
    struct Assign {
        std::optional<BinOp> op; // set for compound assignment
        ExprPtr lhs;
        ExprPtr rhs;
    };
    struct Call {
        ExprPtr callee;
        std::vector<ExprPtr> args;
    };
    struct MethodCall {
        ExprPtr receiver;
        std::string method;
        std::vector<ExprPtr> args;
        Span method_span;
    };
    struct Field {
        ExprPtr base;
        std::string name; // "0", "1" for tuple fields
    };
    struct Index {
        ExprPtr base;
        ExprPtr index;
    };
    struct StructLit {
        TypePath path;
        std::vector<std::pair<std::string, ExprPtr>> fields;
    };
    struct TupleExpr {
        std::vector<ExprPtr> elems;
    };
    struct ArrayExpr {
        std::vector<ExprPtr> elems;
    };
    struct ArrayRepeat {
        ExprPtr elem;
        ExprPtr count;
    };
    struct If {
        ExprPtr cond;
        BlockPtr then_block;
        ExprPtr else_expr; // Block expr or If
    };
    struct IfLet {
        PatPtr pat;
        ExprPtr scrutinee;
        BlockPtr then_block;
        ExprPtr else_expr;
    };
    struct Match {
        ExprPtr scrutinee;
        std::vector<MatchArm> arms;
    };
    struct While {
        ExprPtr cond;
        BlockPtr body;
    };
    struct WhileLet {
        PatPtr pat;
        ExprPtr scrutinee;
        BlockPtr body;
    };
    struct Loop {
        BlockPtr body;
    };
    struct For {
        PatPtr pat;
        ExprPtr iter;
        BlockPtr body;
    };
    struct Break {};
    struct Continue {};
    struct Return {
        ExprPtr value; // optional
    };
    struct BlockExpr {
        BlockPtr block;
        bool is_unsafe = false;
    };
    struct Closure {
        std::vector<ClosureParam> params;
        TypePtr ret; // optional
        ExprPtr body;
        bool is_move = false;
    };
    struct MacroCall { // allowlisted macros: vec!, panic!, assert!, assert_eq!, unreachable!, fuzz macros
        std::string name;
        std::vector<ExprPtr> args;
        bool vec_repeat = false; // vec![elem; count]
    };
    struct Cast {
        ExprPtr operand;
        TypePtr ty;
    };
    struct Range {
        ExprPtr lo; // optional
        ExprPtr hi; // optional
        bool inclusive = false;
    };
    struct Question { // expr?
        ExprPtr inner;
    };

    std::variant<LitInt, LitFloat, LitBool, LitStr, LitChar, Path, Unary, RefExpr, Binary, Assign,
                 Call, MethodCall, Field, Index, StructLit, TupleExpr, ArrayExpr, ArrayRepeat, If,
                 IfLet, Match, While, WhileLet, Loop, For, Break, Continue, Return, BlockExpr,
                 Closure, MacroCall, Cast, Range, Question>
        kind;
    Span span;
};

struct Stmt {
    struct Let {
        PatPtr pat;
        TypePtr ty;   // optional
        ExprPtr init; // optional
    };
    struct ExprStmt {
        ExprPtr expr;
        bool has_semi = false;
    };
    std::variant<Let, ExprStmt> kind;
    Span span;
};

struct Block {
    std::vector<Stmt> stmts; // trailing expression = last ExprStmt with has_semi == false
    Span span;
};

// --------------------------------------------------------------- items

enum class Visibility { Private, Public, Restricted }; // Restricted = pub(crate) etc.

struct Attribute {
    std::string name; // cfg, derive, allow, ...
    std::string args; // raw text between parens
};

struct GenericParamAst {
    std::string name;
    std::vector<TraitRef> bounds;
    bool from_where_clause = false;
};

struct AssocWhere { // where T::Assoc: Bound
    std::string param;
    std::string assoc;
    std::vector<TraitRef> bounds;
};

struct Generics {
    std::vector<GenericParamAst> params;
    std::vector<AssocWhere> assoc_wheres;
};

enum class SelfKind { None, Value, SharedRef, UniqueRef };

struct FnParam {
    std::string name;
    TypePtr ty;
    Span span;
};

struct FnDecl {
    std::string name;
    Generics generics;
    SelfKind self_kind = SelfKind::None;
    std::vector<FnParam> params;
    TypePtr ret; // null = unit
    BlockPtr body; // null for trait method signatures
    bool is_unsafe = false;
    Visibility vis = Visibility::Private;
    std::vector<Attribute> attrs;
    std::string docs;
    Span span;
};

struct FieldDef {
    std::string name; // empty for tuple fields
    TypePtr ty;
    Visibility vis = Visibility::Private;
};

struct StructDef {
    std::string name;
    Generics generics;
    std::vector<FieldDef> fields;
    bool is_tuple = false;
    bool is_unit = false;
    Visibility vis = Visibility::Private;
    std::vector<Attribute> attrs;
    std::string docs;
    Span span;
};

struct EnumVariant {
    std::string name;
    std::vector<TypePtr> fields; // tuple variant payload; empty = unit variant
};

struct EnumDef {
    std::string name;
    Generics generics;
    std::vector<EnumVariant> variants;
    Visibility vis = Visibility::Private;
    std::vector<Attribute> attrs;
    std::string docs;
    Span span;
};

struct AssocTypeDecl {
    std::string name;
    std::vector<TraitRef> bounds;
};

struct TraitDef {
    std::string name;
    Generics generics;
    std::vector<TraitRef> supertraits;
    std::vector<AssocTypeDecl> assoc_types;
    std::vector<FnDecl> fns; // with body = default method
    bool is_unsafe = false;
    Visibility vis = Visibility::Private;
    std::vector<Attribute> attrs;
    std::string docs;
    Span span;
};

struct AssocTypeBinding {
    std::string name;
    TypePtr ty;
};

struct ImplBlock {
    Generics generics;
    std::optional<TraitRef> trait_ref;
    TypePtr self_ty;
    std::vector<FnDecl> fns;
    std::vector<AssocTypeBinding> assoc_types;
    bool is_unsafe = false;
    std::vector<Attribute> attrs;
    Span span;
};

struct UseDecl {
    TypePath path;
    std::string rename; // `as` alias, empty if none
    bool is_glob = false; // use path::*;
    Visibility vis = Visibility::Private;
    Span span;
};

struct Module {
    std::string name;
    std::vector<ItemPtr> items;
    Visibility vis = Visibility::Private;
    std::vector<Attribute> attrs;
    std::string docs;
    Span span;
};

struct StaticDef {
    std::string name;
    TypePtr ty;
    ExprPtr init;
    bool is_const = false;
    Visibility vis = Visibility::Private;
    Span span;
};

struct MacroDef { // macro_rules! — body kept verbatim, only known runtime macros are interpreted
    std::string name;
    Span span;
};

struct Item {
    std::variant<FnDecl, StructDef, EnumDef, TraitDef, ImplBlock, UseDecl, Module, StaticDef, MacroDef> kind;
};

struct Crate {
    std::vector<Attribute> inner_attrs; // #![...]
    std::vector<ItemPtr> items;
    std::string docs; // //! at crate root
};

} // namespace reachfuzz::ast
