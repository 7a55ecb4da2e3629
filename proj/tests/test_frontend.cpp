#include <doctest.h>

#include "frontend/lexer.hpp"
#include "frontend/parser.hpp"
#include "support/diagnostics.hpp"
#include "support/span.hpp"

using namespace reachfuzz;
using namespace reachfuzz::frontend;

namespace {

std::unique_ptr<ast::Crate> parse_ok(std::string_view src) {
    DiagnosticSink diags;
    auto crate = parse_crate(0, src, diags);
    INFO(diags.to_string());
    REQUIRE_FALSE(diags.has_errors());
    return crate;
}

} // namespace

TEST_CASE("lexer basic token stream") {
    DiagnosticSink diags;
    auto toks = lex_file(0, "pub fn foo(x: u8) -> u64 { x as u64 + 0xff }", diags);
    CHECK_FALSE(diags.has_errors());
    CHECK(toks[0].is_ident("pub"));
    CHECK(toks[1].is_ident("fn"));
    CHECK(toks[2].is_ident("foo"));
    CHECK(toks[3].kind == Tok::LParen);
    // 0xff
    bool saw_hex = false;
    for (const auto& t : toks)
        if (t.kind == Tok::Int && t.int_value == 255) saw_hex = true;
    CHECK(saw_hex);
    CHECK(toks.back().kind == Tok::Eof);
}

TEST_CASE("lexer distinguishes lifetimes from char literals") {
    DiagnosticSink diags;
    auto toks = lex_file(0, "&'a mut T 'x' '\\n'", diags);
    CHECK_FALSE(diags.has_errors());
    CHECK(toks[1].kind == Tok::Lifetime);
    CHECK(toks[1].text == "a");
    CHECK(toks[4].kind == Tok::Char);
    CHECK(toks[4].text == "x");
    CHECK(toks[5].kind == Tok::Char);
    CHECK(toks[5].text == "\n");
}

TEST_CASE("lexer doc comments and suffixed ints") {
    DiagnosticSink diags;
    auto toks = lex_file(0, "/// a doc line\nlet x = 7usize;", diags);
    CHECK(toks[0].kind == Tok::DocOuter);
    CHECK(toks[0].text == "a doc line");
    bool found = false;
    for (const auto& t : toks)
        if (t.kind == Tok::Int && t.suffix == "usize" && t.int_value == 7) found = true;
    CHECK(found);
}

TEST_CASE("parse struct, trait, impl") {
    auto crate = parse_ok(R"(
pub struct Shape { sid: u64 }
impl Shape {
    pub fn new(sid: u64) -> Self { Self { sid } }
    pub fn zero() -> Self { Self { sid: 0 } }
    pub fn foo<S: STrait, U: UTrait>(&self, i1: S, i2: U) {
        unsafe { let _p = self.sid; }
    }
}
pub trait STrait { fn desc(&self) -> String; }
pub unsafe trait UTrait { unsafe fn u_desc(&self) -> String; }
impl STrait for Shape { fn desc(&self) -> String { String::new() } }
unsafe impl UTrait for Shape { unsafe fn u_desc(&self) -> String { String::new() } }
)");
    REQUIRE(crate->items.size() == 6);
    auto& sd = std::get<ast::StructDef>(crate->items[0]->kind);
    CHECK(sd.name == "Shape");
    CHECK(sd.vis == ast::Visibility::Public);
    auto& ib = std::get<ast::ImplBlock>(crate->items[1]->kind);
    REQUIRE(ib.fns.size() == 3);
    CHECK(ib.fns[2].name == "foo");
    CHECK(ib.fns[2].self_kind == ast::SelfKind::SharedRef);
    REQUIRE(ib.fns[2].generics.params.size() == 2);
    CHECK(ib.fns[2].generics.params[0].bounds[0].name() == "STrait");
    auto& td = std::get<ast::TraitDef>(crate->items[2]->kind);
    CHECK_FALSE(td.is_unsafe);
    auto& utd = std::get<ast::TraitDef>(crate->items[3]->kind);
    CHECK(utd.is_unsafe);
    CHECK(std::get<ast::ImplBlock>(crate->items[4]->kind).trait_ref.has_value());
    CHECK(std::get<ast::ImplBlock>(crate->items[5]->kind).is_unsafe);
}

TEST_CASE("parse expressions and control flow") {
    auto crate = parse_ok(R"(
fn work(v: &mut Vec<u8>, n: usize) -> usize {
    let mut total = 0usize;
    for i in 0..n {
        if v[i] > 10 {
            total += v[i] as usize;
        } else {
            total = total * 2 + 1;
        }
    }
    while total > 100 { total -= 7; }
    let pair = (total, n);
    match pair.0 {
        0 => 1,
        1 => 2,
        _ => total,
    }
}
)");
    auto& fn = std::get<ast::FnDecl>(crate->items[0]->kind);
    CHECK(fn.name == "work");
    REQUIRE(fn.body);
    CHECK(fn.body->stmts.size() >= 4);
}

TEST_CASE("parse closures, macros, method chains, question mark") {
    auto crate = parse_ok(R"(
fn demo(r: &mut R) -> Result<usize, String> {
    let mut back = vec![0; 32];
    let size = r.read(back.as_mut_slice())?;
    let f = |x: &mut u8| -> bool { *x > 3 };
    let g = move || 42;
    let s = String::from("hi");
    if size > back.len() { panic!("too big"); }
    Ok(size)
}
)");
    auto& fn = std::get<ast::FnDecl>(crate->items[0]->kind);
    REQUIRE(fn.body);
    auto& let0 = std::get<ast::Stmt::Let>(fn.body->stmts[0].kind);
    auto& mc = std::get<ast::Expr::MacroCall>(let0.init->kind);
    CHECK(mc.name == "vec");
    CHECK(mc.vec_repeat);
}

TEST_CASE("parse modules, use declarations, visibility") {
    auto crate = parse_ok(R"(
mod inner {
    pub fn hidden() {}
    pub mod deeper { pub fn deep() {} }
}
pub use inner::hidden;
pub(crate) fn semi_public() {}
)");
    auto& m = std::get<ast::Module>(crate->items[0]->kind);
    CHECK(m.name == "inner");
    CHECK(m.items.size() == 2);
    auto& u = std::get<ast::UseDecl>(crate->items[1]->kind);
    CHECK(u.vis == ast::Visibility::Public);
    CHECK(u.path.segments.size() == 2);
    auto& f = std::get<ast::FnDecl>(crate->items[2]->kind);
    CHECK(f.vis == ast::Visibility::Restricted);
}

TEST_CASE("parse unsafe blocks, raw pointers, casts") {
    auto crate = parse_ok(R"(
pub fn shift(v: &mut Vec<String>, index: usize, len: usize) {
    unsafe {
        let p = v.as_mut_ptr();
        std::ptr::copy(p.add(index + 1), p.add(index), len - index);
        v.set_len(len - 1);
    }
}
)");
    auto& fn = std::get<ast::FnDecl>(crate->items[0]->kind);
    auto& est = std::get<ast::Stmt::ExprStmt>(fn.body->stmts[0].kind);
    auto& blk = std::get<ast::Expr::BlockExpr>(est.expr->kind);
    CHECK(blk.is_unsafe);
}

TEST_CASE("parse cfg attributes and generic where clauses") {
    auto crate = parse_ok(R"(
#[cfg(feature = "extra")]
pub fn gated() {}
pub fn bounded<T>(x: T) -> T where T: Clone + Send { x }
)");
    auto& gated = std::get<ast::FnDecl>(crate->items[0]->kind);
    REQUIRE(gated.attrs.size() == 1);
    CHECK(gated.attrs[0].name == "cfg");
    CHECK(gated.attrs[0].args.find("extra") != std::string::npos);
    auto& bounded = std::get<ast::FnDecl>(crate->items[1]->kind);
    REQUIRE(bounded.generics.params.size() == 1);
    CHECK(bounded.generics.params[0].bounds.size() == 2);
}

TEST_CASE("parse Fn-sugar bounds and dyn trait objects") {
    auto crate = parse_ok(R"(
pub fn apply<F: FnMut(&mut u8) -> bool>(f: F) {}
pub fn dispatch(t: &dyn Walk) {}
)");
    auto& apply = std::get<ast::FnDecl>(crate->items[0]->kind);
    const auto& b = apply.generics.params[0].bounds[0];
    CHECK(b.has_fn_sugar);
    REQUIRE(b.fn_params.size() == 1);
    REQUIRE(b.fn_ret);
    auto& dispatch = std::get<ast::FnDecl>(crate->items[1]->kind);
    auto& ref_ty = std::get<ast::Type::Ref>(dispatch.params[0].ty->kind);
    CHECK(std::holds_alternative<ast::Type::TraitObject>(ref_ty.inner->kind));
}

TEST_CASE("parse nested generic close and struct literal restriction") {
    auto crate = parse_ok(R"(
pub fn make() -> Vec<Vec<u8>> { Vec::new() }
pub fn cond(n: usize) -> S {
    let s = S { x: n };
    while n > 0 { return s; }
    s
}
)");
    // `while n > 0 {` must treat `{` as the loop body, not a struct literal on `n`
    auto& cond = std::get<ast::FnDecl>(crate->items[1]->kind);
    REQUIRE(cond.body);
    CHECK(cond.body->stmts.size() == 3);
}

TEST_CASE("parser reports errors with location") {
    DiagnosticSink diags;
    auto crate = parse_crate(0, "pub fn broken( { }", diags);
    CHECK(diags.has_errors());
}

TEST_CASE("macro_rules bodies are skipped opaquely") {
    auto crate = parse_ok(R"(
macro_rules! fuzz_nohook {
    ($body:expr) => { $body };
}
pub fn after() {}
)");
    CHECK(crate->items.size() == 2);
    CHECK(std::holds_alternative<ast::MacroDef>(crate->items[0]->kind));
}
