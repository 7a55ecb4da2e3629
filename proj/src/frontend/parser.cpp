#include "frontend/parser.hpp"

#include <cassert>

namespace reachfuzz::frontend {

using namespace ast;

namespace {

const char* const kKeywords[] = {"fn",    "struct", "enum",  "trait", "impl",   "use",    "mod",
                                 "pub",   "unsafe", "let",   "mut",   "if",     "else",   "match",
                                 "while", "loop",   "for",   "in",    "return", "break",  "continue",
                                 "where", "dyn",    "move",  "as",    "ref",    "static", "const",
                                 "self",  "Self",   "true",  "false", "type"};

bool is_keyword(const std::string& s) {
    for (const char* k : kKeywords)
        if (s == k) return true;
    return false;
}

class Parser {
public:
    Parser(std::vector<Token> toks, DiagnosticSink& diags, const ParseOptions& opts)
        : toks_(std::move(toks)), diags_(diags), opts_(opts) {}

    std::unique_ptr<Crate> parse() {
        auto crate = std::make_unique<Crate>();
        // crate-level inner attributes and docs
        while (true) {
            if (at(Tok::DocInner)) {
                crate->docs += cur().text + "\n";
                bump();
            } else if (at(Tok::Pound) && peek(1).kind == Tok::Not) {
                crate->inner_attrs.push_back(parse_inner_attr());
            } else {
                break;
            }
        }
        while (!at(Tok::Eof) && !diags_.has_errors()) {
            auto item = parse_item();
            if (item) crate->items.push_back(std::move(item));
        }
        return crate;
    }

private:
    std::vector<Token> toks_;
    size_t pos_ = 0;
    DiagnosticSink& diags_;
    const ParseOptions& opts_;
    bool no_struct_lit_ = false;

    const Token& cur() const { return toks_[pos_]; }
    const Token& peek(size_t n = 1) const {
        size_t i = pos_ + n;
        return i < toks_.size() ? toks_[i] : toks_.back();
    }
    bool at(Tok k) const { return cur().kind == k; }
    bool at_ident(std::string_view s) const { return cur().is_ident(s); }
    Token bump() { return toks_[pos_ < toks_.size() - 1 ? pos_++ : pos_]; }
    bool eat(Tok k) {
        if (at(k)) {
            bump();
            return true;
        }
        return false;
    }
    bool eat_ident(std::string_view s) {
        if (at_ident(s)) {
            bump();
            return true;
        }
        return false;
    }
    void expect(Tok k, const char* what) {
        if (!eat(k)) err(std::string("expected ") + what);
    }
    std::string expect_name(const char* what) {
        if (at(Tok::Ident) && !is_keyword(cur().text)) return bump().text;
        // contextual: allow keyword-ish names where unambiguous (e.g. field `type`? no)
        if (at(Tok::Ident) && (cur().text == "self" || cur().text == "Self")) return bump().text;
        err(std::string("expected ") + what);
        return "<error>";
    }
    void err(std::string msg) {
        if (!diags_.has_errors())
            diags_.error(msg + ", found '" + (cur().kind == Tok::Ident ? cur().text : token_name(cur().kind)) + "'",
                         cur().span);
        // park at EOF so callers unwind quickly
        pos_ = toks_.size() - 1;
    }

    static const char* token_name(Tok k) {
        switch (k) {
            case Tok::Eof: return "<eof>";
            case Tok::LBrace: return "{";
            case Tok::RBrace: return "}";
            case Tok::LParen: return "(";
            case Tok::RParen: return ")";
            case Tok::Semi: return ";";
            case Tok::Comma: return ",";
            case Tok::Lt: return "<";
            case Tok::Gt: return ">";
            default: return "<token>";
        }
    }

    // ----------------------------------------------------------- attrs

    Attribute parse_attr_body() {
        expect(Tok::LBracket, "'['");
        Attribute a;
        a.name = expect_name("attribute name");
        if (at(Tok::LParen)) {
            int depth = 0;
            uint32_t lo = cur().span.lo;
            uint32_t hi = lo;
            do {
                if (at(Tok::LParen)) depth++;
                if (at(Tok::RParen)) depth--;
                hi = cur().span.hi;
                bump();
            } while (depth > 0 && !at(Tok::Eof));
            a.args = raw_text(lo + 1, hi - 1);
        } else if (eat(Tok::Eq)) {
            a.args = bump().text; // #[doc = "..."] style
        }
        expect(Tok::RBracket, "']'");
        return a;
    }

    std::string raw_text(uint32_t lo, uint32_t hi) {
        // reconstruct from token texts inside [lo, hi) — good enough for cfg args
        std::string out;
        for (const auto& t : toks_) {
            if (t.span.lo >= lo && t.span.hi <= hi) {
                if (!out.empty()) out += " ";
                if (t.kind == Tok::Str)
                    out += "\"" + t.text + "\"";
                else if (t.kind == Tok::Eq)
                    out += "=";
                else if (t.kind == Tok::Comma)
                    out += ",";
                else
                    out += t.text.empty() ? token_name(t.kind) : t.text;
            }
        }
        return out;
    }

    Attribute parse_inner_attr() {
        expect(Tok::Pound, "'#'");
        expect(Tok::Not, "'!'");
        return parse_attr_body();
    }

    std::vector<Attribute> parse_outer_attrs(std::string* docs) {
        std::vector<Attribute> attrs;
        while (true) {
            if (at(Tok::DocOuter)) {
                if (docs) {
                    *docs += cur().text;
                    *docs += "\n";
                }
                bump();
            } else if (at(Tok::Pound) && peek(1).kind == Tok::LBracket) {
                bump();
                attrs.push_back(parse_attr_body());
            } else {
                break;
            }
        }
        return attrs;
    }

    Visibility parse_visibility() {
        if (!at_ident("pub")) return Visibility::Private;
        bump();
        if (eat(Tok::LParen)) {
            // pub(crate), pub(super), pub(in path) — all modeled as Restricted
            int depth = 1;
            while (depth > 0 && !at(Tok::Eof)) {
                if (at(Tok::LParen)) depth++;
                if (at(Tok::RParen)) depth--;
                bump();
            }
            return Visibility::Restricted;
        }
        return Visibility::Public;
    }

    // ----------------------------------------------------------- types

    TypePath parse_type_path(bool in_type_position) {
        TypePath p;
        while (true) {
            PathSegment seg;
            if (at(Tok::Ident)) {
                seg.name = bump().text;
            } else {
                err("expected path segment");
                return p;
            }
            if (in_type_position && at(Tok::Lt)) {
                bump();
                while (!at(Tok::Gt) && !at(Tok::Eof)) {
                    if (at(Tok::Lifetime)) {
                        bump();
                    } else {
                        seg.type_args.push_back(parse_type());
                    }
                    if (!eat(Tok::Comma)) break;
                }
                expect_close_angle();
            }
            p.segments.push_back(std::move(seg));
            if (at(Tok::PathSep) && (peek(1).kind == Tok::Ident || peek(1).kind == Tok::Lt)) {
                bump();
                if (at(Tok::Lt)) { // turbofish not supported in the subset
                    err("turbofish path arguments are not supported");
                    return p;
                }
            } else {
                break;
            }
        }
        return p;
    }

    void expect_close_angle() {
        // split '>>' when closing nested generics
        if (at(Tok::Shr)) {
            toks_[pos_].kind = Tok::Gt;
            toks_[pos_].span.lo += 1;
            return;
        }
        expect(Tok::Gt, "'>'");
    }

    TraitRef parse_trait_ref() {
        TraitRef tr;
        uint32_t lo = cur().span.lo;
        tr.path = parse_type_path(false);
        if (at(Tok::Lt)) { // generic args on trait ref: Tr<A, B> or Tr<Assoc = Ty>
            bump();
            PathSegment& seg = tr.path.segments.back();
            while (!at(Tok::Gt) && !at(Tok::Eof)) {
                if (at(Tok::Lifetime)) {
                    bump();
                } else if (at(Tok::Ident) && peek(1).kind == Tok::Eq) {
                    std::string assoc = bump().text;
                    bump(); // =
                    tr.assoc_bindings.emplace_back(std::move(assoc), parse_type());
                } else {
                    seg.type_args.push_back(parse_type());
                }
                if (!eat(Tok::Comma)) break;
            }
            expect_close_angle();
        } else if (at(Tok::LParen)) {
            // Fn-family sugar: FnMut(&mut T) -> bool
            tr.has_fn_sugar = true;
            bump();
            while (!at(Tok::RParen) && !at(Tok::Eof)) {
                tr.fn_params.push_back(parse_type());
                if (!eat(Tok::Comma)) break;
            }
            expect(Tok::RParen, "')'");
            if (eat(Tok::RArrow)) tr.fn_ret = parse_type();
        }
        tr.span = Span{toks_[0].span.file, lo, toks_[pos_ ? pos_ - 1 : 0].span.hi};
        return tr;
    }

    std::vector<TraitRef> parse_bounds() {
        std::vector<TraitRef> bounds;
        do {
            if (at(Tok::Lifetime)) {
                bump();
                continue;
            }
            if (at(Tok::Question)) { // ?Sized
                bump();
                parse_trait_ref();
                continue;
            }
            bounds.push_back(parse_trait_ref());
        } while (eat(Tok::Plus));
        return bounds;
    }

    TypePtr parse_type() {
        auto ty = std::make_unique<Type>();
        uint32_t lo = cur().span.lo;
        if (at(Tok::Amp)) {
            bump();
            if (at(Tok::Lifetime)) bump();
            Type::Ref r;
            r.is_mut = eat_ident("mut");
            r.inner = parse_type();
            ty->kind = std::move(r);
        } else if (at(Tok::Star)) {
            bump();
            Type::RawPtr r;
            if (eat_ident("mut"))
                r.is_mut = true;
            else if (eat_ident("const"))
                r.is_mut = false;
            else
                err("expected 'mut' or 'const' after '*'");
            r.inner = parse_type();
            ty->kind = std::move(r);
        } else if (at(Tok::LBracket)) {
            bump();
            auto inner = parse_type();
            if (eat(Tok::Semi)) {
                Type::Array a;
                a.inner = std::move(inner);
                if (at(Tok::Int))
                    a.len = bump().int_value;
                else
                    err("expected array length literal");
                ty->kind = std::move(a);
            } else {
                ty->kind = Type::Slice{std::move(inner)};
            }
            expect(Tok::RBracket, "']'");
        } else if (at(Tok::LParen)) {
            bump();
            Type::Tuple t;
            while (!at(Tok::RParen) && !at(Tok::Eof)) {
                t.members.push_back(parse_type());
                if (!eat(Tok::Comma)) break;
            }
            expect(Tok::RParen, "')'");
            ty->kind = std::move(t);
        } else if (at_ident("dyn")) {
            bump();
            Type::TraitObject o;
            o.trait_ref = parse_trait_ref();
            ty->kind = std::move(o);
        } else if (at(Tok::Underscore)) {
            bump();
            ty->kind = Type::Infer{};
        } else if (at(Tok::Ident)) {
            Type::Path p;
            p.path = parse_type_path(true);
            ty->kind = std::move(p);
        } else {
            err("expected type");
            ty->kind = Type::Infer{};
        }
        ty->span = Span{toks_[0].span.file, lo, toks_[pos_ ? pos_ - 1 : 0].span.hi};
        return ty;
    }

    // -------------------------------------------------------- generics

    Generics parse_generics() {
        Generics g;
        if (!at(Tok::Lt)) return g;
        bump();
        while (!at(Tok::Gt) && !at(Tok::Eof)) {
            if (at(Tok::Lifetime)) {
                bump();
                if (eat(Tok::Colon)) { // lifetime bounds, ignored
                    while (at(Tok::Lifetime)) {
                        bump();
                        if (!eat(Tok::Plus)) break;
                    }
                }
            } else if (at(Tok::Ident) && cur().text == "const") {
                err("const generics are not supported");
            } else {
                GenericParamAst p;
                p.name = expect_name("generic parameter");
                if (eat(Tok::Colon)) p.bounds = parse_bounds();
                g.params.push_back(std::move(p));
            }
            if (!eat(Tok::Comma)) break;
        }
        expect_close_angle();
        return g;
    }

    void parse_where_clause(Generics& g) {
        if (!eat_ident("where")) return;
        while (at(Tok::Ident) || at(Tok::Lifetime)) {
            if (at(Tok::Lifetime)) {
                bump();
                expect(Tok::Colon, "':'");
                while (at(Tok::Lifetime)) {
                    bump();
                    if (!eat(Tok::Plus)) break;
                }
            } else {
                std::string name = cur().text;
                bump();
                std::string assoc;
                if (eat(Tok::PathSep)) assoc = expect_name("associated type name");
                expect(Tok::Colon, "':'");
                auto bounds = parse_bounds();
                if (!assoc.empty()) {
                    // where T::Assoc: Bound — associated-type constraint
                    AssocWhere aw;
                    aw.param = name;
                    aw.assoc = assoc;
                    aw.bounds = std::move(bounds);
                    g.assoc_wheres.push_back(std::move(aw));
                } else {
                    bool found = false;
                    for (auto& p : g.params) {
                        if (p.name == name) {
                            for (auto& b : bounds) p.bounds.push_back(std::move(b));
                            found = true;
                            break;
                        }
                    }
                    if (!found) {
                        GenericParamAst p;
                        p.name = name;
                        p.bounds = std::move(bounds);
                        p.from_where_clause = true;
                        g.params.push_back(std::move(p));
                    }
                }
            }
            if (!eat(Tok::Comma)) break;
        }
    }

    // -------------------------------------------------------- patterns

    PatPtr parse_pat() {
        auto pat = std::make_unique<Pat>();
        uint32_t lo = cur().span.lo;
        if (at(Tok::Underscore)) {
            bump();
            pat->kind = Pat::Wild{};
        } else if (at(Tok::Amp)) {
            bump();
            Pat::Ref r;
            r.is_mut = eat_ident("mut");
            r.inner = parse_pat();
            pat->kind = std::move(r);
        } else if (at(Tok::LParen)) {
            bump();
            Pat::Tuple t;
            while (!at(Tok::RParen) && !at(Tok::Eof)) {
                t.elems.push_back(parse_pat());
                if (!eat(Tok::Comma)) break;
            }
            expect(Tok::RParen, "')'");
            pat->kind = std::move(t);
        } else if (at(Tok::Int) || at(Tok::Str) || at(Tok::Char) || at(Tok::Minus) ||
                   at_ident("true") || at_ident("false")) {
            Pat::Lit l;
            l.value = parse_primary();
            pat->kind = std::move(l);
        } else if (at(Tok::Ident)) {
            bool is_mut = false, by_ref = false;
            if (at_ident("ref")) {
                by_ref = true;
                bump();
            }
            if (at_ident("mut")) {
                is_mut = true;
                bump();
            }
            if (peek(1).kind == Tok::PathSep || peek(1).kind == Tok::LParen) {
                Pat::Variant v;
                v.path = parse_type_path(false);
                if (eat(Tok::LParen)) {
                    v.has_parens = true;
                    while (!at(Tok::RParen) && !at(Tok::Eof)) {
                        v.elems.push_back(parse_pat());
                        if (!eat(Tok::Comma)) break;
                    }
                    expect(Tok::RParen, "')'");
                }
                pat->kind = std::move(v);
            } else {
                std::string name = bump().text;
                if (name == "None" || name == "Some" || name == "Ok" || name == "Err") {
                    Pat::Variant v;
                    v.path.segments.push_back(PathSegment{name, {}});
                    pat->kind = std::move(v);
                } else {
                    pat->kind = Pat::Binding{name, is_mut, by_ref};
                }
            }
        } else {
            err("expected pattern");
            pat->kind = Pat::Wild{};
        }
        pat->span = Span{toks_[0].span.file, lo, toks_[pos_ ? pos_ - 1 : 0].span.hi};
        return pat;
    }

    // ----------------------------------------------------- expressions

    ExprPtr mk(Span sp, auto&& k) {
        auto e = std::make_unique<Expr>();
        e->kind = std::forward<decltype(k)>(k);
        e->span = sp;
        return e;
    }
    Span span_from(uint32_t lo) {
        return Span{toks_[0].span.file, lo, toks_[pos_ ? pos_ - 1 : 0].span.hi};
    }

    BlockPtr parse_block() {
        auto block = std::make_unique<Block>();
        uint32_t lo = cur().span.lo;
        expect(Tok::LBrace, "'{'");
        while (!at(Tok::RBrace) && !at(Tok::Eof)) {
            parse_stmt(*block);
        }
        expect(Tok::RBrace, "'}'");
        block->span = span_from(lo);
        return block;
    }

    void parse_stmt(Block& block) {
        uint32_t lo = cur().span.lo;
        parse_outer_attrs(nullptr); // statement attrs tolerated, dropped
        if (eat(Tok::Semi)) return;
        if (at_ident("let")) {
            bump();
            Stmt::Let let;
            let.pat = parse_pat();
            if (eat(Tok::Colon)) let.ty = parse_type();
            if (eat(Tok::Eq)) let.init = parse_expr();
            expect(Tok::Semi, "';' after let");
            Stmt s;
            s.kind = std::move(let);
            s.span = span_from(lo);
            block.stmts.push_back(std::move(s));
            return;
        }
        Stmt::ExprStmt es;
        es.expr = parse_expr();
        es.has_semi = eat(Tok::Semi);
        Stmt s;
        s.kind = std::move(es);
        s.span = span_from(lo);
        block.stmts.push_back(std::move(s));
    }

    ExprPtr parse_expr() { return parse_assign(); }

    ExprPtr parse_expr_no_struct() {
        bool saved = no_struct_lit_;
        no_struct_lit_ = true;
        auto e = parse_expr();
        no_struct_lit_ = saved;
        return e;
    }

    ExprPtr parse_assign() {
        uint32_t lo = cur().span.lo;
        auto lhs = parse_range();
        std::optional<BinOp> op;
        bool is_assign = false;
        switch (cur().kind) {
            case Tok::Eq: is_assign = true; break;
            case Tok::PlusEq: is_assign = true; op = BinOp::Add; break;
            case Tok::MinusEq: is_assign = true; op = BinOp::Sub; break;
            case Tok::StarEq: is_assign = true; op = BinOp::Mul; break;
            case Tok::SlashEq: is_assign = true; op = BinOp::Div; break;
            case Tok::PercentEq: is_assign = true; op = BinOp::Rem; break;
            case Tok::AmpEq: is_assign = true; op = BinOp::BitAnd; break;
            case Tok::PipeEq: is_assign = true; op = BinOp::BitOr; break;
            case Tok::CaretEq: is_assign = true; op = BinOp::BitXor; break;
            case Tok::ShlEq: is_assign = true; op = BinOp::Shl; break;
            case Tok::ShrEq: is_assign = true; op = BinOp::Shr; break;
            default: break;
        }
        if (!is_assign) return lhs;
        bump();
        auto rhs = parse_assign();
        return mk(span_from(lo), Expr::Assign{op, std::move(lhs), std::move(rhs)});
    }

    ExprPtr parse_range() {
        uint32_t lo = cur().span.lo;
        if (at(Tok::DotDot) || at(Tok::DotDotEq)) {
            bool incl = at(Tok::DotDotEq);
            bump();
            ExprPtr hi;
            if (!range_terminator()) hi = parse_or();
            return mk(span_from(lo), Expr::Range{nullptr, std::move(hi), incl});
        }
        auto start = parse_or();
        if (at(Tok::DotDot) || at(Tok::DotDotEq)) {
            bool incl = at(Tok::DotDotEq);
            bump();
            ExprPtr hi;
            if (!range_terminator()) hi = parse_or();
            return mk(span_from(lo), Expr::Range{std::move(start), std::move(hi), incl});
        }
        return start;
    }

    bool range_terminator() {
        return at(Tok::RBracket) || at(Tok::RParen) || at(Tok::RBrace) || at(Tok::Comma) ||
               at(Tok::Semi) || at(Tok::LBrace) || at(Tok::Eof);
    }

    ExprPtr parse_or() {
        uint32_t lo = cur().span.lo;
        auto lhs = parse_and();
        while (at(Tok::OrOr)) {
            bump();
            auto rhs = parse_and();
            lhs = mk(span_from(lo), Expr::Binary{BinOp::Or, std::move(lhs), std::move(rhs)});
        }
        return lhs;
    }

    ExprPtr parse_and() {
        uint32_t lo = cur().span.lo;
        auto lhs = parse_cmp();
        while (at(Tok::AndAnd)) {
            bump();
            auto rhs = parse_cmp();
            lhs = mk(span_from(lo), Expr::Binary{BinOp::And, std::move(lhs), std::move(rhs)});
        }
        return lhs;
    }

    ExprPtr parse_cmp() {
        uint32_t lo = cur().span.lo;
        auto lhs = parse_bitor();
        BinOp op;
        bool has = true;
        switch (cur().kind) {
            case Tok::EqEq: op = BinOp::Eq; break;
            case Tok::Ne: op = BinOp::Ne; break;
            case Tok::Lt: op = BinOp::Lt; break;
            case Tok::Gt: op = BinOp::Gt; break;
            case Tok::Le: op = BinOp::Le; break;
            case Tok::Ge: op = BinOp::Ge; break;
            default: has = false;
        }
        if (!has) return lhs;
        bump();
        auto rhs = parse_bitor();
        return mk(span_from(lo), Expr::Binary{op, std::move(lhs), std::move(rhs)});
    }

    ExprPtr parse_bitor() {
        uint32_t lo = cur().span.lo;
        auto lhs = parse_bitxor();
        while (at(Tok::Pipe) && peek(1).kind != Tok::Pipe) {
            bump();
            auto rhs = parse_bitxor();
            lhs = mk(span_from(lo), Expr::Binary{BinOp::BitOr, std::move(lhs), std::move(rhs)});
        }
        return lhs;
    }

    ExprPtr parse_bitxor() {
        uint32_t lo = cur().span.lo;
        auto lhs = parse_bitand();
        while (at(Tok::Caret)) {
            bump();
            auto rhs = parse_bitand();
            lhs = mk(span_from(lo), Expr::Binary{BinOp::BitXor, std::move(lhs), std::move(rhs)});
        }
        return lhs;
    }

    ExprPtr parse_bitand() {
        uint32_t lo = cur().span.lo;
        auto lhs = parse_shift();
        while (at(Tok::Amp) && peek(1).kind != Tok::Amp) {
            bump();
            auto rhs = parse_shift();
            lhs = mk(span_from(lo), Expr::Binary{BinOp::BitAnd, std::move(lhs), std::move(rhs)});
        }
        return lhs;
    }

    ExprPtr parse_shift() {
        uint32_t lo = cur().span.lo;
        auto lhs = parse_add();
        while (at(Tok::Shl) || at(Tok::Shr)) {
            BinOp op = at(Tok::Shl) ? BinOp::Shl : BinOp::Shr;
            bump();
            auto rhs = parse_add();
            lhs = mk(span_from(lo), Expr::Binary{op, std::move(lhs), std::move(rhs)});
        }
        return lhs;
    }

    ExprPtr parse_add() {
        uint32_t lo = cur().span.lo;
        auto lhs = parse_mul();
        while (at(Tok::Plus) || at(Tok::Minus)) {
            BinOp op = at(Tok::Plus) ? BinOp::Add : BinOp::Sub;
            bump();
            auto rhs = parse_mul();
            lhs = mk(span_from(lo), Expr::Binary{op, std::move(lhs), std::move(rhs)});
        }
        return lhs;
    }

    ExprPtr parse_mul() {
        uint32_t lo = cur().span.lo;
        auto lhs = parse_cast();
        while (at(Tok::Star) || at(Tok::Slash) || at(Tok::Percent)) {
            BinOp op = at(Tok::Star) ? BinOp::Mul : at(Tok::Slash) ? BinOp::Div : BinOp::Rem;
            bump();
            auto rhs = parse_cast();
            lhs = mk(span_from(lo), Expr::Binary{op, std::move(lhs), std::move(rhs)});
        }
        return lhs;
    }

    ExprPtr parse_cast() {
        uint32_t lo = cur().span.lo;
        auto e = parse_unary();
        while (at_ident("as")) {
            bump();
            auto ty = parse_type();
            e = mk(span_from(lo), Expr::Cast{std::move(e), std::move(ty)});
        }
        return e;
    }

    ExprPtr parse_unary() {
        uint32_t lo = cur().span.lo;
        if (at(Tok::Minus)) {
            bump();
            auto inner = parse_unary();
            return mk(span_from(lo), Expr::Unary{UnOp::Neg, std::move(inner)});
        }
        if (at(Tok::Not)) {
            bump();
            auto inner = parse_unary();
            return mk(span_from(lo), Expr::Unary{UnOp::Not, std::move(inner)});
        }
        if (at(Tok::Star)) {
            bump();
            auto inner = parse_unary();
            return mk(span_from(lo), Expr::Unary{UnOp::Deref, std::move(inner)});
        }
        if (at(Tok::Amp) || at(Tok::AndAnd)) {
            bool is_double = at(Tok::AndAnd);
            bump();
            if (is_double) {
                // && as double reference: treat as two nested refs
                bool is_mut = eat_ident("mut");
                auto inner = parse_unary();
                auto once = mk(span_from(lo), Expr::RefExpr{is_mut, std::move(inner)});
                return mk(span_from(lo), Expr::RefExpr{false, std::move(once)});
            }
            bool is_mut = eat_ident("mut");
            auto inner = parse_unary();
            return mk(span_from(lo), Expr::RefExpr{is_mut, std::move(inner)});
        }
        return parse_postfix();
    }

    ExprPtr parse_postfix() {
        uint32_t lo = cur().span.lo;
        auto e = parse_primary();
        while (true) {
            if (at(Tok::Dot)) {
                bump();
                if (at(Tok::Int)) {
                    // tuple field access: .0, .1
                    std::string idx = bump().text;
                    e = mk(span_from(lo), Expr::Field{std::move(e), idx});
                } else {
                    std::string name = expect_name("method or field name");
                    if (at(Tok::LParen)) {
                        Span msp = toks_[pos_ - 1].span;
                        bump();
                        std::vector<ExprPtr> args;
                        while (!at(Tok::RParen) && !at(Tok::Eof)) {
                            args.push_back(parse_expr());
                            if (!eat(Tok::Comma)) break;
                        }
                        expect(Tok::RParen, "')'");
                        e = mk(span_from(lo), Expr::MethodCall{std::move(e), name, std::move(args), msp});
                    } else {
                        e = mk(span_from(lo), Expr::Field{std::move(e), name});
                    }
                }
            } else if (at(Tok::LParen)) {
                bump();
                std::vector<ExprPtr> args;
                while (!at(Tok::RParen) && !at(Tok::Eof)) {
                    args.push_back(parse_expr());
                    if (!eat(Tok::Comma)) break;
                }
                expect(Tok::RParen, "')'");
                e = mk(span_from(lo), Expr::Call{std::move(e), std::move(args)});
            } else if (at(Tok::LBracket)) {
                bump();
                bool saved = no_struct_lit_;
                no_struct_lit_ = false;
                auto idx = parse_expr();
                no_struct_lit_ = saved;
                expect(Tok::RBracket, "']'");
                e = mk(span_from(lo), Expr::Index{std::move(e), std::move(idx)});
            } else if (at(Tok::Question)) {
                bump();
                e = mk(span_from(lo), Expr::Question{std::move(e)});
            } else {
                break;
            }
        }
        return e;
    }

    ExprPtr parse_primary() {
        uint32_t lo = cur().span.lo;
        switch (cur().kind) {
            case Tok::Int: {
                Token t = bump();
                return mk(t.span, Expr::LitInt{t.int_value, t.suffix});
            }
            case Tok::Float: {
                Token t = bump();
                return mk(t.span, Expr::LitFloat{t.float_value});
            }
            case Tok::Str: {
                Token t = bump();
                return mk(t.span, Expr::LitStr{t.text});
            }
            case Tok::Char: {
                Token t = bump();
                return mk(t.span, Expr::LitChar{t.text});
            }
            case Tok::LParen: {
                bump();
                if (eat(Tok::RParen)) return mk(span_from(lo), Expr::TupleExpr{});
                bool saved = no_struct_lit_;
                no_struct_lit_ = false;
                auto first = parse_expr();
                if (eat(Tok::Comma)) {
                    Expr::TupleExpr t;
                    t.elems.push_back(std::move(first));
                    while (!at(Tok::RParen) && !at(Tok::Eof)) {
                        t.elems.push_back(parse_expr());
                        if (!eat(Tok::Comma)) break;
                    }
                    no_struct_lit_ = saved;
                    expect(Tok::RParen, "')'");
                    return mk(span_from(lo), std::move(t));
                }
                no_struct_lit_ = saved;
                expect(Tok::RParen, "')'");
                return first; // parenthesized
            }
            case Tok::LBracket: {
                bump();
                bool saved = no_struct_lit_;
                no_struct_lit_ = false;
                if (eat(Tok::RBracket)) {
                    no_struct_lit_ = saved;
                    return mk(span_from(lo), Expr::ArrayExpr{});
                }
                auto first = parse_expr();
                if (eat(Tok::Semi)) {
                    auto count = parse_expr();
                    no_struct_lit_ = saved;
                    expect(Tok::RBracket, "']'");
                    return mk(span_from(lo), Expr::ArrayRepeat{std::move(first), std::move(count)});
                }
                Expr::ArrayExpr arr;
                arr.elems.push_back(std::move(first));
                while (eat(Tok::Comma) && !at(Tok::RBracket)) arr.elems.push_back(parse_expr());
                no_struct_lit_ = saved;
                expect(Tok::RBracket, "']'");
                return mk(span_from(lo), std::move(arr));
            }
            case Tok::LBrace: {
                auto b = parse_block();
                return mk(span_from(lo), Expr::BlockExpr{std::move(b), false});
            }
            case Tok::Pipe:
            case Tok::OrOr:
                return parse_closure(false);
            default: break;
        }

        if (at(Tok::Ident)) {
            const std::string& word = cur().text;
            if (word == "true" || word == "false") {
                bool v = word == "true";
                bump();
                return mk(span_from(lo), Expr::LitBool{v});
            }
            if (word == "if") return parse_if();
            if (word == "match") return parse_match();
            if (word == "while") return parse_while();
            if (word == "loop") {
                bump();
                auto b = parse_block();
                return mk(span_from(lo), Expr::Loop{std::move(b)});
            }
            if (word == "for") {
                bump();
                auto pat = parse_pat();
                if (!eat_ident("in")) err("expected 'in'");
                auto iter = parse_expr_no_struct();
                auto body = parse_block();
                return mk(span_from(lo), Expr::For{std::move(pat), std::move(iter), std::move(body)});
            }
            if (word == "return") {
                bump();
                ExprPtr v;
                if (!at(Tok::Semi) && !at(Tok::RBrace)) v = parse_expr();
                return mk(span_from(lo), Expr::Return{std::move(v)});
            }
            if (word == "break") {
                bump();
                return mk(span_from(lo), Expr::Break{});
            }
            if (word == "continue") {
                bump();
                return mk(span_from(lo), Expr::Continue{});
            }
            if (word == "unsafe") {
                bump();
                auto b = parse_block();
                return mk(span_from(lo), Expr::BlockExpr{std::move(b), true});
            }
            if (word == "move" && (peek(1).kind == Tok::Pipe || peek(1).kind == Tok::OrOr)) {
                bump();
                return parse_closure(true);
            }

            // macro call?
            if (peek(1).kind == Tok::Not &&
                (peek(2).kind == Tok::LParen || peek(2).kind == Tok::LBracket || peek(2).kind == Tok::LBrace)) {
                return parse_macro_call();
            }

            // plain path / struct literal
            TypePath path = parse_type_path(false);
            if (at(Tok::LBrace) && !no_struct_lit_) {
                bump();
                Expr::StructLit sl;
                sl.path = std::move(path);
                while (!at(Tok::RBrace) && !at(Tok::Eof)) {
                    std::string fname = expect_name("field name");
                    ExprPtr val;
                    if (eat(Tok::Colon)) {
                        val = parse_expr();
                    } else {
                        // field init shorthand: `Self { sid }`
                        Expr::Path p;
                        p.path.segments.push_back(PathSegment{fname, {}});
                        val = mk(span_from(lo), std::move(p));
                    }
                    sl.fields.emplace_back(fname, std::move(val));
                    if (!eat(Tok::Comma)) break;
                }
                expect(Tok::RBrace, "'}'");
                return mk(span_from(lo), std::move(sl));
            }
            return mk(span_from(lo), Expr::Path{std::move(path)});
        }

        err("expected expression");
        return mk(span_from(lo), Expr::TupleExpr{});
    }

    ExprPtr parse_closure(bool is_move) {
        uint32_t lo = cur().span.lo;
        Expr::Closure cl;
        cl.is_move = is_move;
        if (eat(Tok::OrOr)) {
            // zero-parameter closure
        } else {
            expect(Tok::Pipe, "'|'");
            while (!at(Tok::Pipe) && !at(Tok::Eof)) {
                ClosureParam p;
                if (at(Tok::Underscore)) {
                    bump();
                    p.name = "_";
                } else {
                    eat_ident("mut");
                    p.name = expect_name("closure parameter");
                }
                if (eat(Tok::Colon)) p.ty = parse_type();
                cl.params.push_back(std::move(p));
                if (!eat(Tok::Comma)) break;
            }
            expect(Tok::Pipe, "'|'");
        }
        if (eat(Tok::RArrow)) cl.ret = parse_type();
        cl.body = parse_expr();
        return mk(span_from(lo), std::move(cl));
    }

    ExprPtr parse_macro_call() {
        uint32_t lo = cur().span.lo;
        Expr::MacroCall mc;
        mc.name = bump().text;
        expect(Tok::Not, "'!'");
        Tok open = cur().kind;
        Tok close = open == Tok::LParen    ? Tok::RParen
                    : open == Tok::LBracket ? Tok::RBracket
                                            : Tok::RBrace;
        bump();
        bool saved = no_struct_lit_;
        no_struct_lit_ = false;
        if (!at(close)) {
            mc.args.push_back(parse_expr());
            if (mc.name == "vec" && eat(Tok::Semi)) {
                mc.vec_repeat = true;
                mc.args.push_back(parse_expr());
            } else {
                while (eat(Tok::Comma) && !at(close)) mc.args.push_back(parse_expr());
            }
        }
        no_struct_lit_ = saved;
        if (!eat(close)) err("expected macro delimiter");
        return mk(span_from(lo), std::move(mc));
    }

    ExprPtr parse_if() {
        uint32_t lo = cur().span.lo;
        bump(); // if
        if (at_ident("let")) {
            bump();
            auto pat = parse_pat();
            expect(Tok::Eq, "'='");
            auto scrut = parse_expr_no_struct();
            auto then_block = parse_block();
            ExprPtr else_expr = parse_else();
            return mk(span_from(lo),
                      Expr::IfLet{std::move(pat), std::move(scrut), std::move(then_block), std::move(else_expr)});
        }
        auto cond = parse_expr_no_struct();
        auto then_block = parse_block();
        ExprPtr else_expr = parse_else();
        return mk(span_from(lo), Expr::If{std::move(cond), std::move(then_block), std::move(else_expr)});
    }

    ExprPtr parse_else() {
        if (!at_ident("else")) return nullptr;
        bump();
        if (at_ident("if")) return parse_if();
        uint32_t lo = cur().span.lo;
        auto b = parse_block();
        return mk(span_from(lo), Expr::BlockExpr{std::move(b), false});
    }

    ExprPtr parse_match() {
        uint32_t lo = cur().span.lo;
        bump(); // match
        auto scrut = parse_expr_no_struct();
        expect(Tok::LBrace, "'{'");
        Expr::Match m;
        m.scrutinee = std::move(scrut);
        while (!at(Tok::RBrace) && !at(Tok::Eof)) {
            MatchArm arm;
            arm.pat = parse_pat();
            while (eat(Tok::Pipe)) {
                // or-patterns folded: only the first alternative is kept for
                // binding purposes; literal alternatives are preserved via guard
                diags_.warning("or-pattern folded to first alternative", cur().span);
                parse_pat();
            }
            if (at_ident("if")) {
                bump();
                arm.guard = parse_expr_no_struct();
            }
            expect(Tok::FatArrow, "'=>'");
            arm.body = parse_expr();
            eat(Tok::Comma);
            m.arms.push_back(std::move(arm));
        }
        expect(Tok::RBrace, "'}'");
        return mk(span_from(lo), std::move(m));
    }

    ExprPtr parse_while() {
        uint32_t lo = cur().span.lo;
        bump(); // while
        if (at_ident("let")) {
            bump();
            auto pat = parse_pat();
            expect(Tok::Eq, "'='");
            auto scrut = parse_expr_no_struct();
            auto body = parse_block();
            return mk(span_from(lo), Expr::WhileLet{std::move(pat), std::move(scrut), std::move(body)});
        }
        auto cond = parse_expr_no_struct();
        auto body = parse_block();
        return mk(span_from(lo), Expr::While{std::move(cond), std::move(body)});
    }

    // ----------------------------------------------------------- items

    ItemPtr parse_item() {
        std::string docs;
        auto attrs = parse_outer_attrs(&docs);
        Visibility vis = parse_visibility();
        bool is_unsafe = false;
        uint32_t lo = cur().span.lo;
        if (at_ident("unsafe")) {
            is_unsafe = true;
            bump();
        }

        auto item = std::make_unique<Item>();
        if (at_ident("fn")) {
            item->kind = parse_fn(vis, is_unsafe, std::move(attrs), std::move(docs));
        } else if (at_ident("struct")) {
            item->kind = parse_struct(vis, std::move(attrs), std::move(docs));
        } else if (at_ident("enum")) {
            item->kind = parse_enum(vis, std::move(attrs), std::move(docs));
        } else if (at_ident("trait")) {
            item->kind = parse_trait(vis, is_unsafe, std::move(attrs), std::move(docs));
        } else if (at_ident("impl")) {
            item->kind = parse_impl(is_unsafe, std::move(attrs));
        } else if (at_ident("use")) {
            bump();
            UseDecl u;
            u.vis = vis;
            u.path = parse_type_path(false);
            if (at(Tok::PathSep) && peek(1).kind == Tok::Star) {
                bump();
                bump();
                u.is_glob = true;
            } else if (eat_ident("as")) {
                u.rename = expect_name("alias");
            }
            expect(Tok::Semi, "';'");
            u.span = span_from(lo);
            item->kind = std::move(u);
        } else if (at_ident("mod")) {
            bump();
            Module m;
            m.vis = vis;
            m.attrs = std::move(attrs);
            m.docs = std::move(docs);
            m.name = expect_name("module name");
            if (eat(Tok::Semi)) {
                bool opaque = false;
                for (const auto& n : opts_.opaque_modules)
                    if (n == m.name) opaque = true;
                if (!opaque) {
                    if (!opts_.load_module) {
                        diags_.error("file module '" + m.name + "' cannot be loaded here", span_from(lo));
                    } else if (auto loaded = opts_.load_module(m.name)) {
                        auto sub_tokens = lex_file(loaded->first, loaded->second, diags_);
                        Parser sub(std::move(sub_tokens), diags_, opts_);
                        auto sub_crate = sub.parse();
                        m.items = std::move(sub_crate->items);
                    } else {
                        diags_.error("module file not found for '" + m.name + "'", span_from(lo));
                    }
                }
            } else {
                expect(Tok::LBrace, "'{'");
                while (!at(Tok::RBrace) && !at(Tok::Eof)) {
                    auto sub = parse_item();
                    if (sub) m.items.push_back(std::move(sub));
                }
                expect(Tok::RBrace, "'}'");
            }
            m.span = span_from(lo);
            item->kind = std::move(m);
        } else if (at_ident("static") || at_ident("const")) {
            bool is_const = at_ident("const");
            bump();
            eat_ident("mut");
            StaticDef s;
            s.is_const = is_const;
            s.vis = vis;
            s.name = expect_name("name");
            expect(Tok::Colon, "':'");
            s.ty = parse_type();
            if (eat(Tok::Eq)) s.init = parse_expr();
            expect(Tok::Semi, "';'");
            s.span = span_from(lo);
            item->kind = std::move(s);
        } else if (at_ident("macro_rules")) {
            bump();
            expect(Tok::Not, "'!'");
            MacroDef md;
            md.name = expect_name("macro name");
            expect(Tok::LBrace, "'{'");
            int depth = 1;
            while (depth > 0 && !at(Tok::Eof)) {
                if (at(Tok::LBrace)) depth++;
                if (at(Tok::RBrace)) depth--;
                bump();
            }
            md.span = span_from(lo);
            item->kind = std::move(md);
        } else {
            err("expected item");
            return nullptr;
        }
        return item;
    }

    FnDecl parse_fn(Visibility vis, bool is_unsafe, std::vector<Attribute> attrs, std::string docs) {
        uint32_t lo = cur().span.lo;
        bump(); // fn
        FnDecl fn;
        fn.vis = vis;
        fn.is_unsafe = is_unsafe;
        fn.attrs = std::move(attrs);
        fn.docs = std::move(docs);
        fn.name = expect_name("function name");
        fn.generics = parse_generics();
        expect(Tok::LParen, "'('");
        bool first = true;
        while (!at(Tok::RParen) && !at(Tok::Eof)) {
            uint32_t plo = cur().span.lo;
            if (first && (at_ident("self") || at(Tok::Amp) || at_ident("mut"))) {
                // self receiver: self | mut self | &self | &mut self | &'a self
                size_t save = pos_;
                bool ok = false;
                SelfKind kind = SelfKind::None;
                if (eat(Tok::Amp)) {
                    if (at(Tok::Lifetime)) bump();
                    bool m = eat_ident("mut");
                    if (eat_ident("self")) {
                        kind = m ? SelfKind::UniqueRef : SelfKind::SharedRef;
                        ok = true;
                    }
                } else {
                    eat_ident("mut");
                    if (eat_ident("self")) {
                        kind = SelfKind::Value;
                        ok = true;
                    }
                }
                if (ok) {
                    fn.self_kind = kind;
                    first = false;
                    if (!eat(Tok::Comma)) break;
                    continue;
                }
                pos_ = save;
            }
            first = false;
            FnParam p;
            if (at(Tok::Underscore)) {
                bump();
                p.name = "_";
            } else {
                eat_ident("mut");
                p.name = expect_name("parameter name");
            }
            expect(Tok::Colon, "':'");
            p.ty = parse_type();
            p.span = span_from(plo);
            fn.params.push_back(std::move(p));
            if (!eat(Tok::Comma)) break;
        }
        expect(Tok::RParen, "')'");
        if (eat(Tok::RArrow)) fn.ret = parse_type();
        parse_where_clause(fn.generics);
        if (at(Tok::LBrace))
            fn.body = parse_block();
        else
            expect(Tok::Semi, "';' or function body");
        fn.span = span_from(lo);
        return fn;
    }

    StructDef parse_struct(Visibility vis, std::vector<Attribute> attrs, std::string docs) {
        uint32_t lo = cur().span.lo;
        bump(); // struct
        StructDef sd;
        sd.vis = vis;
        sd.attrs = std::move(attrs);
        sd.docs = std::move(docs);
        sd.name = expect_name("struct name");
        sd.generics = parse_generics();
        parse_where_clause(sd.generics);
        if (eat(Tok::Semi)) {
            sd.is_unit = true;
        } else if (at(Tok::LParen)) {
            bump();
            sd.is_tuple = true;
            while (!at(Tok::RParen) && !at(Tok::Eof)) {
                FieldDef f;
                f.vis = parse_visibility();
                f.ty = parse_type();
                sd.fields.push_back(std::move(f));
                if (!eat(Tok::Comma)) break;
            }
            expect(Tok::RParen, "')'");
            expect(Tok::Semi, "';'");
        } else {
            expect(Tok::LBrace, "'{'");
            while (!at(Tok::RBrace) && !at(Tok::Eof)) {
                parse_outer_attrs(nullptr);
                FieldDef f;
                f.vis = parse_visibility();
                f.name = expect_name("field name");
                expect(Tok::Colon, "':'");
                f.ty = parse_type();
                sd.fields.push_back(std::move(f));
                if (!eat(Tok::Comma)) break;
            }
            expect(Tok::RBrace, "'}'");
        }
        sd.span = span_from(lo);
        return sd;
    }

    EnumDef parse_enum(Visibility vis, std::vector<Attribute> attrs, std::string docs) {
        uint32_t lo = cur().span.lo;
        bump(); // enum
        EnumDef ed;
        ed.vis = vis;
        ed.attrs = std::move(attrs);
        ed.docs = std::move(docs);
        ed.name = expect_name("enum name");
        ed.generics = parse_generics();
        parse_where_clause(ed.generics);
        expect(Tok::LBrace, "'{'");
        while (!at(Tok::RBrace) && !at(Tok::Eof)) {
            parse_outer_attrs(nullptr);
            EnumVariant v;
            v.name = expect_name("variant name");
            if (eat(Tok::LParen)) {
                while (!at(Tok::RParen) && !at(Tok::Eof)) {
                    v.fields.push_back(parse_type());
                    if (!eat(Tok::Comma)) break;
                }
                expect(Tok::RParen, "')'");
            }
            ed.variants.push_back(std::move(v));
            if (!eat(Tok::Comma)) break;
        }
        expect(Tok::RBrace, "'}'");
        ed.span = span_from(lo);
        return ed;
    }

    TraitDef parse_trait(Visibility vis, bool is_unsafe, std::vector<Attribute> attrs, std::string docs) {
        uint32_t lo = cur().span.lo;
        bump(); // trait
        TraitDef td;
        td.vis = vis;
        td.is_unsafe = is_unsafe;
        td.attrs = std::move(attrs);
        td.docs = std::move(docs);
        td.name = expect_name("trait name");
        td.generics = parse_generics();
        if (eat(Tok::Colon)) td.supertraits = parse_bounds();
        parse_where_clause(td.generics);
        expect(Tok::LBrace, "'{'");
        while (!at(Tok::RBrace) && !at(Tok::Eof)) {
            std::string fdocs;
            auto fattrs = parse_outer_attrs(&fdocs);
            bool fn_unsafe = false;
            if (at_ident("unsafe")) {
                fn_unsafe = true;
                bump();
            }
            if (at_ident("type")) {
                bump();
                AssocTypeDecl at_decl;
                at_decl.name = expect_name("associated type name");
                if (eat(Tok::Colon)) at_decl.bounds = parse_bounds();
                expect(Tok::Semi, "';'");
                td.assoc_types.push_back(std::move(at_decl));
                continue;
            }
            if (!at_ident("fn")) {
                err("expected trait item");
                break;
            }
            td.fns.push_back(parse_fn(Visibility::Public, fn_unsafe, std::move(fattrs), std::move(fdocs)));
        }
        expect(Tok::RBrace, "'}'");
        td.span = span_from(lo);
        return td;
    }

    ImplBlock parse_impl(bool is_unsafe, std::vector<Attribute> attrs) {
        uint32_t lo = cur().span.lo;
        bump(); // impl
        ImplBlock ib;
        ib.is_unsafe = is_unsafe;
        ib.attrs = std::move(attrs);
        ib.generics = parse_generics();
        auto first_ty = parse_type();
        if (eat_ident("for")) {
            // `impl Trait for Type`
            TraitRef tr;
            if (auto* p = std::get_if<Type::Path>(&first_ty->kind)) {
                tr.path = std::move(p->path);
            } else {
                err("expected trait path before 'for'");
            }
            tr.span = first_ty->span;
            ib.trait_ref = std::move(tr);
            ib.self_ty = parse_type();
        } else {
            ib.self_ty = std::move(first_ty);
        }
        parse_where_clause(ib.generics);
        expect(Tok::LBrace, "'{'");
        while (!at(Tok::RBrace) && !at(Tok::Eof)) {
            std::string fdocs;
            auto fattrs = parse_outer_attrs(&fdocs);
            Visibility fvis = parse_visibility();
            bool fn_unsafe = false;
            if (at_ident("unsafe")) {
                fn_unsafe = true;
                bump();
            }
            if (at_ident("type")) {
                bump();
                AssocTypeBinding b;
                b.name = expect_name("associated type name");
                expect(Tok::Eq, "'='");
                b.ty = parse_type();
                expect(Tok::Semi, "';'");
                ib.assoc_types.push_back(std::move(b));
                continue;
            }
            if (!at_ident("fn")) {
                err("expected impl item");
                break;
            }
            ib.fns.push_back(parse_fn(fvis, fn_unsafe, std::move(fattrs), std::move(fdocs)));
        }
        expect(Tok::RBrace, "'}'");
        ib.span = span_from(lo);
        return ib;
    }
};

} // namespace

std::unique_ptr<ast::Crate> parse_crate(uint32_t file_id, std::string_view text,
                                        DiagnosticSink& diags, const ParseOptions& opts) {
    auto tokens = lex_file(file_id, text, diags);
    if (diags.has_errors()) return std::make_unique<ast::Crate>();
    Parser p(std::move(tokens), diags, opts);
    return p.parse();
}

} // namespace reachfuzz::frontend
