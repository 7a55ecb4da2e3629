#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "support/diagnostics.hpp"
#include "support/span.hpp"

namespace reachfuzz::frontend {

enum class Tok : uint8_t {
    Ident,
    Lifetime,   // 'a (not a char literal)
    Int,        // 123, 0xff, with optional type suffix
    Float,      // 1.5, 2e3
    Str,        // "..."
    Char,       // 'x'
    DocOuter,   // /// text  or  #[doc = ...] is not modeled
    DocInner,   // //! text
    // punctuation
    LParen, RParen, LBrace, RBrace, LBracket, RBracket,
    Comma, Semi, Colon, PathSep,          // , ; : ::
    RArrow, FatArrow,                     // -> =>
    Dot, DotDot, DotDotEq,                // . .. ..=
    At, Pound, Question,                  // @ # ?
    Eq, EqEq, Ne, Lt, Gt, Le, Ge,
    Plus, Minus, Star, Slash, Percent,
    PlusEq, MinusEq, StarEq, SlashEq, PercentEq,
    AndAnd, OrOr, Not,                    // && || !
    Amp, Pipe, Caret, Shl, Shr,           // & | ^ << >>
    AmpEq, PipeEq, CaretEq, ShlEq, ShrEq,
    Underscore,
    Eof,
};

struct Token {
    Tok kind = Tok::Eof;
    std::string text;       // identifier name, literal spelling (unescaped for Str/Char)
    std::string suffix;     // numeric type suffix if any (u8, usize, f64, ...)
    uint64_t int_value = 0; // for Tok::Int
    double float_value = 0; // for Tok::Float
    Span span;

    bool is_ident(std::string_view s) const { return kind == Tok::Ident && text == s; }
};

// Tokenizes one file of the supported source subset. Comments are dropped
// except doc comments, which are kept so item docs survive into the model.
std::vector<Token> lex_file(uint32_t file_id, std::string_view text, DiagnosticSink& diags);

} // namespace reachfuzz::frontend
