#include "frontend/lexer.hpp"

#include <cctype>
#include <cstdlib>

namespace reachfuzz::frontend {

namespace {

bool is_ident_start(char c) { return std::isalpha(static_cast<unsigned char>(c)) || c == '_'; }
bool is_ident_cont(char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_'; }

struct Cursor {
    std::string_view text;
    uint32_t pos = 0;
    uint32_t file;
    DiagnosticSink& diags;

    char peek(uint32_t ahead = 0) const {
        return pos + ahead < text.size() ? text[pos + ahead] : '\0';
    }
    char bump() { return pos < text.size() ? text[pos++] : '\0'; }
    bool eat(char c) {
        if (peek() == c) {
            ++pos;
            return true;
        }
        return false;
    }
    Span span_from(uint32_t lo) const { return Span{file, lo, pos}; }
};

// Unescape the body of a string/char literal; keeps unknown escapes verbatim.
std::string unescape(Cursor& c, char terminator) {
    std::string out;
    while (c.peek() != terminator && c.peek() != '\0') {
        char ch = c.bump();
        if (ch != '\\') {
            out.push_back(ch);
            continue;
        }
        char esc = c.bump();
        switch (esc) {
            case 'n': out.push_back('\n'); break;
            case 't': out.push_back('\t'); break;
            case 'r': out.push_back('\r'); break;
            case '0': out.push_back('\0'); break;
            case '\\': out.push_back('\\'); break;
            case '\'': out.push_back('\''); break;
            case '"': out.push_back('"'); break;
            default:
                out.push_back('\\');
                out.push_back(esc);
        }
    }
    return out;
}

const char* const kNumSuffixes[] = {"usize", "isize", "u128", "i128", "u64", "i64", "u32", "i32",
                                    "u16",   "i16",   "u8",   "i8",  "f64", "f32"};

} // namespace

std::vector<Token> lex_file(uint32_t file_id, std::string_view text, DiagnosticSink& diags) {
    std::vector<Token> out;
    Cursor c{text, 0, file_id, diags};

    auto push = [&](Tok kind, uint32_t lo, std::string tok_text = {}) {
        Token t;
        t.kind = kind;
        t.text = std::move(tok_text);
        t.span = c.span_from(lo);
        out.push_back(std::move(t));
    };

    while (c.pos < text.size()) {
        uint32_t lo = c.pos;
        char ch = c.peek();

        if (std::isspace(static_cast<unsigned char>(ch))) {
            c.bump();
            continue;
        }

        // comments, incl. doc comments
        if (ch == '/' && c.peek(1) == '/') {
            bool doc_outer = c.peek(2) == '/' && c.peek(3) != '/';
            bool doc_inner = c.peek(2) == '!';
            c.pos += doc_outer || doc_inner ? 3 : 2;
            uint32_t body_lo = c.pos;
            while (c.peek() != '\n' && c.peek() != '\0') c.bump();
            if (doc_outer || doc_inner) {
                std::string body(text.substr(body_lo, c.pos - body_lo));
                if (!body.empty() && body.front() == ' ') body.erase(body.begin());
                push(doc_outer ? Tok::DocOuter : Tok::DocInner, lo, std::move(body));
            }
            continue;
        }
        if (ch == '/' && c.peek(1) == '*') {
            c.pos += 2;
            int depth = 1;
            while (depth > 0 && c.pos < text.size()) {
                if (c.peek() == '/' && c.peek(1) == '*') {
                    depth++;
                    c.pos += 2;
                } else if (c.peek() == '*' && c.peek(1) == '/') {
                    depth--;
                    c.pos += 2;
                } else {
                    c.bump();
                }
            }
            if (depth > 0) diags.error("unterminated block comment", c.span_from(lo));
            continue;
        }

        if (is_ident_start(ch)) {
            while (is_ident_cont(c.peek())) c.bump();
            std::string name(text.substr(lo, c.pos - lo));
            if (name == "_")
                push(Tok::Underscore, lo);
            else
                push(Tok::Ident, lo, std::move(name));
            continue;
        }

        if (std::isdigit(static_cast<unsigned char>(ch))) {
            bool is_float = false;
            int base = 10;
            if (ch == '0' && (c.peek(1) == 'x' || c.peek(1) == 'X')) {
                base = 16;
                c.pos += 2;
                while (std::isxdigit(static_cast<unsigned char>(c.peek())) || c.peek() == '_') c.bump();
            } else if (ch == '0' && c.peek(1) == 'b') {
                base = 2;
                c.pos += 2;
                while (c.peek() == '0' || c.peek() == '1' || c.peek() == '_') c.bump();
            } else {
                while (std::isdigit(static_cast<unsigned char>(c.peek())) || c.peek() == '_') c.bump();
                // a '.' starts a float only when followed by a digit ("1..2" is a range)
                if (c.peek() == '.' && std::isdigit(static_cast<unsigned char>(c.peek(1)))) {
                    is_float = true;
                    c.bump();
                    while (std::isdigit(static_cast<unsigned char>(c.peek()))) c.bump();
                }
                if (c.peek() == 'e' || c.peek() == 'E') {
                    char nxt = c.peek(1);
                    if (std::isdigit(static_cast<unsigned char>(nxt)) ||
                        ((nxt == '+' || nxt == '-') && std::isdigit(static_cast<unsigned char>(c.peek(2))))) {
                        is_float = true;
                        c.bump();
                        if (c.peek() == '+' || c.peek() == '-') c.bump();
                        while (std::isdigit(static_cast<unsigned char>(c.peek()))) c.bump();
                    }
                }
            }
            std::string digits(text.substr(lo, c.pos - lo));
            std::string suffix;
            for (const char* s : kNumSuffixes) {
                size_t n = std::char_traits<char>::length(s);
                if (text.substr(c.pos, n) == s && !is_ident_cont(c.peek(static_cast<uint32_t>(n)))) {
                    suffix = s;
                    c.pos += static_cast<uint32_t>(n);
                    break;
                }
            }
            std::erase(digits, '_');
            Token t;
            if (is_float || suffix == "f32" || suffix == "f64") {
                t.kind = Tok::Float;
                t.float_value = std::strtod(digits.c_str(), nullptr);
            } else {
                t.kind = Tok::Int;
                const char* start = digits.c_str();
                if (base == 16 || base == 2) start += 2;
                t.int_value = std::strtoull(start, nullptr, base);
            }
            t.text = digits;
            t.suffix = suffix;
            t.span = c.span_from(lo);
            out.push_back(std::move(t));
            continue;
        }

        if (ch == '"') {
            c.bump();
            std::string body = unescape(c, '"');
            if (!c.eat('"')) diags.error("unterminated string literal", c.span_from(lo));
            push(Tok::Str, lo, std::move(body));
            continue;
        }

        if (ch == '\'') {
            // distinguish lifetime 'a from char 'a'
            if (is_ident_start(c.peek(1)) && c.peek(2) != '\'') {
                c.bump();
                uint32_t name_lo = c.pos;
                while (is_ident_cont(c.peek())) c.bump();
                push(Tok::Lifetime, lo, std::string(text.substr(name_lo, c.pos - name_lo)));
                continue;
            }
            c.bump();
            std::string body = unescape(c, '\'');
            if (!c.eat('\'')) diags.error("unterminated char literal", c.span_from(lo));
            push(Tok::Char, lo, std::move(body));
            continue;
        }

        c.bump();
        switch (ch) {
            case '(': push(Tok::LParen, lo); break;
            case ')': push(Tok::RParen, lo); break;
            case '{': push(Tok::LBrace, lo); break;
            case '}': push(Tok::RBrace, lo); break;
            case '[': push(Tok::LBracket, lo); break;
            case ']': push(Tok::RBracket, lo); break;
            case ',': push(Tok::Comma, lo); break;
            case ';': push(Tok::Semi, lo); break;
            case '@': push(Tok::At, lo); break;
            case '$': push(Tok::At, lo); break; // only occurs inside opaque macro bodies
            case '#': push(Tok::Pound, lo); break;
            case '?': push(Tok::Question, lo); break;
            case ':': push(c.eat(':') ? Tok::PathSep : Tok::Colon, lo); break;
            case '.':
                if (c.eat('.'))
                    push(c.eat('=') ? Tok::DotDotEq : Tok::DotDot, lo);
                else
                    push(Tok::Dot, lo);
                break;
            case '=':
                if (c.eat('='))
                    push(Tok::EqEq, lo);
                else if (c.eat('>'))
                    push(Tok::FatArrow, lo);
                else
                    push(Tok::Eq, lo);
                break;
            case '!': push(c.eat('=') ? Tok::Ne : Tok::Not, lo); break;
            case '<':
                if (c.eat('='))
                    push(Tok::Le, lo);
                else if (c.peek() == '<' && c.peek(1) == '=') {
                    c.pos += 2;
                    push(Tok::ShlEq, lo);
                } else if (c.eat('<'))
                    push(Tok::Shl, lo);
                else
                    push(Tok::Lt, lo);
                break;
            case '>':
                if (c.eat('='))
                    push(Tok::Ge, lo);
                else if (c.peek() == '>' && c.peek(1) == '=') {
                    c.pos += 2;
                    push(Tok::ShrEq, lo);
                } else if (c.eat('>'))
                    push(Tok::Shr, lo);
                else
                    push(Tok::Gt, lo);
                break;
            case '+': push(c.eat('=') ? Tok::PlusEq : Tok::Plus, lo); break;
            case '-':
                if (c.eat('='))
                    push(Tok::MinusEq, lo);
                else if (c.eat('>'))
                    push(Tok::RArrow, lo);
                else
                    push(Tok::Minus, lo);
                break;
            case '*': push(c.eat('=') ? Tok::StarEq : Tok::Star, lo); break;
            case '/': push(c.eat('=') ? Tok::SlashEq : Tok::Slash, lo); break;
            case '%': push(c.eat('=') ? Tok::PercentEq : Tok::Percent, lo); break;
            case '&':
                if (c.eat('&'))
                    push(Tok::AndAnd, lo);
                else
                    push(c.eat('=') ? Tok::AmpEq : Tok::Amp, lo);
                break;
            case '|':
                if (c.eat('|'))
                    push(Tok::OrOr, lo);
                else
                    push(c.eat('=') ? Tok::PipeEq : Tok::Pipe, lo);
                break;
            case '^': push(c.eat('=') ? Tok::CaretEq : Tok::Caret, lo); break;
            default:
                diags.error(std::string("unexpected character '") + ch + "'", c.span_from(lo));
        }
    }

    Token eof;
    eof.kind = Tok::Eof;
    eof.span = Span{file_id, static_cast<uint32_t>(text.size()), static_cast<uint32_t>(text.size())};
    out.push_back(eof);
    return out;
}

} // namespace reachfuzz::frontend
