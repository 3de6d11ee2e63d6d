/*
 * Recursive-descent parser for observable text.
 *
 *   expr    := term (('+' | '-') term)*
 *   term    := unary ('*' unary)*
 *   unary   := '-' unary | power
 *   power   := primary ('^' ['+' | '-'] integer)*
 *   primary := number | symbol '(' coords ')' | func '(' expr ')' | '(' expr ')'
 *   func    := cos | sin | exp
 *   symbol  := sx | sy | sz | q | p
 *   coords  := integer (',' integer)*
 */
#pragma once

#include "expr.hpp"

#include <cctype>
#include <cstdlib>
#include <string>
#include <string_view>

namespace kmslab {

namespace detail {

class Parser {
public:
    Parser(std::string_view text, ManifoldKind kind, int dim) : text_(text), kind_(kind), dim_(dim) {}

    ExprPtr parse() {
        skip_ws();
        if (at_end()) fail("empty expression");
        auto e = expr();
        skip_ws();
        if (!at_end()) fail(std::string("unexpected '") + peek() + "'");
        return e;
    }

private:
    ExprPtr expr() {
        auto lhs = term();
        for (;;) {
            skip_ws();
            if (accept('+')) lhs = node::binary(Op::Add, lhs, term());
            else if (accept('-')) lhs = node::binary(Op::Sub, lhs, term());
            else return lhs;
        }
    }

    ExprPtr term() {
        auto lhs = unary();
        for (;;) {
            skip_ws();
            if (accept('*')) lhs = node::binary(Op::Mul, lhs, unary());
            else return lhs;
        }
    }

    ExprPtr unary() {
        skip_ws();
        if (accept('-')) return node::unary(Op::Neg, unary());
        return power();
    }

    ExprPtr power() {
        auto base = primary();
        for (;;) {
            skip_ws();
            if (!accept('^')) return base;
            skip_ws();
            int sign = 1;
            if (accept('-')) sign = -1;
            else accept('+');
            skip_ws();
            base = node::power(base, sign * integer("exponent"));
        }
    }

    ExprPtr primary() {
        skip_ws();
        if (at_end()) fail("unexpected end of input");
        char c = peek();
        if (accept('(')) {
            auto e = expr();
            skip_ws();
            expect(')');
            return e;
        }
        if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return number();
        if (std::isalpha(static_cast<unsigned char>(c))) {
            int line = line_, col = col_;
            std::string name;
            while (!at_end() && std::isalnum(static_cast<unsigned char>(peek()))) name += advance();
            skip_ws();
            if (name == "cos" || name == "sin" || name == "exp") {
                expect('(');
                auto arg = expr();
                skip_ws();
                expect(')');
                Op op = name == "cos" ? Op::Cos : name == "sin" ? Op::Sin : Op::Exp;
                return node::unary(op, arg);
            }
            Symbol sym;
            if (name == "sx") sym = Symbol::Sx;
            else if (name == "sy") sym = Symbol::Sy;
            else if (name == "sz") sym = Symbol::Sz;
            else if (name == "q") sym = Symbol::Q;
            else if (name == "p") sym = Symbol::P;
            else throw ParseError("unknown symbol '" + name + "'", line, col);
            if (manifold_of(sym) != kind_) {
                throw ParseError("symbol '" + name + "' is not defined on " + std::string(to_string(kind_)), line, col);
            }
            expect('(');
            SiteIndex site = SiteIndex::origin(dim_);
            int n = 0;
            for (;;) {
                skip_ws();
                int sign = 1;
                if (accept('-')) sign = -1;
                int v = sign * integer("site coordinate");
                if (n >= dim_) throw ParseError("site has more than " + std::to_string(dim_) + " coordinates", line, col);
                site[n++] = v;
                skip_ws();
                if (accept(',')) continue;
                expect(')');
                break;
            }
            if (n != dim_) throw ParseError("site needs " + std::to_string(dim_) + " coordinates", line, col);
            return node::coord(sym, site);
        }
        fail(std::string("unexpected '") + c + "'");
    }

    ExprPtr number() {
        int line = line_, col = col_;
        std::string digits;
        while (!at_end() && (std::isdigit(static_cast<unsigned char>(peek())) || peek() == '.')) digits += advance();
        if (!at_end() && (peek() == 'e' || peek() == 'E')) {
            digits += advance();
            if (!at_end() && (peek() == '+' || peek() == '-')) digits += advance();
            while (!at_end() && std::isdigit(static_cast<unsigned char>(peek()))) digits += advance();
        }
        char* end = nullptr;
        double v = std::strtod(digits.c_str(), &end);
        if (end != digits.c_str() + digits.size()) throw ParseError("malformed number '" + digits + "'", line, col);
        return node::constant(v);
    }

    int integer(const char* what) {
        if (at_end() || !std::isdigit(static_cast<unsigned char>(peek()))) fail(std::string("expected integer ") + what);
        long v = 0;
        while (!at_end() && std::isdigit(static_cast<unsigned char>(peek()))) {
            v = v * 10 + (advance() - '0');
            if (v > 1000000) fail(std::string(what) + " out of range");
        }
        return static_cast<int>(v);
    }

    void skip_ws() {
        while (!at_end() && std::isspace(static_cast<unsigned char>(peek()))) advance();
    }
    bool at_end() const { return pos_ >= text_.size(); }
    char peek() const { return text_[pos_]; }
    char advance() {
        char c = text_[pos_++];
        if (c == '\n') {
            ++line_;
            col_ = 1;
        } else {
            ++col_;
        }
        return c;
    }
    bool accept(char c) {
        if (!at_end() && peek() == c) {
            advance();
            return true;
        }
        return false;
    }
    void expect(char c) {
        if (!accept(c)) fail(std::string("expected '") + c + "'");
    }
    [[noreturn]] void fail(const std::string& msg) { throw ParseError(msg, line_, col_); }

    std::string_view text_;
    ManifoldKind kind_;
    int dim_;
    std::size_t pos_ = 0;
    int line_ = 1;
    int col_ = 1;
};

} // namespace detail

inline ExprPtr parse_expression(std::string_view text, ManifoldKind kind, int dim) {
    if (dim < 1 || dim > kMaxDimension) throw ConfigError("dimension must be 1..3", "dimension");
    return detail::Parser(text, kind, dim).parse();
}

} // namespace kmslab
