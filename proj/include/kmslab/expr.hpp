/*
 * Expression trees for smooth local functions.
 *
 * Nodes are immutable and shared. Two families of constructors exist:
 * the raw `node::*` makers keep exactly the structure they are given (the
 * parser uses them so printing round-trips), while the folding builders
 * in `build::` simplify constants and neutral elements and are used by
 * symbolic differentiation and bracket construction.
 */
#pragma once

#include "errors.hpp"
#include "lattice.hpp"
#include "site_manifold.hpp"

#include <charconv>
#include <cmath>
#include <memory>
#include <string>

namespace kmslab {

enum class Op : std::uint8_t { Const, Coord, Add, Sub, Mul, Neg, Pow, Cos, Sin, Exp };

// Per-site coordinate symbols. Sphere: sx, sy, sz. Torus: q, p.
enum class Symbol : std::uint8_t { Sx, Sy, Sz, Q, P };

inline int component_of(Symbol s) {
    switch (s) {
    case Symbol::Sx: return 0;
    case Symbol::Sy: return 1;
    case Symbol::Sz: return 2;
    case Symbol::Q: return 0;
    case Symbol::P: return 1;
    }
    return 0;
}

inline ManifoldKind manifold_of(Symbol s) {
    return (s == Symbol::Q || s == Symbol::P) ? ManifoldKind::Torus2 : ManifoldKind::Sphere2;
}

inline std::string_view symbol_name(Symbol s) {
    switch (s) {
    case Symbol::Sx: return "sx";
    case Symbol::Sy: return "sy";
    case Symbol::Sz: return "sz";
    case Symbol::Q: return "q";
    case Symbol::P: return "p";
    }
    return "?";
}

// Symbols of one manifold, in component order.
inline std::vector<Symbol> symbols_for(ManifoldKind k) {
    if (k == ManifoldKind::Sphere2) return {Symbol::Sx, Symbol::Sy, Symbol::Sz};
    return {Symbol::Q, Symbol::P};
}

struct Expr;
using ExprPtr = std::shared_ptr<const Expr>;

struct Expr {
    Op op = Op::Const;
    double value = 0.0;      // Const
    Symbol symbol = Symbol::Sx; // Coord
    SiteIndex site;          // Coord
    int exponent = 0;        // Pow
    ExprPtr a, b;            // operands

    bool is_const() const { return op == Op::Const; }
    bool is_const(double v) const { return op == Op::Const && value == v; }
};

namespace node {

inline ExprPtr constant(double v) {
    auto e = std::make_shared<Expr>();
    e->op = Op::Const;
    e->value = v;
    return e;
}
inline ExprPtr coord(Symbol s, const SiteIndex& site) {
    auto e = std::make_shared<Expr>();
    e->op = Op::Coord;
    e->symbol = s;
    e->site = site;
    return e;
}
inline ExprPtr binary(Op op, ExprPtr a, ExprPtr b) {
    auto e = std::make_shared<Expr>();
    e->op = op;
    e->a = std::move(a);
    e->b = std::move(b);
    return e;
}
inline ExprPtr unary(Op op, ExprPtr a) {
    auto e = std::make_shared<Expr>();
    e->op = op;
    e->a = std::move(a);
    return e;
}
inline ExprPtr power(ExprPtr a, int n) {
    auto e = std::make_shared<Expr>();
    e->op = Op::Pow;
    e->a = std::move(a);
    e->exponent = n;
    return e;
}

} // namespace node

namespace build {

inline ExprPtr constant(double v) { return node::constant(v); }

inline ExprPtr neg(const ExprPtr& a) {
    if (a->is_const()) return node::constant(-a->value);
    if (a->op == Op::Neg) return a->a;
    return node::unary(Op::Neg, a);
}

inline ExprPtr add(const ExprPtr& a, const ExprPtr& b) {
    if (a->is_const() && b->is_const()) return node::constant(a->value + b->value);
    if (a->is_const(0.0)) return b;
    if (b->is_const(0.0)) return a;
    if (b->op == Op::Neg) return node::binary(Op::Sub, a, b->a);
    return node::binary(Op::Add, a, b);
}

inline ExprPtr sub(const ExprPtr& a, const ExprPtr& b) {
    if (a->is_const() && b->is_const()) return node::constant(a->value - b->value);
    if (b->is_const(0.0)) return a;
    if (a->is_const(0.0)) return neg(b);
    if (b->op == Op::Neg) return node::binary(Op::Add, a, b->a);
    return node::binary(Op::Sub, a, b);
}

inline ExprPtr mul(const ExprPtr& a, const ExprPtr& b) {
    if (a->is_const() && b->is_const()) return node::constant(a->value * b->value);
    if (a->is_const(0.0) || b->is_const(0.0)) return node::constant(0.0);
    if (a->is_const(1.0)) return b;
    if (b->is_const(1.0)) return a;
    if (a->is_const(-1.0)) return neg(b);
    if (b->is_const(-1.0)) return neg(a);
    if (a->op == Op::Neg && b->op == Op::Neg) return mul(a->a, b->a);
    if (a->op == Op::Neg) return neg(mul(a->a, b));
    if (b->op == Op::Neg) return neg(mul(a, b->a));
    // keep constants on the left
    if (b->is_const()) return node::binary(Op::Mul, b, a);
    return node::binary(Op::Mul, a, b);
}

inline ExprPtr pow(const ExprPtr& a, int n) {
    if (n == 0) return node::constant(1.0);
    if (n == 1) return a;
    if (a->is_const()) return node::constant(std::pow(a->value, n));
    return node::power(a, n);
}

inline ExprPtr cos(const ExprPtr& a) {
    if (a->is_const()) return node::constant(std::cos(a->value));
    return node::unary(Op::Cos, a);
}
inline ExprPtr sin(const ExprPtr& a) {
    if (a->is_const()) return node::constant(std::sin(a->value));
    return node::unary(Op::Sin, a);
}
inline ExprPtr exp(const ExprPtr& a) {
    if (a->is_const()) return node::constant(std::exp(a->value));
    return node::unary(Op::Exp, a);
}

} // namespace build

// d e / d symbol(site). Exact; returns a folded expression.
inline ExprPtr differentiate(const ExprPtr& e, Symbol s, const SiteIndex& site) {
    switch (e->op) {
    case Op::Const: return build::constant(0.0);
    case Op::Coord: return build::constant(e->symbol == s && e->site == site ? 1.0 : 0.0);
    case Op::Add: return build::add(differentiate(e->a, s, site), differentiate(e->b, s, site));
    case Op::Sub: return build::sub(differentiate(e->a, s, site), differentiate(e->b, s, site));
    case Op::Neg: return build::neg(differentiate(e->a, s, site));
    case Op::Mul: {
        auto da = differentiate(e->a, s, site);
        auto db = differentiate(e->b, s, site);
        return build::add(build::mul(da, e->b), build::mul(e->a, db));
    }
    case Op::Pow: {
        auto da = differentiate(e->a, s, site);
        if (da->is_const(0.0)) return da;
        return build::mul(build::mul(build::constant(e->exponent), build::pow(e->a, e->exponent - 1)), da);
    }
    case Op::Cos: {
        auto da = differentiate(e->a, s, site);
        if (da->is_const(0.0)) return da;
        return build::neg(build::mul(build::sin(e->a), da));
    }
    case Op::Sin: {
        auto da = differentiate(e->a, s, site);
        if (da->is_const(0.0)) return da;
        return build::mul(build::cos(e->a), da);
    }
    case Op::Exp: {
        auto da = differentiate(e->a, s, site);
        if (da->is_const(0.0)) return da;
        return build::mul(e, da);
    }
    }
    return build::constant(0.0);
}

// Rebuilds the tree with every site index passed through `map`.
template <class SiteMap>
ExprPtr map_sites(const ExprPtr& e, SiteMap&& map) {
    switch (e->op) {
    case Op::Const: return e;
    case Op::Coord: return node::coord(e->symbol, map(e->site));
    case Op::Add:
    case Op::Sub:
    case Op::Mul: return node::binary(e->op, map_sites(e->a, map), map_sites(e->b, map));
    case Op::Neg:
    case Op::Cos:
    case Op::Sin:
    case Op::Exp: return node::unary(e->op, map_sites(e->a, map));
    case Op::Pow: return node::power(map_sites(e->a, map), e->exponent);
    }
    return e;
}

inline bool structurally_equal(const ExprPtr& x, const ExprPtr& y) {
    if (x == y) return true;
    if (!x || !y || x->op != y->op) return false;
    switch (x->op) {
    case Op::Const: return x->value == y->value;
    case Op::Coord: return x->symbol == y->symbol && x->site == y->site;
    case Op::Pow: return x->exponent == y->exponent && structurally_equal(x->a, y->a);
    case Op::Neg:
    case Op::Cos:
    case Op::Sin:
    case Op::Exp: return structurally_equal(x->a, y->a);
    default: return structurally_equal(x->a, y->a) && structurally_equal(x->b, y->b);
    }
}

namespace detail {

inline int precedence(const Expr& e) {
    switch (e.op) {
    case Op::Add:
    case Op::Sub: return 1;
    case Op::Mul: return 2;
    case Op::Neg: return 3;
    case Op::Pow: return 4;
    case Op::Const: return e.value < 0 ? 3 : 5;
    default: return 5;
    }
}

inline std::string format_number(double v) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

inline void print(const Expr& e, int min_prec, std::string& out) {
    bool paren = precedence(e) < min_prec;
    if (paren) out += '(';
    switch (e.op) {
    case Op::Const: out += format_number(e.value); break;
    case Op::Coord:
        out += symbol_name(e.symbol);
        out += '(';
        out += e.site.to_string();
        out += ')';
        break;
    case Op::Add:
    case Op::Sub:
        print(*e.a, 1, out);
        out += e.op == Op::Add ? " + " : " - ";
        print(*e.b, 2, out);
        break;
    case Op::Mul:
        print(*e.a, 2, out);
        out += '*';
        print(*e.b, 3, out);
        break;
    case Op::Neg:
        out += '-';
        print(*e.a, 3, out);
        break;
    case Op::Pow:
        print(*e.a, 5, out);
        out += '^';
        out += std::to_string(e.exponent);
        break;
    case Op::Cos:
    case Op::Sin:
    case Op::Exp:
        out += e.op == Op::Cos ? "cos(" : e.op == Op::Sin ? "sin(" : "exp(";
        print(*e.a, 0, out);
        out += ')';
        break;
    }
    if (paren) out += ')';
}

} // namespace detail

inline std::string to_string(const ExprPtr& e) {
    std::string out;
    detail::print(*e, 0, out);
    return out;
}

} // namespace kmslab
