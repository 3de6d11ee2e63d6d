/*
 * Observable: an immutable smooth local function f in C^inf_loc(Omega).
 *
 * Holds the expression tree, its support (exactly the sites whose symbols
 * occur in the tree, sorted) and a compiled tape in SSA form. The tape is
 * evaluated against "slots": slot j refers to support()[j], and callers map
 * slots to storage however they like (a packed point list, or indices into a
 * Configuration). Gradients come from a reverse sweep over the same tape, so
 * they are exact.
 */
#pragma once

#include "expr.hpp"
#include "parser.hpp"

#include <cstdint>
#include <span>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace kmslab {

class Observable {
public:
    Observable() : Observable(build::constant(0.0), ManifoldKind::Sphere2, 1) {}

    Observable(ExprPtr ast, ManifoldKind kind, int dim) {
        auto d = std::make_shared<Data>();
        d->ast = std::move(ast);
        d->kind = kind;
        d->dim = dim;
        collect_support(*d->ast, d->support, kind, dim);
        normalize(d->support);
        compile(*d);
        data_ = std::move(d);
    }

    static Observable parse(std::string_view text, ManifoldKind kind, int dim) {
        return Observable(parse_expression(text, kind, dim), kind, dim);
    }
    static Observable constant(double v, ManifoldKind kind, int dim) {
        return Observable(build::constant(v), kind, dim);
    }
    static Observable coordinate(Symbol s, const SiteIndex& site) {
        return Observable(node::coord(s, site), manifold_of(s), site.dim);
    }

    const ExprPtr& ast() const { return data_->ast; }
    const SiteSet& support() const { return data_->support; }
    ManifoldKind kind() const { return data_->kind; }
    int dimension() const { return data_->dim; }
    std::size_t tape_size() const { return data_->tape.size(); }
    std::string to_string() const { return kmslab::to_string(data_->ast); }

    bool depends_on(const SiteIndex& s) const { return contains(data_->support, s); }

    // Values of the support sites in support() order.
    double evaluate(std::span<const SitePoint> support_values) const {
        return run([&](std::uint32_t slot) -> const SitePoint& { return support_values[slot]; });
    }

    // Support site j lives at storage[slots[j]].
    double evaluate(std::span<const SitePoint> storage, std::span<const std::size_t> slots) const {
        return run([&](std::uint32_t slot) -> const SitePoint& { return storage[slots[slot]]; });
    }

    // Value plus ambient gradient at every support site; grad must have support().size() entries.
    double gradient(std::span<const SitePoint> storage, std::span<const std::size_t> slots,
                    std::span<Gradient> grad) const {
        return run_gradient([&](std::uint32_t slot) -> const SitePoint& { return storage[slots[slot]]; }, grad);
    }

    template <class PointAt>
    double run(PointAt&& point_at) const {
        const auto& tape = data_->tape;
        thread_local std::vector<double> vals;
        vals.resize(tape.size());
        forward(tape, point_at, vals);
        double r = vals.back();
        if (!std::isfinite(r)) report_non_finite(vals);
        return r;
    }

    template <class PointAt>
    double run_gradient(PointAt&& point_at, std::span<Gradient> grad) const {
        const auto& tape = data_->tape;
        thread_local std::vector<double> vals;
        thread_local std::vector<double> adj;
        vals.resize(tape.size());
        adj.assign(tape.size(), 0.0);
        forward(tape, point_at, vals);
        double r = vals.back();
        if (!std::isfinite(r)) report_non_finite(vals);
        for (auto& g : grad) g = {0.0, 0.0, 0.0};
        adj.back() = 1.0;
        for (std::size_t i = tape.size(); i-- > 0;) {
            const Instr& in = tape[i];
            double g = adj[i];
            if (g == 0.0) continue;
            switch (in.op) {
            case Op::Const: break;
            case Op::Coord: grad[in.slot][in.comp] += g; break;
            case Op::Add: adj[in.a] += g; adj[in.b] += g; break;
            case Op::Sub: adj[in.a] += g; adj[in.b] -= g; break;
            case Op::Mul: adj[in.a] += g * vals[in.b]; adj[in.b] += g * vals[in.a]; break;
            case Op::Neg: adj[in.a] -= g; break;
            case Op::Pow: adj[in.a] += g * in.exponent * ipow(vals[in.a], in.exponent - 1); break;
            case Op::Cos: adj[in.a] -= g * std::sin(vals[in.a]); break;
            case Op::Sin: adj[in.a] += g * std::cos(vals[in.a]); break;
            case Op::Exp: adj[in.a] += g * vals[i]; break;
            }
        }
        for (const auto& g : grad)
            for (double v : g)
                if (!std::isfinite(v)) throw EvaluationError("non-finite derivative", to_string());
        return r;
    }

    Observable derivative(Symbol s, const SiteIndex& site) const {
        return Observable(differentiate(data_->ast, s, site), kind(), dimension());
    }

    Observable translated(const SiteIndex& shift) const {
        return with_sites([&](const SiteIndex& s) { return s + shift; });
    }

    template <class SiteMap>
    Observable with_sites(SiteMap&& map) const {
        return Observable(map_sites(data_->ast, map), kind(), dimension());
    }

    Observable scaled(double c) const { return Observable(build::mul(build::constant(c), ast()), kind(), dimension()); }

    friend Observable operator+(const Observable& x, const Observable& y) {
        check_compatible(x, y);
        return Observable(build::add(x.ast(), y.ast()), x.kind(), x.dimension());
    }
    friend Observable operator-(const Observable& x, const Observable& y) {
        check_compatible(x, y);
        return Observable(build::sub(x.ast(), y.ast()), x.kind(), x.dimension());
    }
    friend Observable operator*(const Observable& x, const Observable& y) {
        check_compatible(x, y);
        return Observable(build::mul(x.ast(), y.ast()), x.kind(), x.dimension());
    }
    friend Observable operator-(const Observable& x) {
        return Observable(build::neg(x.ast()), x.kind(), x.dimension());
    }

    bool same_structure(const Observable& o) const { return structurally_equal(ast(), o.ast()); }

private:
    struct Instr {
        Op op;
        std::uint8_t comp = 0;
        std::uint32_t slot = 0;
        std::int32_t exponent = 0;
        std::uint32_t a = 0, b = 0;
        double value = 0.0;
        const Expr* node = nullptr;
    };

    struct Data {
        ExprPtr ast;
        ManifoldKind kind;
        int dim;
        SiteSet support;
        std::vector<Instr> tape;
    };

    static void check_compatible(const Observable& x, const Observable& y) {
        if (x.kind() != y.kind() || x.dimension() != y.dimension())
            throw ConfigError("observables live on different manifolds or lattices");
    }

    static void collect_support(const Expr& root, SiteSet& out, ManifoldKind kind, int dim) {
        std::unordered_map<const Expr*, bool> seen;
        collect_support(root, out, kind, dim, seen);
    }

    static void collect_support(const Expr& e, SiteSet& out, ManifoldKind kind, int dim,
                                std::unordered_map<const Expr*, bool>& seen) {
        if (!seen.emplace(&e, true).second) return;
        if (e.op == Op::Coord) {
            if (manifold_of(e.symbol) != kind)
                throw ConfigError("symbol '" + std::string(symbol_name(e.symbol)) + "' does not belong to " +
                                  std::string(kmslab::to_string(kind)));
            if (e.site.dim != dim) throw ConfigError("site " + e.site.to_string() + " has the wrong dimension");
            out.push_back(e.site);
        }
        if (e.a) collect_support(*e.a, out, kind, dim, seen);
        if (e.b) collect_support(*e.b, out, kind, dim, seen);
    }

    static void compile(Data& d) {
        std::unordered_map<const Expr*, std::uint32_t> memo;
        compile_node(d, *d.ast, memo);
    }

    static std::uint32_t compile_node(Data& d, const Expr& e, std::unordered_map<const Expr*, std::uint32_t>& memo) {
        if (auto it = memo.find(&e); it != memo.end()) return it->second;
        Instr in;
        in.op = e.op;
        in.node = &e;
        switch (e.op) {
        case Op::Const: in.value = e.value; break;
        case Op::Coord: {
            in.comp = static_cast<std::uint8_t>(component_of(e.symbol));
            auto it = std::lower_bound(d.support.begin(), d.support.end(), e.site);
            in.slot = static_cast<std::uint32_t>(it - d.support.begin());
            break;
        }
        case Op::Add:
        case Op::Sub:
        case Op::Mul:
            in.a = compile_node(d, *e.a, memo);
            in.b = compile_node(d, *e.b, memo);
            break;
        case Op::Pow:
            in.exponent = e.exponent;
            in.a = compile_node(d, *e.a, memo);
            break;
        default: in.a = compile_node(d, *e.a, memo); break;
        }
        d.tape.push_back(in);
        auto idx = static_cast<std::uint32_t>(d.tape.size() - 1);
        memo.emplace(&e, idx);
        return idx;
    }

    template <class PointAt>
    static void forward(const std::vector<Instr>& tape, PointAt& point_at, std::vector<double>& vals) {
        for (std::size_t i = 0; i < tape.size(); ++i) {
            const Instr& in = tape[i];
            double v = 0.0;
            switch (in.op) {
            case Op::Const: v = in.value; break;
            case Op::Coord: v = point_at(in.slot)[in.comp]; break;
            case Op::Add: v = vals[in.a] + vals[in.b]; break;
            case Op::Sub: v = vals[in.a] - vals[in.b]; break;
            case Op::Mul: v = vals[in.a] * vals[in.b]; break;
            case Op::Neg: v = -vals[in.a]; break;
            case Op::Pow: v = ipow(vals[in.a], in.exponent); break;
            case Op::Cos: v = std::cos(vals[in.a]); break;
            case Op::Sin: v = std::sin(vals[in.a]); break;
            case Op::Exp: v = std::exp(vals[in.a]); break;
            }
            vals[i] = v;
        }
    }

    static double ipow(double x, int n) {
        if (n < 0) return 1.0 / ipow(x, -n);
        double r = 1.0;
        while (n) {
            if (n & 1) r *= x;
            x *= x;
            n >>= 1;
        }
        return r;
    }

    [[noreturn]] void report_non_finite(const std::vector<double>& vals) const {
        const auto& tape = data_->tape;
        for (std::size_t i = 0; i < tape.size(); ++i) {
            if (!std::isfinite(vals[i])) {
                std::string s;
                detail::print(*tape[i].node, 0, s);
                throw EvaluationError("non-finite value in observable", s);
            }
        }
        throw EvaluationError("non-finite value in observable", to_string());
    }

    std::shared_ptr<const Data> data_;
};

} // namespace kmslab
