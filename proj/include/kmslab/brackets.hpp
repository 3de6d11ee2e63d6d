/*
 * Poisson brackets on the product manifold.
 *
 * {f, g} = sum over i in supp f ∩ supp g of the site bracket at i. Two
 * routes are provided: a symbolic one that returns the bracket as a new
 * Observable (needed for nested brackets and for KMS integrands), and a
 * numeric one from reverse-mode gradients at a configuration.
 */
#pragma once

#include "configuration.hpp"

namespace kmslab {

namespace detail {

inline ExprPtr site_bracket_expr(const Observable& f, const Observable& g, const SiteIndex& i,
                                 const SiteManifold& m) {
    ExprPtr r;
    if (m.kind() == ManifoldKind::Sphere2) {
        auto fx = differentiate(f.ast(), Symbol::Sx, i);
        auto fy = differentiate(f.ast(), Symbol::Sy, i);
        auto fz = differentiate(f.ast(), Symbol::Sz, i);
        auto gx = differentiate(g.ast(), Symbol::Sx, i);
        auto gy = differentiate(g.ast(), Symbol::Sy, i);
        auto gz = differentiate(g.ast(), Symbol::Sz, i);
        using namespace build;
        auto cx = sub(mul(fy, gz), mul(fz, gy));
        auto cy = sub(mul(fz, gx), mul(fx, gz));
        auto cz = sub(mul(fx, gy), mul(fy, gx));
        r = add(add(mul(node::coord(Symbol::Sx, i), cx), mul(node::coord(Symbol::Sy, i), cy)),
                mul(node::coord(Symbol::Sz, i), cz));
    } else {
        auto fq = differentiate(f.ast(), Symbol::Q, i);
        auto fp = differentiate(f.ast(), Symbol::P, i);
        auto gq = differentiate(g.ast(), Symbol::Q, i);
        auto gp = differentiate(g.ast(), Symbol::P, i);
        r = build::sub(build::mul(fq, gp), build::mul(fp, gq));
    }
    return m.bracket_sign() < 0 ? build::neg(r) : r;
}

inline void check_manifold(const Observable& f, const SiteManifold& m) {
    if (f.kind() != m.kind()) throw ConfigError("observable and manifold disagree");
}

} // namespace detail

// Symbolic {f, g}. Empty when the supports do not meet.
inline Observable poisson_bracket(const Observable& f, const Observable& g, const SiteManifold& m) {
    detail::check_manifold(f, m);
    detail::check_manifold(g, m);
    ExprPtr acc = build::constant(0.0);
    for (const auto& i : intersection(f.support(), g.support()))
        acc = build::add(acc, detail::site_bracket_expr(f, g, i, m));
    return Observable(acc, f.kind(), f.dimension());
}

// Ambient gradient of f with respect to the coordinates of site i; zero if i is outside supp f.
inline Gradient grad_site(const Observable& f, const Configuration& config, const SiteIndex& i) {
    auto it = std::lower_bound(f.support().begin(), f.support().end(), i);
    if (it == f.support().end() || *it != i) return {0.0, 0.0, 0.0};
    auto slots = config.bind(f);
    std::vector<Gradient> grad(f.support().size());
    f.gradient(config.storage(), slots, grad);
    return grad[static_cast<std::size_t>(it - f.support().begin())];
}

// Site bracket at i, from numeric gradients.
inline double site_bracket(const SiteManifold& m, const Observable& f, const Observable& g,
                           const Configuration& config, const SiteIndex& i) {
    detail::check_manifold(f, m);
    detail::check_manifold(g, m);
    if (!f.depends_on(i) || !g.depends_on(i)) return 0.0;
    return m.bracket(grad_site(f, config, i), grad_site(g, config, i), config.at(i));
}

// {f, g} at a configuration, from numeric gradients.
inline double product_bracket(const Observable& f, const Observable& g, const Configuration& config,
                              const SiteManifold& m) {
    detail::check_manifold(f, m);
    detail::check_manifold(g, m);
    auto common = intersection(f.support(), g.support());
    if (common.empty()) return 0.0;
    auto fs = config.bind(f);
    auto gs = config.bind(g);
    std::vector<Gradient> df(f.support().size()), dg(g.support().size());
    f.gradient(config.storage(), fs, df);
    g.gradient(config.storage(), gs, dg);
    double acc = 0.0;
    for (const auto& i : common) {
        auto fi = static_cast<std::size_t>(std::lower_bound(f.support().begin(), f.support().end(), i) - f.support().begin());
        auto gi = static_cast<std::size_t>(std::lower_bound(g.support().begin(), g.support().end(), i) - g.support().begin());
        acc += m.bracket(df[fi], dg[gi], config.at(i));
    }
    return acc;
}

} // namespace kmslab
