/*
 * Finite-range potentials, local Hamiltonians and the Hamiltonian vector field.
 *
 * A potential is a list of terms, each an observable over a declared support
 * pattern. For translation-invariant potentials the pattern is relative and
 * the term is repeated at every lattice translation; otherwise the offsets
 * are absolute sites and each term occurs once.
 *
 * H_Lambda sums every term instance whose support meets Lambda. On periodic
 * windows instances are identified modulo the window lengths (translations
 * are reduced mod L and each reduced translation counts once); this needs
 * every window length to exceed twice the range.
 */
#pragma once

#include "brackets.hpp"

#include <set>
#include <sstream>
#include <utility>

namespace kmslab {

struct PotentialTerm {
    SiteSet offsets;
    Observable expr;
    double coupling = 1.0;
};

class Potential {
public:
    Potential(ManifoldKind kind, int dim, std::vector<PotentialTerm> terms, bool translation_invariant)
        : kind_(kind), dim_(dim), terms_(std::move(terms)), translation_invariant_(translation_invariant) {
        if (dim_ < 1 || dim_ > kMaxDimension) throw ConfigError("dimension must be 1..3", "dimension");
        for (std::size_t t = 0; t < terms_.size(); ++t) {
            auto& term = terms_[t];
            const std::string field = "term[" + std::to_string(t) + "]";
            if (term.offsets.empty()) throw ConfigError("offsets must not be empty", field + ".offsets");
            for (const auto& o : term.offsets)
                if (o.dim != dim_) throw ConfigError("offset " + o.to_string() + " has the wrong dimension", field + ".offsets");
            normalize(term.offsets);
            if (term.expr.kind() != kind_) throw ConfigError("expression uses the wrong manifold", field + ".expr");
            if (term.expr.support() != term.offsets)
                throw ConfigError("expression support differs from the declared offsets", field + ".expr");
            if (!std::isfinite(term.coupling)) throw ConfigError("coupling must be finite", field + ".coupling");
            for (const auto& a : term.offsets)
                for (const auto& b : term.offsets) range_ = std::max(range_, (a - b).sup_norm());
        }
    }

    static Potential zero(ManifoldKind kind, int dim) { return Potential(kind, dim, {}, true); }

    ManifoldKind kind() const { return kind_; }
    int dimension() const { return dim_; }
    const std::vector<PotentialTerm>& terms() const { return terms_; }
    bool translation_invariant() const { return translation_invariant_; }
    bool empty() const { return terms_.empty(); }

    // Largest sup-norm diameter of a term support.
    int range() const { return range_; }

    // Adds a constant to one term (gauge shift).
    Potential with_constant_added(std::size_t term, double c) const {
        auto terms = terms_;
        auto& t = terms.at(term);
        t.expr = Observable(build::add(t.expr.ast(), build::constant(c / t.coupling)), kind_, dim_);
        return Potential(kind_, dim_, std::move(terms), translation_invariant_);
    }

    // Canonical text form, used for hashing.
    std::string describe() const {
        std::ostringstream os;
        os << "manifold=" << to_string(kind_) << ";dimension=" << dim_
           << ";translation_invariant=" << (translation_invariant_ ? "true" : "false");
        for (const auto& t : terms_) {
            os << ";term{offsets=";
            for (const auto& o : t.offsets) os << '[' << o.to_string() << ']';
            os << ",expr=" << t.expr.to_string() << ",coupling=" << detail::format_number(t.coupling) << '}';
        }
        return os.str();
    }

private:
    ManifoldKind kind_;
    int dim_;
    std::vector<PotentialTerm> terms_;
    bool translation_invariant_;
    int range_ = 0;
};

// One concrete occurrence of a potential term: coupling folded in, sites canonical.
struct TermInstance {
    std::size_t term;
    SiteIndex shift;
    Observable expr;
};

namespace detail {

inline SiteIndex reduce_shift(const SiteIndex& shift, const Window& w) {
    SiteIndex r = shift;
    for (int k = 0; k < w.dim(); ++k) {
        int l = w.length(k);
        r[k] = ((shift[k] % l) + l) % l;
    }
    return r;
}

inline void check_compatible(const Potential& phi, const Configuration& geometry) {
    if (phi.kind() != geometry.kind()) throw ConfigError("potential and configuration use different manifolds");
    if (phi.dimension() != geometry.dimension()) throw ConfigError("potential and configuration use different dimensions");
    if (geometry.boundary() == BoundaryKind::Periodic) {
        for (int k = 0; k < geometry.dimension(); ++k)
            if (geometry.window().length(k) <= 2 * phi.range())
                throw ConfigError("periodic window length " + std::to_string(geometry.window().length(k)) +
                                      " must exceed twice the potential range " + std::to_string(phi.range()),
                                  "window");
    }
}

} // namespace detail

// Every term instance whose support meets lambda, ordered by (term, shift).
inline std::vector<TermInstance> interacting_terms(const Potential& phi, const SiteSet& lambda_in,
                                                   const Configuration& geometry) {
    detail::check_compatible(phi, geometry);
    SiteSet lambda;
    for (const auto& s : lambda_in) lambda.push_back(geometry.canonical(s));
    normalize(lambda);

    const bool periodic = geometry.boundary() == BoundaryKind::Periodic;
    std::set<std::pair<std::size_t, SiteIndex>> keys;
    for (std::size_t t = 0; t < phi.terms().size(); ++t) {
        const auto& term = phi.terms()[t];
        if (phi.translation_invariant()) {
            for (const auto& x : lambda)
                for (const auto& o : term.offsets) {
                    SiteIndex shift = x - o;
                    keys.emplace(t, periodic ? detail::reduce_shift(shift, geometry.window()) : shift);
                }
        } else {
            SiteSet sites;
            for (const auto& o : term.offsets) sites.push_back(geometry.canonical(o));
            normalize(sites);
            if (intersects(sites, lambda)) keys.emplace(t, SiteIndex::origin(phi.dimension()));
        }
    }

    std::vector<TermInstance> out;
    out.reserve(keys.size());
    for (const auto& [t, shift] : keys) {
        const auto& term = phi.terms()[t];
        bool dropped = false;
        for (const auto& o : term.offsets) {
            SiteIndex s = o + shift;
            if (geometry.covers(s)) continue;
            if (geometry.boundary() == BoundaryKind::Free) {
                dropped = true;
                break;
            }
            throw MissingSiteError("potential term " + std::to_string(t) + " needs site " + s.to_string() +
                                   ", which has no collar value");
        }
        if (dropped) continue;
        auto expr = term.expr.with_sites([&](const SiteIndex& s) { return geometry.canonical(s + shift); });
        if (term.coupling != 1.0) expr = expr.scaled(term.coupling);
        out.push_back({t, shift, std::move(expr)});
    }
    return out;
}

// H_Lambda at the configuration.
inline double local_hamiltonian(const Potential& phi, const SiteSet& lambda, const Configuration& config) {
    double h = 0.0;
    for (const auto& inst : interacting_terms(phi, lambda, config)) h += evaluate(inst.expr, config);
    return h;
}

// X^Phi(f) = {f, H_Lambda} as an observable, Lambda defaulting to supp f.
inline Observable hamiltonian_vector_field(const Potential& phi, const Observable& f_in, const Configuration& geometry,
                                           const SiteManifold& m, const SiteSet* lambda = nullptr) {
    Observable f = canonicalize(f_in, geometry);
    ExprPtr acc = build::constant(0.0);
    for (const auto& inst : interacting_terms(phi, lambda ? *lambda : f.support(), geometry)) {
        auto b = poisson_bracket(f, inst.expr, m);
        acc = build::add(acc, b.ast());
    }
    return Observable(acc, f.kind(), f.dimension());
}

// X^Phi(f) evaluated at the configuration, from numeric gradients.
inline double x_phi(const Potential& phi, const Observable& f_in, const Configuration& config, const SiteManifold& m,
                    const SiteSet* lambda = nullptr) {
    Observable f = canonicalize(f_in, config);
    double acc = 0.0;
    for (const auto& inst : interacting_terms(phi, lambda ? *lambda : f.support(), config))
        acc += product_bracket(f, inst.expr, config, m);
    return acc;
}

struct TermSupremum {
    std::size_t term;
    SiteIndex shift;
    double sup_value;
    double sup_differential;
};

// Diagnostic for the C^1 summability sum at site i. Suprema are maxima over a
// product grid (quadrature nodes plus axis points) and Liouville samples,
// hence lower bounds of the true suprema.
struct C1Report {
    SiteIndex site;
    std::vector<TermSupremum> terms;
    double total = 0.0;
    bool lower_bound = true;
};

inline C1Report c1_norm_report(const Potential& phi, const SiteIndex& i, const SiteManifold& m,
                               std::uint64_t seed = 1, std::size_t samples = 10000) {
    C1Report report;
    report.site = i;
    std::vector<std::pair<std::size_t, SiteIndex>> instances;
    for (std::size_t t = 0; t < phi.terms().size(); ++t) {
        const auto& term = phi.terms()[t];
        if (phi.translation_invariant()) {
            for (const auto& o : term.offsets) instances.emplace_back(t, i - o);
        } else if (contains(term.offsets, i)) {
            instances.emplace_back(t, SiteIndex::origin(phi.dimension()));
        }
    }
    RandomStream rng = RandomStream::for_stream(seed, kSupremumStream);
    for (const auto& [t, shift] : instances) {
        const auto& term = phi.terms()[t];
        Observable expr = term.expr.translated(shift).scaled(term.coupling);
        const std::size_t n = expr.support().size();
        const std::vector<std::size_t> slots = [&] {
            std::vector<std::size_t> s(n);
            for (std::size_t k = 0; k < n; ++k) s[k] = k;
            return s;
        }();
        std::vector<SitePoint> pts(n);
        std::vector<Gradient> grad(n);
        double sup_v = 0.0, sup_d = 0.0;
        auto visit = [&] {
            double v = expr.gradient(pts, slots, grad);
            double d2 = 0.0;
            for (const auto& g : grad) d2 += g[0] * g[0] + g[1] * g[1] + g[2] * g[2];
            sup_v = std::max(sup_v, std::abs(v));
            sup_d = std::max(sup_d, std::sqrt(d2));
        };
        // coarsest grid keeping the product under ~2e5 points
        int order = m.quadrature_order();
        auto count = [&](int k) {
            double per = m.kind() == ManifoldKind::Sphere2 ? 2.0 * k * k : 1.0 * k * k;
            return std::pow(per, static_cast<double>(n));
        };
        while (order > 2 && count(order) > 2e5) --order;
        std::vector<SitePoint> nodes;
        const SiteManifold grid = m.with_order(order);
        for (const auto& nd : grid.nodes()) nodes.push_back(nd.point);
        if (m.kind() == ManifoldKind::Sphere2) {
            for (int a = 0; a < 3; ++a)
                for (double sgn : {1.0, -1.0}) {
                    double v[3] = {0, 0, 0};
                    v[a] = sgn;
                    nodes.push_back(SitePoint::sphere(v[0], v[1], v[2]));
                }
        } else {
            for (int a = 0; a < 4; ++a)
                for (int b = 0; b < 4; ++b) nodes.push_back(SitePoint::torus(a * std::numbers::pi / 2, b * std::numbers::pi / 2));
        }
        std::vector<std::size_t> idx(n, 0);
        for (;;) {
            for (std::size_t k = 0; k < n; ++k) pts[k] = nodes[idx[k]];
            visit();
            std::size_t k = n;
            while (k > 0) {
                --k;
                if (++idx[k] < nodes.size()) break;
                idx[k] = 0;
                if (k == 0) { k = n + 1; break; }
            }
            if (k == n + 1 || n == 0) break;
        }
        for (std::size_t s = 0; s < samples; ++s) {
            for (std::size_t k = 0; k < n; ++k) pts[k] = m.uniform_sample(rng);
            visit();
        }
        report.terms.push_back({t, shift, sup_v, sup_d});
        report.total += sup_v + sup_d;
    }
    return report;
}

} // namespace kmslab
