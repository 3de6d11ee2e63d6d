/*
 * Equivalence experiments: KMS residuals of Gibbs states, DLR invariance of
 * sampled window measures, kernel compatibility, the tilted functional and
 * the quasi-local approximation probe.
 *
 * Every suite returns a CheckReport. Quadrature residuals are judged against
 * an absolute tolerance, Monte Carlo residuals by their z-score.
 */
#pragma once

#include "corpus.hpp"
#include "gibbs.hpp"

#include <chrono>

namespace kmslab {

enum class Verdict { Pass, Fail, Inconclusive };

inline std::string_view to_string(Verdict v) {
    switch (v) {
    case Verdict::Pass: return "pass";
    case Verdict::Fail: return "fail";
    case Verdict::Inconclusive: return "inconclusive";
    }
    return "?";
}

inline int exit_code(Verdict v) {
    switch (v) {
    case Verdict::Pass: return 0;
    case Verdict::Fail: return 2;
    case Verdict::Inconclusive: return 3;
    }
    return 1;
}

struct CheckThresholds {
    double z_pass = 4.0;
    double z_fail = 5.0;
    double tol = 1e-8;
    double n_eff_floor = 100.0;
};

struct PairResult {
    std::string f;
    std::string g;
    Estimate residual;
    double z = 0.0;
    Verdict verdict = Verdict::Pass;
};

struct CheckReport {
    std::string name;
    std::vector<PairResult> pairs;
    Verdict verdict = Verdict::Pass;
    double runtime_sec = 0.0;
    std::string coverage;

    double max_abs_residual() const {
        double m = 0.0;
        for (const auto& p : pairs) m = std::max(m, std::abs(p.residual.value));
        return m;
    }
    double max_abs_z() const {
        double m = 0.0;
        for (const auto& p : pairs) m = std::max(m, std::abs(p.z));
        return m;
    }
};

inline Verdict judge(const Estimate& e, const CheckThresholds& t) {
    if (e.kind == EstimateKind::QuadratureBound) return std::abs(e.value) <= t.tol ? Verdict::Pass : Verdict::Fail;
    if (e.n_effective < t.n_eff_floor) return Verdict::Inconclusive;
    double z = std::abs(e.z_score());
    if (z <= t.z_pass) return Verdict::Pass;
    if (z >= t.z_fail) return Verdict::Fail;
    return Verdict::Inconclusive;
}

namespace detail {

inline Verdict aggregate(const std::vector<PairResult>& pairs) {
    bool inconclusive = false;
    for (const auto& p : pairs) {
        if (p.verdict == Verdict::Fail) return Verdict::Fail;
        if (p.verdict == Verdict::Inconclusive) inconclusive = true;
    }
    return inconclusive ? Verdict::Inconclusive : Verdict::Pass;
}

inline PairResult make_row(std::string f, std::string g, const Estimate& e, const CheckThresholds& t) {
    PairResult r{std::move(f), std::move(g), e, 0.0, judge(e, t)};
    r.z = e.kind == EstimateKind::McStdErr ? e.z_score() : 0.0;
    return r;
}

inline std::string coverage_note(std::size_t n, const std::string& version, const char* what) {
    return "spot check over " + std::to_string(n) + " " + what + " (corpus " + version +
           "); the identity is claimed only for these";
}

class Stopwatch {
public:
    double seconds() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    }

private:
    std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

inline std::string region_text(const SiteSet& s) {
    std::string out = "{";
    for (std::size_t k = 0; k < s.size(); ++k) out += (k ? ";" : "") + s[k].to_string();
    return out + "}";
}

} // namespace detail

// {f, g}_Lambda: the bracket summed over sites of lambda only.
inline Observable restricted_bracket(const Observable& f, const Observable& g, const SiteManifold& m,
                                     const SiteSet& lambda) {
    ExprPtr acc = build::constant(0.0);
    for (const auto& i : intersection(f.support(), g.support()))
        if (contains(lambda, i)) acc = build::add(acc, detail::site_bracket_expr(f, g, i, m));
    return Observable(acc, f.kind(), f.dimension());
}

// The KMS integrand {f, g} - g X^Phi(f); X^Phi uses the potential at unit temperature.
inline Observable kms_integrand(const Potential& phi, const Observable& f_in, const Observable& g_in,
                                const Configuration& geometry, const SiteManifold& m) {
    Observable f = canonicalize(f_in, geometry);
    Observable g = canonicalize(g_in, geometry);
    Observable x = hamiltonian_vector_field(phi, f, geometry, m);
    return poisson_bracket(f, g, m) - g * x;
}

// phi({f,g}) - phi(g X^Phi(f)) under the kernel's state, both terms on the same samples.
inline Estimate kms_residual(const GibbsKernel& state, const Observable& f, const Observable& g,
                             const Configuration& eta) {
    return gibbs_expectation(state, kms_integrand(state.phi, f, g, eta, state.manifold), eta);
}

// KMS residuals of the Lambda-Gibbs state for every corpus pair. Requires supp f ⊆ Lambda.
inline CheckReport prop41_suite(const GibbsKernel& state, const Configuration& eta, const Corpus& corpus,
                                const CheckThresholds& t = {}) {
    detail::Stopwatch clock;
    auto region = detail::canonical_region(state.lambda, eta);
    std::vector<Observable> integrands;
    for (const auto& [f, g] : corpus.pairs) {
        for (const auto& s : f.support())
            if (!contains(region, eta.canonical(s)))
                throw ConfigError("support of " + f.to_string() + " leaves the region " + detail::region_text(region),
                                  "lambda");
        integrands.push_back(kms_integrand(state.phi, f, g, eta, state.manifold));
    }
    auto est = gibbs_expectations(state, integrands, eta);
    CheckReport r;
    r.name = "kms";
    for (std::size_t k = 0; k < est.size(); ++k)
        r.pairs.push_back(detail::make_row(corpus.pairs[k].f.to_string(), corpus.pairs[k].g.to_string(), est[k], t));
    r.verdict = detail::aggregate(r.pairs);
    r.coverage = detail::coverage_note(corpus.pairs.size(), corpus.version, "pairs");
    r.runtime_sec = clock.seconds();
    return r;
}

// DLR invariance of the window measure sampled by `sampler` (MCMC over the
// whole window, at the sampler's beta): for every region Lambda and function f
// the series f(omega) - phi_Lambda(f | omega), with phi_Lambda the
// unit-temperature quadrature kernel of sampler.phi, must average to zero.
inline CheckReport dlr_invariance_suite(const GibbsKernel& sampler, const Configuration& eta,
                                        const std::vector<SiteSet>& regions, const Corpus& corpus,
                                        const CheckThresholds& t = {}) {
    detail::Stopwatch clock;
    if (eta.boundary() != BoundaryKind::Periodic) throw ConfigError("DLR checks need a periodic window", "boundary");
    if (regions.empty()) throw ConfigError("no regions given", "lambda");
    if (corpus.functions.empty()) throw ConfigError("corpus has no functions", "corpus");
    std::vector<QuadratureEngine> inner;
    for (const auto& region : regions) {
        if (region.size() > kMaxNestedQuadratureSites)
            throw CostGuardError("DLR inner kernel limited to " + std::to_string(kMaxNestedQuadratureSites) + " sites");
        GibbsKernel k{sampler.phi, region, 1.0, EngineKind::Quadrature, {}, sampler.manifold};
        inner.emplace_back(k, eta);
    }
    std::vector<detail::BoundObservable> bound;
    std::vector<Observable> fs;
    for (const auto& f : corpus.functions) {
        Observable c = canonicalize(f, eta);
        auto slots = eta.bind(c);
        bound.push_back({c, std::move(slots)});
        fs.push_back(c);
    }
    GibbsKernel k = sampler;
    k.engine = EngineKind::Mcmc;
    k.lambda = eta.window_sites();
    const std::size_t nf = fs.size();
    auto res = run_mcmc(k, eta, regions.size() * nf, [&](const Configuration& cfg, std::span<double> out) {
        for (std::size_t r = 0; r < inner.size(); ++r) {
            auto cond = inner[r].expectations(cfg.storage(), fs);
            for (std::size_t j = 0; j < nf; ++j) out[r * nf + j] = bound[j](cfg.storage()) - cond[j].value;
        }
    });
    CheckReport rep;
    rep.name = "dlr";
    for (std::size_t r = 0; r < regions.size(); ++r)
        for (std::size_t j = 0; j < nf; ++j)
            rep.pairs.push_back(detail::make_row(fs[j].to_string(), "lambda=" + detail::region_text(regions[r]),
                                                 res.estimates[r * nf + j], t));
    rep.verdict = detail::aggregate(rep.pairs);
    rep.coverage = detail::coverage_note(nf * regions.size(), corpus.version, "(function, region) rows");
    rep.runtime_sec = clock.seconds();
    return rep;
}

// Compatibility mu_outer mu_inner = mu_outer on every corpus function.
inline CheckReport compatibility_suite(const GibbsKernel& outer, const GibbsKernel& inner, const Configuration& eta,
                                       const Corpus& corpus, const CheckThresholds& t = {}) {
    detail::Stopwatch clock;
    CheckReport r;
    r.name = "compat";
    for (const auto& f : corpus.functions) {
        auto c = kernel_compose_expectation(outer, inner, f, eta);
        r.pairs.push_back(detail::make_row(f.to_string(), "inner=" + detail::region_text(inner.lambda), c.difference, t));
    }
    r.verdict = detail::aggregate(r.pairs);
    r.coverage = detail::coverage_note(corpus.functions.size(), corpus.version, "functions");
    r.runtime_sec = clock.seconds();
    return r;
}

// The tilted functional psi(f) = phi_Lambda(f exp(beta H_Lambda) | eta), reported
// normalized as psi_hat = psi / psi(1). Rows: psi_hat({f,g}_Lambda) for every
// pair, then psi_hat(f) - Liouville(f) for every corpus function.
inline CheckReport tilted_annihilation_suite(const GibbsKernel& kernel, const Configuration& eta, const Corpus& corpus,
                                             const CheckThresholds& t = {}) {
    detail::Stopwatch clock;
    auto region = detail::canonical_region(kernel.lambda, eta);
    QuadratureEngine engine(kernel, eta);
    GibbsKernel flat = kernel;
    flat.phi = Potential::zero(kernel.phi.kind(), kernel.phi.dimension());
    QuadratureEngine liouville(flat, eta);

    std::vector<Observable> fs;
    for (const auto& [f, g] : corpus.pairs)
        fs.push_back(restricted_bracket(canonicalize(f, eta), canonicalize(g, eta), kernel.manifold, region));
    const std::size_t np = fs.size();
    for (const auto& f : corpus.functions) fs.push_back(canonicalize(f, eta));
    auto tilt = engine.tilted(eta, fs);
    std::vector<Observable> moments(fs.begin() + static_cast<std::ptrdiff_t>(np), fs.end());
    auto flat_values = liouville.expectations(eta, moments);

    CheckReport r;
    r.name = "tilt";
    const double eps = 16 * std::numeric_limits<double>::epsilon();
    for (std::size_t k = 0; k < np; ++k) {
        Estimate e{tilt.psi_hat[k], eps, EstimateKind::QuadratureBound, static_cast<double>(engine.node_count())};
        r.pairs.push_back(detail::make_row("{" + corpus.pairs[k].f.to_string() + ", " + corpus.pairs[k].g.to_string() + "}",
                                           "psi_hat", e, t));
    }
    for (std::size_t k = 0; k < moments.size(); ++k) {
        Estimate e{tilt.psi_hat[np + k] - flat_values[k].value, eps, EstimateKind::QuadratureBound,
                   static_cast<double>(engine.node_count())};
        r.pairs.push_back(detail::make_row(moments[k].to_string(), "psi_hat - liouville", e, t));
    }
    r.verdict = detail::aggregate(r.pairs);
    r.coverage = detail::coverage_note(np + moments.size(), corpus.version, "rows");
    r.runtime_sec = clock.seconds();
    return r;
}

// f = sum over i in Z^d of amplitude * ratio^|i|_inf * term(. + i), term given at the origin.
struct QuasilocalSeries {
    Observable term;
    double amplitude = 1.0;
    double ratio = 0.5;
};

struct ProbeRow {
    int n = 0;           // window [-n, n]^d
    double gap = 0.0;    // grid estimate of sup |f - f_n|
    double tail_bound = 0.0;
};

// f_n(omega) = f(omega on [-n,n]^d, eta elsewhere). The gap is estimated term by
// term: for each term reaching outside the window, the grid maximum of
// |T(x) - T(x inside, eta outside)|, summed. For single-site terms this is
// exactly sup |f - f_n| over the grid.
inline std::vector<ProbeRow> quasilocal_convergence_probe(const QuasilocalSeries& series, const SitePoint& eta,
                                                          const std::vector<int>& ns, const SiteManifold& m) {
    if (!(series.ratio >= 0.0 && series.ratio < 1.0) || !std::isfinite(series.amplitude))
        throw ConfigError("series coefficients must decay geometrically (0 <= ratio < 1)", "ratio");
    const Observable& T = series.term;
    const int dim = T.dimension();
    const auto& sup = T.support();
    const std::size_t s = sup.size();
    int reach = 0;
    for (const auto& o : sup) reach = std::max(reach, o.sup_norm());

    // grid: quadrature nodes plus poles / corners
    std::vector<SitePoint> grid;
    int order = m.quadrature_order();
    auto per = [&](int k) { return m.kind() == ManifoldKind::Sphere2 ? 2.0 * k * k : 1.0 * k * k; };
    while (order > 2 && std::pow(per(order), static_cast<double>(s)) > 2e5) --order;
    const SiteManifold coarse = m.with_order(order);
    for (const auto& nd : coarse.nodes()) grid.push_back(nd.point);
    if (m.kind() == ManifoldKind::Sphere2) {
        grid.push_back(north_pole());
        grid.push_back(south_pole());
    } else {
        grid.push_back(SitePoint::torus(0, 0));
        grid.push_back(SitePoint::torus(std::numbers::pi, std::numbers::pi));
    }

    // oscillation of T when the sites in `outside` (bitmask over support order) are reset to eta
    std::map<unsigned, double> osc_cache;
    double sup_abs = 0.0;
    auto oscillation = [&](unsigned outside) {
        if (auto it = osc_cache.find(outside); it != osc_cache.end()) return it->second;
        std::vector<SitePoint> x(s), y(s);
        std::vector<std::size_t> idx(s, 0);
        double best = 0.0;
        for (;;) {
            for (std::size_t k = 0; k < s; ++k) {
                x[k] = grid[idx[k]];
                y[k] = (outside >> k) & 1u ? eta : x[k];
            }
            double tx = T.evaluate(x);
            sup_abs = std::max(sup_abs, std::abs(tx));
            best = std::max(best, std::abs(tx - T.evaluate(y)));
            std::size_t k = s;
            bool done = true;
            while (k-- > 0) {
                if (++idx[k] < grid.size()) {
                    done = false;
                    break;
                }
                idx[k] = 0;
            }
            if (done) break;
        }
        osc_cache[outside] = best;
        return best;
    };
    oscillation((1u << s) - 1u);

    // truncate the lattice sum where the remaining tail is below double resolution
    auto shell = [&](int k) { return k == 0 ? 1.0 : std::pow(2.0 * k + 1, dim) - std::pow(2.0 * k - 1, dim); };
    int max_n = 0;
    for (int n : ns) max_n = std::max(max_n, n);
    int cutoff = max_n + reach + 1;
    if (series.ratio > 0.0)
        while (std::abs(series.amplitude) * std::pow(series.ratio, cutoff) * shell(cutoff) * 2 * (sup_abs + 1) > 1e-18 &&
               cutoff < 100000)
            ++cutoff;

    std::vector<ProbeRow> rows;
    for (int n : ns) {
        if (n < 0) throw ConfigError("window radius must be non-negative", "n");
        ProbeRow row;
        row.n = n;
        // enumerate shifts with |i|_inf <= cutoff shell by shell; only shells
        // within reach of the window boundary can have terms partly outside
        for (int k = 0; k <= cutoff; ++k) {
            double c = std::abs(series.amplitude) * std::pow(series.ratio, k);
            if (c == 0.0 && k > 0) break;
            if (k > n) row.tail_bound += c * shell(k) * 2 * sup_abs;
            if (k + reach <= n) continue;
            if (k - reach > n) {
                row.gap += c * shell(k) * oscillation((1u << s) - 1u);
                continue;
            }
            // shell k near the boundary: visit its sites
            Window cube = Window::box(std::vector<int>(static_cast<std::size_t>(dim), 2 * k + 1));
            for (std::size_t q = 0; q < cube.size(); ++q) {
                SiteIndex i = cube.site(q);
                for (int d = 0; d < dim; ++d) i[d] -= k;
                if (i.sup_norm() != k) continue;
                unsigned mask = 0;
                for (std::size_t b = 0; b < s; ++b)
                    if ((sup[b] + i).sup_norm() > n) mask |= 1u << b;
                if (mask) row.gap += c * oscillation(mask);
            }
        }
        rows.push_back(row);
    }
    return rows;
}

} // namespace kmslab
