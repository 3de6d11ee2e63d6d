// Acceptance gate: one line per criterion, non-zero exit if any fails.
#include "oracles.hpp"

#include <chrono>
#include <cstdio>
#include <sstream>

using namespace kmslab;

namespace {

const auto S = ManifoldKind::Sphere2;

struct Outcome {
    bool pass;
    std::string detail;
};

int failures = 0;

void criterion(int id, const char* title, double budget_sec, const std::function<Outcome()>& body) {
    auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
        o = body();
    } catch (const std::exception& e) {
        o = {false, std::string("exception: ") + e.what()};
    }
    double sec = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    bool ok = o.pass && sec < budget_sec;
    if (o.pass && !ok) o.detail += "; over the time budget";
    failures += !ok;
    std::printf("[%s] AC-%d %s: %s (%.2f s, budget %.0f s)\n", ok ? "PASS" : "FAIL", id, title, o.detail.c_str(), sec,
                budget_sec);
    std::fflush(stdout);
}

std::string fmt(const char* f, double a, double b = 0, double c = 0) {
    char buf[256];
    std::snprintf(buf, sizeof buf, f, a, b, c);
    return buf;
}

Observable obs(const std::string& text, int dim = 1) { return Observable::parse(text, S, dim); }

GibbsKernel kernel(const std::string& model, SiteSet lambda, double beta = 1.0, EngineKind e = EngineKind::Quadrature) {
    auto m = bundled_model(model);
    SiteManifold manifold(m.phi.kind());
    return GibbsKernel{m.phi, std::move(lambda), beta, e, {}, manifold};
}

Configuration fixed_window(int n, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::map<SiteIndex, SitePoint> v;
    return Configuration::fixed(S, Window::box({n}), 1, [&](const SiteIndex& s) {
        auto [it, fresh] = v.try_emplace(s);
        if (fresh) it->second = oracle::random_sphere_point(rng);
        return it->second;
    });
}

SiteSet ring(int n) { return Window::box({n}).sites(); }

const double kL1 = oracle::langevin(1.0);

std::string random_polynomial(std::mt19937_64& rng) {
    std::uniform_real_distribution<double> coef(-1.0, 1.0);
    std::uniform_int_distribution<int> pick(0, 5), len(1, 3);
    const char* syms[] = {"sx(0)", "sy(0)", "sz(0)", "sx(1)", "sy(1)", "sz(1)"};
    std::ostringstream os;
    os.precision(17);
    os << coef(rng);
    for (int t = 0; t < 5; ++t) {
        os << " + " << coef(rng);
        for (int k = len(rng); k > 0; --k) os << "*" << syms[pick(rng)];
    }
    return os.str();
}

} // namespace

int main() {
    criterion(1, "Langevin oracle, quadrature", 1, [] {
        auto e = gibbs_expectation(kernel("field", {SiteIndex{0}}), obs("sz(0)"), fixed_window(1, 1));
        double err = std::abs(e.value - kL1);
        return Outcome{err <= 1e-8, fmt("<sz> = %.10f, |err| = %.1e", e.value, err)};
    });

    criterion(2, "two-site bond oracle", 10, [] {
        auto eta = Configuration::free(S, Window::box({2}), north_pole());
        auto e = gibbs_expectation(kernel("heisenberg-bond", ring(2)), obs("sx(0)*sx(1) + sy(0)*sy(1) + sz(0)*sz(1)"), eta);
        double err = std::abs(e.value - kL1);
        return Outcome{err <= 1e-8, fmt("<s0.s1> = %.10f, |err| = %.1e", e.value, err)};
    });

    criterion(3, "KMS residual, quadrature regime", 60, [] {
        auto a = prop41_suite(kernel("field", {SiteIndex{0}}), fixed_window(1, 2), detail::single_site_pair_corpus(S, 1));
        auto b = prop41_suite(kernel("heisenberg1d", ring(2)), fixed_window(2, 3), default_pair_corpus(S, 1));
        bool ok = a.verdict == Verdict::Pass && b.verdict == Verdict::Pass && a.pairs.size() >= 10 &&
                  b.pairs.size() >= 10 && std::max(a.max_abs_residual(), b.max_abs_residual()) <= 1e-8;
        return Outcome{ok, fmt("field max %.1e over %.0f pairs; bond max %.1e over 10 pairs", a.max_abs_residual(),
                               static_cast<double>(a.pairs.size()), b.max_abs_residual())};
    });

    const auto chain_eta = Configuration::periodic(S, Window::box({16}), north_pole());
    auto chain_state = [&](double beta) {
        auto k = kernel("heisenberg1d", ring(16), beta, EngineKind::Mcmc);
        k.mcmc.sweeps = 200000;
        k.mcmc.burn_in = 2000;
        k.mcmc.chains = 2;
        k.mcmc.seed = 2024;
        return k;
    };

    criterion(4, "KMS residual, MCMC regime", 300, [&] {
        auto k = chain_state(1.0);
        auto r = prop41_suite(k, chain_eta, default_pair_corpus(S, 1));
        std::string nn = "(";
        for (int i = 0; i < 16; ++i) {
            int j = (i + 1) % 16;
            auto s = [](const char* c, int x) { return std::string(c) + "(" + std::to_string(x) + ")"; };
            nn += (i ? " + " : "") + s("sx", i) + "*" + s("sx", j) + " + " + s("sy", i) + "*" + s("sy", j) + " + " +
                  s("sz", i) + "*" + s("sz", j);
        }
        nn += ")*0.0625";
        auto c = gibbs_expectation(k, obs(nn), chain_eta);
        double zc = (c.value - kL1) / c.error;
        bool ok = r.pairs.size() == 10 && r.max_abs_z() <= 4 && std::abs(zc) <= 4;
        return Outcome{ok, fmt("max |z| = %.2f over 10 pairs; <s_i.s_i+1> = %.5f (z = %.2f vs L(1))", r.max_abs_z(),
                               c.value, zc)};
    });

    criterion(5, "negative control at beta = 0.5", 300, [&] {
        auto r = prop41_suite(chain_state(0.5), chain_eta, default_pair_corpus(S, 1));
        auto k = kernel("field", {SiteIndex{0}}, 0.5, EngineKind::Mcmc);
        k.mcmc.sweeps = 200000;
        k.mcmc.chains = 2;
        auto e = kms_residual(k, obs("sx(0)"), obs("sy(0)"), fixed_window(1, 4));
        double expected = oracle::langevin(0.5) * (1 - 1 / 0.5);
        double z = (e.value - expected) / e.error;
        bool ok = r.max_abs_z() >= 5 && std::abs(z) <= 4;
        return Outcome{ok, fmt("chain max |z| = %.1f; single site %.5f vs %.7f", r.max_abs_z(), e.value, expected) +
                               fmt(" (z = %.2f)", z)};
    });

    criterion(6, "kernel properness and compatibility", 60, [] {
        auto eta = fixed_window(2, 5);
        auto k = kernel("heisenberg1d", {SiteIndex{0}});
        std::vector<Observable> outside{obs("1"), obs("sz(1)"), obs("sx(-1)*sy(2)"), obs("exp(sz(1))")};
        auto e = gibbs_expectations(k, outside, eta);
        double proper = 0.0;
        for (std::size_t j = 0; j < outside.size(); ++j)
            proper = std::max(proper, std::abs(e[j].value - evaluate(outside[j], eta)));
        auto compat = compatibility_suite(kernel("heisenberg1d", ring(2)), k, eta, default_function_corpus(S, 1));
        bool ok = proper <= 1e-14 && compat.pairs.size() == 10 && compat.max_abs_residual() <= 1e-8;
        return Outcome{ok, fmt("properness %.1e; compatibility max %.1e over 10 functions", proper,
                               compat.max_abs_residual())};
    });

    criterion(7, "DLR self-consistency, 8x8 periodic", 600, [] {
        auto eta = Configuration::periodic(S, Window::box({8, 8}), north_pole());
        auto k = kernel("heisenberg2d", eta.window_sites(), 1.0, EngineKind::Mcmc);
        k.mcmc.sweeps = 20000;
        k.mcmc.burn_in = 1000;
        k.mcmc.chains = 2;
        Corpus c;
        for (const char* f : {"sz(3,3)", "sx(3,3)", "sz(3,3)^2", "sx(3,3)*sx(4,3) + sy(3,3)*sy(4,3) + sz(3,3)*sz(4,3)",
                              "sx(3,3)*sy(3,4)", "exp(sz(3,3))"})
            c.functions.push_back(obs(f, 2));
        auto r = dlr_invariance_suite(k, eta, {{SiteIndex{3, 3}}}, c);
        return Outcome{r.verdict == Verdict::Pass && r.pairs.size() == 6 && r.max_abs_z() <= 4,
                       fmt("max |z| = %.2f over 6 observables", r.max_abs_z())};
    });

    criterion(8, "tilted functional", 60, [] {
        double worst_bracket = 0.0, worst_moment = 0.0;
        struct Case {
            const char* model;
            SiteSet lambda;
            Configuration eta;
            Corpus corpus;
        };
        std::vector<Case> cases{
            {"field", {SiteIndex{0}}, fixed_window(1, 6), detail::single_site_pair_corpus(S, 1)},
            {"heisenberg-bond", ring(2), Configuration::free(S, Window::box({2}), north_pole()), default_pair_corpus(S, 1)}};
        for (auto& cs : cases) {
            auto k = kernel(cs.model, cs.lambda);
            auto r = tilted_annihilation_suite(k, cs.eta, cs.corpus);
            worst_bracket = std::max(worst_bracket, r.max_abs_residual());
            QuadratureEngine q(k, cs.eta);
            std::vector<Observable> m{obs("sz(0)"), obs("sz(0)^2")};
            auto t = q.tilted(cs.eta, m);
            worst_moment = std::max({worst_moment, std::abs(t.psi_hat[0]), std::abs(t.psi_hat[1] - 1.0 / 3.0)});
        }
        return Outcome{worst_bracket <= 1e-8 && worst_moment <= 1e-10,
                       fmt("bracket max %.1e; moment deviation max %.1e", worst_bracket, worst_moment)};
    });

    criterion(9, "algebraic layer", 60, [] {
        std::mt19937_64 rng(77);
        SiteManifold m(S);
        double anti = 0, leib = 0, jac = 0;
        for (int trial = 0; trial < 50; ++trial) {
            auto f = obs(random_polynomial(rng)), g = obs(random_polynomial(rng)), h = obs(random_polynomial(rng));
            auto c = oracle::random_configuration(S, 0, 2, rng);
            double fg = product_bracket(f, g, c, m);
            anti = std::max(anti, std::abs(fg + product_bracket(g, f, c, m)));
            double lhs = product_bracket(f * h, g, c, m);
            double rhs = evaluate(f, c) * product_bracket(h, g, c, m) + evaluate(h, c) * fg;
            leib = std::max(leib, std::abs(lhs - rhs) / std::max(1.0, std::abs(lhs)));
            double a = product_bracket(poisson_bracket(f, g, m), h, c, m);
            double b = product_bracket(poisson_bracket(f, h, m), g, c, m);
            double d = product_bracket(f, poisson_bracket(g, h, m), c, m);
            jac = std::max(jac, std::abs(a - b - d) / std::max({1.0, std::abs(a), std::abs(b), std::abs(d)}));
        }
        const std::vector<std::string> exprs{
            "sz(0)", "sx(0)*sy(0)", "sx(0)*sx(1) + sy(0)*sy(1) + sz(0)*sz(1)", "sz(0)^3 - 2*sx(0)*sy(1)",
            "exp(sz(0))", "cos(sx(0) + sy(1))", "sin(sx(0)*sz(1))^2", "exp(-sx(0)^2) * sy(1)", "(sx(0) - sy(0))^4",
            "sz(0)*sz(1)*sz(2)", "cos(sz(0))*sin(sx(1)) + exp(sy(2))", "3.5*sx(1)^5 - sz(0)",
            "exp(cos(sx(0)*sy(0)))", "sin(sz(0) - 2*sz(1)) * sx(2)", "(sx(0) + 2)^-1",
            "sy(0)*exp(sx(1)*sz(2)) - cos(sy(1))^3", "sin(sx(0))*cos(sy(0))*exp(sz(0))", "sy(0)*sx(0)^2 - sz(1)",
            "sx(2)^2*sy(1) + sz(0)^2", "exp(sx(0)+sy(1)+sz(2))"};
        double fd_err = 0.0;
        for (const auto& text : exprs) {
            auto f = obs(text);
            auto c = oracle::random_configuration(S, 0, 3, rng);
            for (const auto& i : f.support()) {
                auto s = c.at(i);
                auto grad = grad_site(f, c, i);
                // random unit tangent
                auto r = oracle::random_sphere_point(rng);
                double dot = r[0] * s[0] + r[1] * s[1] + r[2] * s[2];
                std::array<double, 3> v{r[0] - dot * s[0], r[1] - dot * s[1], r[2] - dot * s[2]};
                double nv = std::hypot(v[0], v[1], v[2]);
                for (auto& x : v) x /= nv;
                auto at = [&](double t) {
                    auto cc = c;
                    cc.set(i, SitePoint::sphere(std::cos(t) * s[0] + std::sin(t) * v[0],
                                                std::cos(t) * s[1] + std::sin(t) * v[1],
                                                std::cos(t) * s[2] + std::sin(t) * v[2]));
                    return evaluate(f, cc);
                };
                const double hstep = 1e-5;
                double fd = (at(hstep) - at(-hstep)) / (2 * hstep);
                double ad = grad[0] * v[0] + grad[1] * v[1] + grad[2] * v[2];
                fd_err = std::max(fd_err, std::abs(ad - fd) / std::max(1.0, std::abs(ad)));
            }
        }
        bool ok = anti <= 1e-12 && leib <= 1e-10 && jac <= 1e-9 && fd_err <= 1e-6 && exprs.size() >= 20;
        return Outcome{ok, fmt("antisymmetry %.1e, Leibniz %.1e, Jacobi %.1e", anti, leib, jac) +
                               fmt("; AD vs FD %.1e over %.0f expressions", fd_err, static_cast<double>(exprs.size()))};
    });

    criterion(10, "Liouville uniqueness direction", 60, [] {
        auto eta = Configuration::free(S, Window::box({2}), north_pole());
        auto k = kernel("liouville", ring(2));
        double worst = 0.0;
        for (const auto& [f, g] : default_pair_corpus(S, 1).pairs)
            worst = std::max(worst, std::abs(gibbs_expectation(k, poisson_bracket(f, g, k.manifold), eta).value));
        auto field = kernel("field", {SiteIndex{0}});
        double v = gibbs_expectation(field, poisson_bracket(obs("sx(0)"), obs("sy(0)"), field.manifold), fixed_window(1, 7))
                       .value;
        return Outcome{worst <= 1e-10 && std::abs(v) >= 1e-3,
                       fmt("zero potential max %.1e; field <{sx,sy}> = %.6f", worst, v)};
    });

    criterion(11, "reproducibility and detailed balance", 120, [] {
        RunConfig c;
        c.suite = "kms";
        c.model = "heisenberg1d";
        c.window = "8";
        c.boundary = BoundaryKind::Periodic;
        c.engine = EngineKind::Mcmc;
        c.mcmc.sweeps = 2000;
        c.mcmc.chains = 2;
        auto a = without_timing(run_experiment(c).report).dump();
        auto b = without_timing(run_experiment(c).report).dump();
        c.threads = 2;
        auto d = without_timing(run_experiment(c).report).dump();
        auto eta = Configuration::periodic(S, Window::box({8}), north_pole());
        double audit = 0.0;
        for (auto p : {ProposalKind::UniformSite, ProposalKind::Cone}) {
            auto k = kernel("heisenberg1d", ring(8), 1.0, EngineKind::Mcmc);
            k.mcmc.proposal = p;
            audit = std::max(audit, detailed_balance_audit(k, eta, 10000, 31));
        }
        bool same = a == b && a == d;
        return Outcome{same && audit <= 1e-12,
                       std::string(same ? "reports identical" : "reports differ") + fmt("; audit max %.1e", audit)};
    });

    std::printf("%d of 11 criteria failed\n", failures);
    return failures ? 1 : 0;
}
