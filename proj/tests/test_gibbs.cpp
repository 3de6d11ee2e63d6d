#include "oracles.hpp"

#include <gtest/gtest.h>

using namespace kmslab;

namespace {

const auto S = ManifoldKind::Sphere2;
const auto T = ManifoldKind::Torus2;

Observable obs(const char* text, ManifoldKind k = S) { return Observable::parse(text, k, 1); }

Potential field(double h = 1.0) { return Potential(S, 1, {{{SiteIndex{0}}, obs("-sz(0)"), h}}, true); }

Potential bond(double j = 1.0) {
    return Potential(S, 1, {{{SiteIndex{0}, SiteIndex{1}}, obs("-(sx(0)*sx(1) + sy(0)*sy(1) + sz(0)*sz(1))"), j}},
                     false);
}

Potential chain(double j = 1.0) {
    return Potential(S, 1, {{{SiteIndex{0}, SiteIndex{1}}, obs("-(sx(0)*sx(1) + sy(0)*sy(1) + sz(0)*sz(1))"), j}},
                     true);
}

Configuration single_site(ManifoldKind k = S) {
    return Configuration::free(k, Window::box({1}), k == S ? north_pole() : SitePoint::torus(0, 0));
}

Configuration random_fixed(int lo, int n, std::uint64_t seed, int collar = 1) {
    std::mt19937_64 rng(seed);
    std::map<SiteIndex, SitePoint> values;
    return Configuration::fixed(S, Window(SiteIndex{lo}, {n, 1, 1}), collar, [&](const SiteIndex& s) {
        auto [it, fresh] = values.try_emplace(s, SitePoint{});
        if (fresh) it->second = oracle::random_sphere_point(rng);
        return it->second;
    });
}

GibbsKernel kernel(Potential phi, SiteSet lambda, double beta = 1.0, EngineKind e = EngineKind::Quadrature) {
    SiteManifold m(phi.kind());
    return GibbsKernel{std::move(phi), std::move(lambda), beta, e, {}, m};
}

McmcParams fast_mcmc(std::int64_t sweeps, int chains, std::uint64_t seed = 7) {
    McmcParams p;
    p.sweeps = sweeps;
    p.burn_in = 500;
    p.chains = chains;
    p.seed = seed;
    return p;
}

} // namespace

TEST(Quadrature, LangevinOracle) {
    auto eta = single_site();
    for (double beta : {0.25, 0.5, 1.0, 2.0, 5.0}) {
        auto k = kernel(field(), {SiteIndex{0}}, beta);
        auto e = gibbs_expectation(k, obs("sz(0)"), eta);
        EXPECT_NEAR(e.value, oracle::langevin(beta), 1e-12) << beta;
        EXPECT_EQ(e.kind, EstimateKind::QuadratureBound);
        EXPECT_LT(e.error, 1e-12);
        // sy^2: L(beta)/beta, against a one-dimensional Simpson oracle
        auto e2 = gibbs_expectation(k, obs("sy(0)^2"), eta);
        EXPECT_NEAR(e2.value, oracle::axial_average([](double u) { return (1 - u * u) / 2; }, beta), 1e-10);
        EXPECT_NEAR(e2.value, oracle::langevin(beta) / beta, 1e-12);
    }
}

TEST(Quadrature, LogPartitionFunction) {
    auto eta = single_site();
    for (double beta : {0.5, 1.0, 3.0}) {
        QuadratureEngine q(kernel(field(), {SiteIndex{0}}, beta), eta);
        EXPECT_NEAR(q.log_partition_function(eta), std::log(std::sinh(beta) / beta), 1e-12);
    }
}

TEST(Quadrature, BondOracle) {
    auto eta = Configuration::free(S, Window::box({2}), north_pole());
    auto k = kernel(bond(), {SiteIndex{0}, SiteIndex{1}});
    std::vector<Observable> fs{obs("sx(0)*sx(1) + sy(0)*sy(1) + sz(0)*sz(1)"), obs("sz(0)"), obs("1")};
    auto e = gibbs_expectations(k, fs, eta);
    EXPECT_NEAR(e[0].value, oracle::langevin(1.0), 1e-12);
    EXPECT_NEAR(e[1].value, 0.0, 1e-13);
    EXPECT_NEAR(e[2].value, 1.0, 1e-14);
}

TEST(Quadrature, TorusRotorOracle) {
    Potential rotor(T, 1, {{{SiteIndex{0}}, obs("-cos(p(0))", T), 1.0}}, true);
    auto eta = single_site(T);
    for (double beta : {0.5, 1.0, 2.0}) {
        auto k = kernel(rotor, {SiteIndex{0}}, beta);
        EXPECT_NEAR(gibbs_expectation(k, obs("cos(p(0))", T), eta).value, oracle::bessel_ratio(beta), 1e-12);
        EXPECT_NEAR(gibbs_expectation(k, obs("cos(q(0))", T), eta).value, 0.0, 1e-13);
    }
}

TEST(Kernel, ProperAndEmptyRegion) {
    auto eta = random_fixed(0, 3, 4);
    auto k = kernel(chain(0.8), {SiteIndex{1}});
    std::vector<Observable> fs{obs("1"), obs("sx(0)*sz(2)"), obs("sz(-1)")};
    auto e = gibbs_expectations(k, fs, eta);
    EXPECT_NEAR(e[0].value, 1.0, 1e-14);
    EXPECT_NEAR(e[1].value, evaluate(fs[1], eta), 1e-14);
    EXPECT_EQ(e[2].value, evaluate(fs[2], eta));
    auto empty = kernel(chain(), {});
    auto p = gibbs_expectation(empty, obs("sx(1)*sy(2)"), eta);
    EXPECT_EQ(p.value, evaluate(obs("sx(1)*sy(2)"), eta));
    EXPECT_EQ(p.error, 0.0);
}

TEST(Kernel, CompositionIdempotent) {
    auto eta = random_fixed(0, 2, 9);
    auto k = kernel(chain(1.2), {SiteIndex{0}});
    for (const char* f : {"sz(0)", "sx(0)*sy(1)", "exp(sx(0))"}) {
        auto c = kernel_compose_expectation(k, k, obs(f), eta);
        EXPECT_NEAR(c.difference.value, 0.0, 1e-12) << f;
    }
}

TEST(Kernel, CompatibilityNested) {
    auto eta = random_fixed(0, 2, 17);
    auto outer = kernel(chain(), {SiteIndex{0}, SiteIndex{1}});
    auto inner = kernel(chain(), {SiteIndex{0}});
    for (const auto& f : default_function_corpus(S, 1).functions) {
        auto c = kernel_compose_expectation(outer, inner, f, eta);
        EXPECT_NEAR(c.difference.value, 0.0, 1e-8) << f.to_string();
    }
    EXPECT_THROW(kernel_compose_expectation(inner, outer, obs("sz(0)"), eta), ConfigError);
    auto outside = obs("sx(-1)*sz(2)");
    auto c = kernel_compose_expectation(outer, inner, outside, eta);
    EXPECT_EQ(c.composed.value, evaluate(outside, eta));
    EXPECT_EQ(c.direct.value, evaluate(outside, eta));
}

TEST(Kernel, CostGuards) {
    auto eta = random_fixed(0, 4, 3);
    auto big = kernel(chain(), {SiteIndex{0}, SiteIndex{1}, SiteIndex{2}, SiteIndex{3}});
    EXPECT_THROW(gibbs_expectation(big, obs("sz(0)"), eta), CostGuardError);
    auto fine = kernel(chain(), {SiteIndex{0}, SiteIndex{1}, SiteIndex{2}});
    fine.manifold = SiteManifold(S, 100);
    EXPECT_THROW(QuadratureEngine(fine, eta), CostGuardError);
    auto outside = kernel(chain(), {SiteIndex{9}});
    EXPECT_THROW(QuadratureEngine(outside, eta), ConfigError);
}

TEST(Mcmc, FieldWithinFourSigma) {
    auto eta = single_site();
    for (auto proposal : {ProposalKind::UniformSite, ProposalKind::Cone}) {
        auto k = kernel(field(), {SiteIndex{0}}, 1.0, EngineKind::Mcmc);
        k.mcmc = fast_mcmc(40000, 4);
        k.mcmc.proposal = proposal;
        auto e = gibbs_expectation(k, obs("sz(0)"), eta);
        EXPECT_EQ(e.kind, EstimateKind::McStdErr);
        EXPECT_GT(e.error, 0.0);
        EXPECT_LT(e.error, 0.01);
        EXPECT_LE(std::abs(e.value - oracle::langevin(1.0)), 4 * e.error);
    }
}

TEST(Mcmc, TorusRotorWithinFourSigma) {
    Potential rotor(T, 1, {{{SiteIndex{0}}, obs("-cos(p(0))", T), 1.0}}, true);
    auto k = kernel(rotor, {SiteIndex{0}}, 1.0, EngineKind::Mcmc);
    k.mcmc = fast_mcmc(40000, 4);
    k.mcmc.proposal = ProposalKind::Cone;
    auto e = gibbs_expectation(k, obs("cos(p(0))", T), single_site(T));
    EXPECT_LE(std::abs(e.value - oracle::bessel_ratio(1.0)), 4 * e.error);
}

TEST(Mcmc, ZeroPotentialAcceptsEverything) {
    auto eta = Configuration::periodic(S, Window::box({5}), north_pole());
    auto k = kernel(Potential::zero(S, 1), eta.window_sites(), 1.0, EngineKind::Mcmc);
    k.mcmc = fast_mcmc(200, 2);
    auto r = run_mcmc(k, eta, 1, [](const Configuration& c, std::span<double> out) { out[0] = c.at(SiteIndex{2})[2]; });
    EXPECT_EQ(r.acceptance_rate, 1.0);
    EXPECT_EQ(r.samples_per_chain, 200);
    EXPECT_LE(std::abs(r.estimates[0].value), 4 * r.estimates[0].error);
}

TEST(Mcmc, DetailedBalance) {
    auto eta = random_fixed(0, 3, 5);
    for (double beta : {0.5, 1.0, 3.0}) {
        auto k = kernel(chain(1.5), eta.window_sites(), beta, EngineKind::Mcmc);
        EXPECT_LE(detailed_balance_audit(k, eta, 2000, 99), 1e-12);
        k.mcmc.proposal = ProposalKind::Cone;
        EXPECT_LE(detailed_balance_audit(k, eta, 2000, 100), 1e-12);
    }
    EXPECT_EQ(MetropolisChain::acceptance_probability(-1.0, 1.0), 1.0);
    EXPECT_EQ(MetropolisChain::acceptance_probability(2.0, 0.5), std::exp(-1.0));
}

TEST(Mcmc, NonFiniteEnergyRaisesSamplerError) {
    Potential bad(S, 1, {{{SiteIndex{0}}, obs("exp(exp(10*sz(0)))"), 1.0}}, true);
    auto k = kernel(bad, {SiteIndex{0}}, 1.0, EngineKind::Mcmc);
    k.mcmc = fast_mcmc(100, 1);
    try {
        gibbs_expectation(k, obs("sz(0)"), single_site());
        FAIL() << "expected SamplerError";
    } catch (const SamplerError& e) {
        EXPECT_NE(std::string(e.what()).find("configuration"), std::string::npos);
    }
}

TEST(Mcmc, DeterministicAcrossThreadCounts) {
    auto eta = Configuration::periodic(S, Window::box({6}), north_pole());
    auto k = kernel(chain(), eta.window_sites(), 1.0, EngineKind::Mcmc);
    k.mcmc = fast_mcmc(400, 4, 123);
    std::vector<Observable> fs{obs("sz(0)*sz(1)"), obs("sx(3)")};
    auto a = gibbs_expectations(k, fs, eta);
    k.mcmc.threads = 3;
    auto b = gibbs_expectations(k, fs, eta);
    for (std::size_t j = 0; j < fs.size(); ++j) {
        EXPECT_EQ(a[j].value, b[j].value);
        EXPECT_EQ(a[j].error, b[j].error);
    }
    k.mcmc.seed = 124;
    EXPECT_NE(gibbs_expectations(k, fs, eta)[0].value, a[0].value);
}

TEST(Mcmc, ParameterValidation) {
    McmcParams p;
    p.sweeps = 5;
    EXPECT_THROW(p.validate(), ConfigError);
    p = McmcParams{};
    p.chains = 0;
    EXPECT_THROW(p.validate(), ConfigError);
    EXPECT_THROW(parse_engine("gibbs"), ConfigError);
    EXPECT_THROW(parse_proposal("walk"), ConfigError);
}
