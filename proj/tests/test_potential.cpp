#include "oracles.hpp"

#include <gtest/gtest.h>

using namespace kmslab;

namespace {

const auto S = ManifoldKind::Sphere2;

Potential heisenberg1d(double j = 1.0) {
    auto e = Observable::parse("-(sx(0)*sx(1) + sy(0)*sy(1) + sz(0)*sz(1))", S, 1);
    return Potential(S, 1, {{{SiteIndex{0}, SiteIndex{1}}, e, j}}, true);
}

Potential field(double h = 1.0) {
    return Potential(S, 1, {{{SiteIndex{0}}, Observable::parse("-sz(0)", S, 1), h}}, true);
}

Configuration fixed_chain(int lo, int n, const std::function<SitePoint(const SiteIndex&)>& eta, int collar = 1) {
    return Configuration::fixed(S, Window(SiteIndex{lo}, {n, 1, 1}), collar, eta);
}

SitePoint alternating(const SiteIndex& s) { return s[0] % 2 == 0 ? north_pole() : south_pole(); }

} // namespace

TEST(Potential, Validation) {
    auto e = Observable::parse("sz(0)*sz(1)", S, 1);
    EXPECT_THROW(Potential(S, 1, {{{SiteIndex{0}}, e, 1.0}}, true), ConfigError);
    EXPECT_THROW(Potential(S, 1, {{{SiteIndex{0}, SiteIndex{1}}, e, NAN}}, true), ConfigError);
    EXPECT_EQ(heisenberg1d().range(), 1);
    EXPECT_EQ(field().range(), 0);
    EXPECT_EQ(Potential::zero(S, 2).range(), 0);
}

TEST(LocalHamiltonian, Examples) {
    auto all_north = fixed_chain(0, 1, [](const SiteIndex&) { return north_pole(); });
    EXPECT_EQ(local_hamiltonian(heisenberg1d(), {SiteIndex{0}}, all_north), -2.0);
    auto two = fixed_chain(0, 2, [](const SiteIndex&) { return north_pole(); });
    EXPECT_EQ(local_hamiltonian(field(), {SiteIndex{0}, SiteIndex{1}}, two), -2.0);
    auto alt = fixed_chain(0, 2, alternating);
    // bonds {-1,0}, {0,1}, {1,2}, summed by hand
    double brute = 0.0;
    for (int a = -1; a <= 1; ++a) {
        auto x = alternating(SiteIndex{a}), y = alternating(SiteIndex{a + 1});
        brute += -(x[0] * y[0] + x[1] * y[1] + x[2] * y[2]);
    }
    EXPECT_EQ(brute, 3.0);
    EXPECT_EQ(local_hamiltonian(heisenberg1d(), {SiteIndex{0}, SiteIndex{1}}, alt), brute);
}

TEST(LocalHamiltonian, MissingCollarAndPeriodicRange) {
    auto narrow = Configuration::fixed(S, Window::box({2}), 0, [](const SiteIndex&) { return north_pole(); });
    EXPECT_THROW(local_hamiltonian(heisenberg1d(), {SiteIndex{0}}, narrow), MissingSiteError);
    auto tiny = Configuration::periodic(S, Window::box({2}), north_pole());
    EXPECT_THROW(local_hamiltonian(heisenberg1d(), {SiteIndex{0}}, tiny), ConfigError);
    auto ring = Configuration::periodic(S, Window::box({3}), north_pole());
    EXPECT_EQ(local_hamiltonian(heisenberg1d(), {SiteIndex{0}}, ring), -2.0);
    EXPECT_EQ(local_hamiltonian(heisenberg1d(), ring.window_sites(), ring), -3.0);
    // free boundary: bonds leaving the window are absent
    auto open = Configuration::free(S, Window::box({3}), north_pole());
    EXPECT_EQ(local_hamiltonian(heisenberg1d(), open.window_sites(), open), -2.0);
}

TEST(LocalHamiltonian, AdditivityByEnumeration) {
    std::mt19937_64 rng(12);
    auto phi = heisenberg1d(0.7);
    for (int trial = 0; trial < 20; ++trial) {
        auto c = oracle::random_configuration(S, -1, 7, rng);
        SiteSet a{SiteIndex{0}, SiteIndex{1}}, b{SiteIndex{3}, SiteIndex{4}};
        SiteSet u = a;
        u.insert(u.end(), b.begin(), b.end());
        // bonds meeting both a and b are counted once in the union; none here, so plain sum
        double ha = local_hamiltonian(phi, a, c), hb = local_hamiltonian(phi, b, c);
        EXPECT_NEAR(local_hamiltonian(phi, u, c), ha + hb, 1e-14);
        // adjacent blocks share the bond {1,2}
        SiteSet a2{SiteIndex{1}}, b2{SiteIndex{2}};
        auto bond = [&](int x) {
            auto p = c.at(SiteIndex{x}), q = c.at(SiteIndex{x + 1});
            return -0.7 * (p[0] * q[0] + p[1] * q[1] + p[2] * q[2]);
        };
        EXPECT_NEAR(local_hamiltonian(phi, {SiteIndex{1}, SiteIndex{2}}, c),
                    local_hamiltonian(phi, a2, c) + local_hamiltonian(phi, b2, c) - bond(1), 1e-14);
        EXPECT_NEAR(local_hamiltonian(phi, {SiteIndex{1}, SiteIndex{2}}, c), bond(0) + bond(1) + bond(2), 1e-14);
    }
}

TEST(VectorField, Examples) {
    SiteManifold m(S);
    std::mt19937_64 rng(1);
    auto f = Observable::parse("sx(0)", S, 1);
    for (int trial = 0; trial < 10; ++trial) {
        auto c = fixed_chain(0, 1, [&](const SiteIndex&) { return oracle::random_sphere_point(rng); });
        EXPECT_NEAR(x_phi(field(), f, c, m), c.at(SiteIndex{0})[1], 1e-15);
        EXPECT_NEAR(evaluate(hamiltonian_vector_field(field(), f, c, m), c), c.at(SiteIndex{0})[1], 1e-15);
    }
    auto c = fixed_chain(0, 1, [](const SiteIndex&) { return north_pole(); });
    EXPECT_EQ(x_phi(field(), Observable::parse("4", S, 1), c, m), 0.0);
    EXPECT_EQ(x_phi(heisenberg1d(), Observable::parse("sz(0)", S, 1), c, m), 0.0);
}

TEST(VectorField, EnlargementInvarianceAndGauge) {
    SiteManifold m(S);
    std::mt19937_64 rng(44);
    auto phi = heisenberg1d(1.3);
    auto gauged = phi.with_constant_added(0, 2.5);
    const char* texts[] = {"sz(0)", "sx(0)*sy(1)", "exp(sx(1))*sz(2)", "cos(sy(0) - sz(1))"};
    for (int trial = 0; trial < 12; ++trial) {
        auto f = Observable::parse(texts[trial % 4], S, 1);
        auto c = fixed_chain(-2, 7, [&](const SiteIndex&) { return oracle::random_sphere_point(rng); });
        SiteSet small = f.support(), mid = small, big;
        mid.push_back(SiteIndex{3});
        normalize(mid);
        for (int k = -2; k <= 4; ++k) big.push_back(SiteIndex{k});
        double a = x_phi(phi, f, c, m, &small), b = x_phi(phi, f, c, m, &mid), d = x_phi(phi, f, c, m, &big);
        EXPECT_EQ(a, b);
        EXPECT_EQ(a, d);
        EXPECT_EQ(x_phi(gauged, f, c, m), a);
        double h = local_hamiltonian(phi, {SiteIndex{0}}, c), hg = local_hamiltonian(gauged, {SiteIndex{0}}, c);
        // two bonds meet site 0, each shifted by the constant
        EXPECT_NEAR(hg - h, 2 * 2.5, 1e-13);
        EXPECT_NEAR(local_hamiltonian(gauged, {SiteIndex{4}}, c) - local_hamiltonian(phi, {SiteIndex{4}}, c), 2 * 2.5,
                    1e-13);
    }
}

TEST(Potential, PeriodicTranslationInvariance) {
    auto e1 = Observable::parse("-(sx(0,0)*sx(1,0) + sy(0,0)*sy(1,0) + sz(0,0)*sz(1,0))", S, 2);
    auto e2 = Observable::parse("-(sx(0,0)*sx(0,1) + sy(0,0)*sy(0,1) + sz(0,0)*sz(0,1)) + 0.3*sz(0,0)^3", S, 2);
    Potential phi(S, 2, {{{SiteIndex{0, 0}, SiteIndex{1, 0}}, e1, 1.0}, {{SiteIndex{0, 0}, SiteIndex{0, 1}}, e2, 0.5}},
                  true);
    std::mt19937_64 rng(6);
    Window w = Window::box({4, 5});
    Configuration c = Configuration::periodic(S, w, north_pole());
    for (const auto& s : w.sites()) c.set(s, oracle::random_sphere_point(rng));
    double h = local_hamiltonian(phi, w.sites(), c);
    for (int dx = 0; dx < 4; ++dx)
        for (int dy = 0; dy < 5; ++dy) {
            Configuration shifted = c;
            for (const auto& s : w.sites()) shifted.set(s, c.at(w.wrap(s + SiteIndex{dx, dy})));
            // summation order changes with the shift; rounding only
            EXPECT_NEAR(local_hamiltonian(phi, w.sites(), shifted), h, 1e-12);
        }
    // brute force: every bond of the torus once
    double brute = 0.0;
    for (const auto& s : w.sites()) {
        auto p = c.at(s), q = c.at(w.wrap(s + SiteIndex{1, 0})), r = c.at(w.wrap(s + SiteIndex{0, 1}));
        brute += -(p[0] * q[0] + p[1] * q[1] + p[2] * q[2]);
        brute += 0.5 * (-(p[0] * r[0] + p[1] * r[1] + p[2] * r[2]) + 0.3 * p[2] * p[2] * p[2]);
    }
    EXPECT_NEAR(h, brute, 1e-12);
}

TEST(C1Report, Examples) {
    SiteManifold m(S);
    auto r = c1_norm_report(field(), SiteIndex{0}, m);
    ASSERT_EQ(r.terms.size(), 1u);
    EXPECT_NEAR(r.terms[0].sup_value, 1.0, 1e-12);
    EXPECT_NEAR(r.terms[0].sup_differential, 1.0, 1e-12);
    EXPECT_NEAR(r.total, 2.0, 1e-12);
    EXPECT_TRUE(r.lower_bound);
    EXPECT_EQ(c1_norm_report(Potential::zero(S, 1), SiteIndex{0}, m).total, 0.0);
    // -s_i.s_j: sup |.| = 1; the ambient differential (-s_j, -s_i) has norm sqrt(2)
    auto b = c1_norm_report(heisenberg1d(), SiteIndex{0}, m);
    ASSERT_EQ(b.terms.size(), 2u);
    for (const auto& t : b.terms) {
        EXPECT_LE(t.sup_value, 1.0 + 1e-12);
        EXPECT_GT(t.sup_value, 0.99);
        EXPECT_NEAR(t.sup_differential, std::sqrt(2.0), 1e-12);
    }
    EXPECT_NEAR(b.total, 2 * (b.terms[0].sup_value + std::sqrt(2.0)), 1e-12);
}
