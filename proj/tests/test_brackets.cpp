#include "oracles.hpp"

#include <gtest/gtest.h>

#include <sstream>

using namespace kmslab;

namespace {

const auto S = ManifoldKind::Sphere2;
const auto T = ManifoldKind::Torus2;

// Random polynomial of total degree <= deg in the coordinates of sites 0 and 1.
std::string random_polynomial(std::mt19937_64& rng, int deg, ManifoldKind kind) {
    std::uniform_real_distribution<double> coef(-1.0, 1.0);
    std::uniform_int_distribution<int> pick(0, kind == S ? 5 : 3);
    std::uniform_int_distribution<int> len(0, deg);
    const char* sphere_syms[] = {"sx(0)", "sy(0)", "sz(0)", "sx(1)", "sy(1)", "sz(1)"};
    const char* torus_syms[] = {"cos(q(0))", "sin(p(0))", "cos(q(1) - p(1))", "sin(q(0) + q(1))"};
    std::ostringstream os;
    os.precision(17);
    os << coef(rng);
    for (int term = 0; term < 5; ++term) {
        os << " + " << coef(rng);
        int n = std::max(1, len(rng));
        for (int k = 0; k < n; ++k) os << "*" << (kind == S ? sphere_syms[pick(rng)] : torus_syms[pick(rng)]);
    }
    return os.str();
}

double bracket_at(const Observable& f, const Observable& g, const Configuration& c, const SiteManifold& m) {
    return product_bracket(f, g, c, m);
}

} // namespace

TEST(Bracket, ProductExamples) {
    SiteManifold m(S);
    Configuration c(S, Window::box({2}), BoundaryKind::Free, north_pole());
    auto p = [](const char* t) { return Observable::parse(t, S, 1); };
    EXPECT_EQ(bracket_at(p("sx(0)"), p("sy(0)"), c, m), 1.0);
    EXPECT_EQ(bracket_at(p("sx(0)"), p("sy(1)"), c, m), 0.0);
    // brute force: two site brackets written out by hand
    auto f = p("sx(0)*sx(1)"), g = p("sy(0)*sy(1)");
    double brute = 0.0;
    for (int i = 0; i < 2; ++i) {
        int o = 1 - i;
        auto so = c.at(SiteIndex{o});
        std::array<double, 3> df{so[0], 0, 0}, dg{0, so[1], 0};
        auto si = c.at(SiteIndex{i});
        brute += oracle::sphere_bracket({si[0], si[1], si[2]}, df, dg);
    }
    EXPECT_EQ(bracket_at(f, g, c, m), brute);
    EXPECT_EQ(brute, 0.0);
    EXPECT_EQ(bracket_at(p("3.0"), p("sz(0)"), c, m), 0.0);
}

TEST(Bracket, SymbolicMatchesNumeric) {
    std::mt19937_64 rng(4);
    for (auto kind : {S, T}) {
        SiteManifold m(kind);
        for (int trial = 0; trial < 30; ++trial) {
            auto f = Observable::parse(random_polynomial(rng, 3, kind), kind, 1);
            auto g = Observable::parse(random_polynomial(rng, 3, kind), kind, 1);
            auto c = oracle::random_configuration(kind, 0, 2, rng);
            double num = bracket_at(f, g, c, m);
            double sym = evaluate(poisson_bracket(f, g, m), c);
            EXPECT_NEAR(num, sym, 1e-12 * std::max(1.0, std::abs(num)));
        }
    }
}

TEST(Bracket, AntisymmetryBilinearityLeibniz) {
    std::mt19937_64 rng(21);
    for (auto kind : {S, T}) {
        SiteManifold m(kind);
        for (int trial = 0; trial < 50; ++trial) {
            auto f = Observable::parse(random_polynomial(rng, 3, kind), kind, 1);
            auto g = Observable::parse(random_polynomial(rng, 3, kind), kind, 1);
            auto h = Observable::parse(random_polynomial(rng, 3, kind), kind, 1);
            auto c = oracle::random_configuration(kind, 0, 2, rng);
            double fg = bracket_at(f, g, c, m), gf = bracket_at(g, f, c, m);
            EXPECT_NEAR(fg, -gf, 1e-12);
            // site-level antisymmetry too
            for (int i = 0; i < 2; ++i)
                EXPECT_NEAR(site_bracket(m, f, g, c, SiteIndex{i}), -site_bracket(m, g, f, c, SiteIndex{i}), 1e-12);
            double lin = bracket_at(f.scaled(2.0) + h, g, c, m);
            EXPECT_NEAR(lin, 2.0 * fg + bracket_at(h, g, c, m), 1e-11 * std::max(1.0, std::abs(lin)));
            double lhs = bracket_at(f * h, g, c, m);
            double rhs = evaluate(f, c) * bracket_at(h, g, c, m) + evaluate(h, c) * bracket_at(f, g, c, m);
            EXPECT_NEAR(lhs, rhs, 1e-10 * std::max(1.0, std::abs(lhs)));
        }
    }
}

TEST(Bracket, JacobiIdentity) {
    std::mt19937_64 rng(33);
    for (auto kind : {S, T}) {
        SiteManifold m(kind);
        for (int trial = 0; trial < 25; ++trial) {
            auto f = Observable::parse(random_polynomial(rng, 3, kind), kind, 1);
            auto g = Observable::parse(random_polynomial(rng, 3, kind), kind, 1);
            auto h = Observable::parse(random_polynomial(rng, 3, kind), kind, 1);
            auto c = oracle::random_configuration(kind, 0, 2, rng);
            // {{f,g},h} - {{f,h},g} - {f,{g,h}} = 0
            double a = bracket_at(poisson_bracket(f, g, m), h, c, m);
            double b = bracket_at(poisson_bracket(f, h, m), g, c, m);
            double d = bracket_at(f, poisson_bracket(g, h, m), c, m);
            EXPECT_NEAR(a - b - d, 0.0, 1e-9 * std::max({1.0, std::abs(a), std::abs(b), std::abs(d)}));
        }
    }
}

TEST(Bracket, LiouvilleAnnihilation) {
    std::mt19937_64 rng(55);
    for (auto kind : {S, T}) {
        SiteManifold m(kind);
        for (int trial = 0; trial < 20; ++trial) {
            auto f = Observable::parse(random_polynomial(rng, 4, kind), kind, 1);
            auto g = Observable::parse(random_polynomial(rng, 4, kind), kind, 1);
            // single-site restriction: integrate the site-0 bracket with site 1 frozen
            auto c = oracle::random_configuration(kind, 0, 2, rng);
            double v = m.integrate([&](const SitePoint& p) {
                c.set(SiteIndex{0}, p);
                return site_bracket(m, f, g, c, SiteIndex{0});
            });
            EXPECT_NEAR(v, 0.0, 1e-10);
        }
    }
}

TEST(Bracket, EnlargementInvariance) {
    std::mt19937_64 rng(71);
    SiteManifold m(S);
    for (int trial = 0; trial < 20; ++trial) {
        auto f = Observable::parse(random_polynomial(rng, 3, S), S, 1);
        auto g = Observable::parse(random_polynomial(rng, 3, S), S, 1);
        auto small = oracle::random_configuration(S, 0, 2, rng);
        auto large = oracle::random_configuration(S, -3, 9, rng);
        for (int i = 0; i < 2; ++i) large.set(SiteIndex{i}, small.at(SiteIndex{i}));
        EXPECT_EQ(bracket_at(f, g, small, m), bracket_at(f, g, large, m));
    }
}

TEST(Bracket, FlippedSignNegates) {
    std::mt19937_64 rng(8);
    SiteManifold m(S);
    auto flipped = m.with_flipped_bracket();
    for (int trial = 0; trial < 10; ++trial) {
        auto f = Observable::parse(random_polynomial(rng, 3, S), S, 1);
        auto g = Observable::parse(random_polynomial(rng, 3, S), S, 1);
        auto c = oracle::random_configuration(S, 0, 2, rng);
        EXPECT_EQ(bracket_at(f, g, c, m), -bracket_at(f, g, c, flipped));
    }
}
