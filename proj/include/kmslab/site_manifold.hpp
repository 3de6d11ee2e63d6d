/*
 * Single-site phase spaces: the unit sphere S^2 and the flat torus T^2,
 * each carrying its normalized Liouville measure, Poisson bracket,
 * uniform sampler and a product quadrature rule.
 *
 * Sphere points are unit 3-vectors; sphere functions are handled through
 * their ambient gradients and the bracket
 *     {f, g}(s) = sign * s . (grad f x grad g),
 * which only sees the tangential parts. Torus points are angle pairs
 * (q, p) in [0, 2 pi) with {f, g} = sign * (f_q g_p - f_p g_q).
 */
#pragma once

#include "errors.hpp"
#include "rng.hpp"

#include <array>
#include <cmath>
#include <memory>
#include <numbers>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace kmslab {

enum class ManifoldKind { Sphere2, Torus2 };

inline std::string_view to_string(ManifoldKind k) {
    return k == ManifoldKind::Sphere2 ? "sphere2" : "torus2";
}

inline ManifoldKind parse_manifold_kind(std::string_view name) {
    if (name == "sphere2") return ManifoldKind::Sphere2;
    if (name == "torus2") return ManifoldKind::Torus2;
    throw ConfigError("unknown manifold '" + std::string(name) + "' (expected sphere2 or torus2)", "manifold");
}

// Coordinates of one site. Sphere: (sx, sy, sz). Torus: (q, p, unused).
struct SitePoint {
    std::array<double, 3> x{};

    static SitePoint sphere(double sx, double sy, double sz) { return {{sx, sy, sz}}; }
    static SitePoint torus(double q, double p) { return {{wrap_angle(q), wrap_angle(p), 0.0}}; }

    static double wrap_angle(double a) {
        constexpr double two_pi = 2.0 * std::numbers::pi;
        double r = std::fmod(a, two_pi);
        if (r < 0) r += two_pi;
        if (r >= two_pi) r = 0.0;
        return r;
    }

    double operator[](std::size_t k) const { return x[k]; }
    bool operator==(const SitePoint&) const = default;
};

inline SitePoint north_pole() { return SitePoint::sphere(0, 0, 1); }
inline SitePoint south_pole() { return SitePoint::sphere(0, 0, -1); }

// Ambient derivatives of a function at one site: (d/dsx, d/dsy, d/dsz) or (d/dq, d/dp, 0).
using Gradient = std::array<double, 3>;

struct QuadratureNode {
    SitePoint point;
    double weight;
};

// Gauss-Legendre nodes and weights on [-1, 1], by Newton iteration on P_n.
inline std::vector<std::pair<double, double>> gauss_legendre(int n) {
    if (n < 1) throw ConfigError("quadrature order must be positive", "quadrature_order");
    std::vector<std::pair<double, double>> out(static_cast<std::size_t>(n));
    for (int i = 0; i < (n + 1) / 2; ++i) {
        double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
        double dp = 0;
        for (int it = 0; it < 100; ++it) {
            double p0 = 1.0, p1 = x;
            for (int k = 2; k <= n; ++k) {
                double pk = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
                p0 = p1;
                p1 = pk;
            }
            if (n == 1) { p1 = x; p0 = 1.0; }
            dp = n * (x * p1 - p0) / (x * x - 1.0);
            double dx = p1 / dp;
            x -= dx;
            if (std::abs(dx) < 1e-16) break;
        }
        double w = 2.0 / ((1.0 - x * x) * dp * dp);
        out[static_cast<std::size_t>(i)] = {-x, w};
        out[static_cast<std::size_t>(n - 1 - i)] = {x, w};
    }
    if (n % 2 == 1) out[static_cast<std::size_t>(n / 2)].first = 0.0;
    return out;
}

class SiteManifold {
public:
    static constexpr int kDefaultQuadratureOrder = 24;

    explicit SiteManifold(ManifoldKind kind = ManifoldKind::Sphere2,
                          int quadrature_order = kDefaultQuadratureOrder, int bracket_sign = +1)
        : kind_(kind), order_(quadrature_order), sign_(bracket_sign) {
        if (order_ < 1) throw ConfigError("quadrature_order must be a positive integer", "quadrature_order");
        if (sign_ != 1 && sign_ != -1) throw ConfigError("bracket sign must be +1 or -1");
        nodes_ = std::make_shared<const std::vector<QuadratureNode>>(build_nodes());
    }

    ManifoldKind kind() const { return kind_; }
    int quadrature_order() const { return order_; }
    int bracket_sign() const { return sign_; }

    // Same manifold and quadrature, opposite bracket orientation.
    SiteManifold with_flipped_bracket() const { return SiteManifold(kind_, order_, -sign_); }
    SiteManifold with_order(int order) const { return SiteManifold(kind_, order, sign_); }

    // Draw from the normalized Liouville measure. Sphere: u = cos(theta) uniform, azimuth uniform.
    SitePoint uniform_sample(RandomStream& rng) const {
        constexpr double two_pi = 2.0 * std::numbers::pi;
        if (kind_ == ManifoldKind::Sphere2) {
            double u = rng.uniform(-1.0, 1.0);
            double phi = rng.uniform(0.0, two_pi);
            double r = std::sqrt(std::max(0.0, 1.0 - u * u));
            return SitePoint::sphere(r * std::cos(phi), r * std::sin(phi), u);
        }
        return SitePoint::torus(rng.uniform(0.0, two_pi), rng.uniform(0.0, two_pi));
    }

    // Per-site Poisson bracket from the two gradients at `at`.
    double bracket(const Gradient& df, const Gradient& dg, const SitePoint& at) const {
        if (kind_ == ManifoldKind::Sphere2) {
            double cx = df[1] * dg[2] - df[2] * dg[1];
            double cy = df[2] * dg[0] - df[0] * dg[2];
            double cz = df[0] * dg[1] - df[1] * dg[0];
            return sign_ * (at[0] * cx + at[1] * cy + at[2] * cz);
        }
        return sign_ * (df[0] * dg[1] - df[1] * dg[0]);
    }

    // Ambient gradient with its normal component removed (identity on the torus).
    Gradient tangential(const Gradient& g, const SitePoint& at) const {
        if (kind_ != ManifoldKind::Sphere2) return {g[0], g[1], 0.0};
        double n = g[0] * at[0] + g[1] * at[1] + g[2] * at[2];
        return {g[0] - n * at[0], g[1] - n * at[1], g[2] - n * at[2]};
    }

    bool is_valid(const SitePoint& p, double tol = 1e-12) const {
        if (kind_ == ManifoldKind::Sphere2) {
            double n = std::sqrt(p[0] * p[0] + p[1] * p[1] + p[2] * p[2]);
            return std::abs(n - 1.0) <= tol;
        }
        constexpr double two_pi = 2.0 * std::numbers::pi;
        return p[0] >= 0 && p[0] < two_pi && p[1] >= 0 && p[1] < two_pi;
    }

    // Sphere: order Gauss-Legendre nodes in cos(theta) times 2*order azimuth nodes.
    // Torus: order x order equispaced nodes.
    const std::vector<QuadratureNode>& nodes() const { return *nodes_; }

    // sum_k w_k integrand(x_k), with sum_k w_k = 1.
    template <class Integrand>
    double integrate(Integrand&& integrand) const {
        double acc = 0;
        std::size_t k = 0;
        for (const auto& node : *nodes_) {
            double v = integrand(node.point);
            if (!std::isfinite(v)) {
                throw EvaluationError("non-finite integrand at quadrature node " + std::to_string(k),
                                      "(" + std::to_string(node.point[0]) + ", " + std::to_string(node.point[1]) +
                                          ", " + std::to_string(node.point[2]) + ")");
            }
            acc += node.weight * v;
            ++k;
        }
        return acc;
    }

    bool operator==(const SiteManifold& o) const {
        return kind_ == o.kind_ && order_ == o.order_ && sign_ == o.sign_;
    }

private:
    std::vector<QuadratureNode> build_nodes() const {
        constexpr double two_pi = 2.0 * std::numbers::pi;
        std::vector<QuadratureNode> out;
        if (kind_ == ManifoldKind::Sphere2) {
            auto gl = gauss_legendre(order_);
            const int n_phi = 2 * order_;
            out.reserve(gl.size() * static_cast<std::size_t>(n_phi));
            for (auto [u, w] : gl) {
                double r = std::sqrt(std::max(0.0, 1.0 - u * u));
                for (int j = 0; j < n_phi; ++j) {
                    double phi = two_pi * j / n_phi;
                    out.push_back({SitePoint::sphere(r * std::cos(phi), r * std::sin(phi), u), 0.5 * w / n_phi});
                }
            }
        } else {
            out.reserve(static_cast<std::size_t>(order_ * order_));
            double w = 1.0 / (static_cast<double>(order_) * order_);
            for (int i = 0; i < order_; ++i)
                for (int j = 0; j < order_; ++j)
                    out.push_back({SitePoint::torus(two_pi * i / order_, two_pi * j / order_), w});
        }
        return out;
    }

    ManifoldKind kind_;
    int order_;
    int sign_;
    std::shared_ptr<const std::vector<QuadratureNode>> nodes_;
};

} // namespace kmslab
