/*
 * Configuration: spin values on a finite window plus a boundary condition.
 *
 * Boundary semantics:
 *   Periodic  site coordinates wrap modulo the window lengths.
 *   Fixed     values outside the window come from an explicit collar (eta);
 *             any other outside site is missing.
 *   Free      nothing exists outside the window. Observables reaching outside
 *             cannot be evaluated; potential terms reaching outside are dropped.
 *
 * Values are kept in one flat storage vector (window first, row-major, then
 * the collar), so observables can be bound once to slot indices and
 * re-evaluated cheaply while samplers or quadrature mutate the storage.
 */
#pragma once

#include "observable.hpp"

#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace kmslab {

enum class BoundaryKind { Free, Periodic, Fixed };

inline std::string_view to_string(BoundaryKind b) {
    switch (b) {
    case BoundaryKind::Free: return "free";
    case BoundaryKind::Periodic: return "periodic";
    case BoundaryKind::Fixed: return "fixed";
    }
    return "?";
}

inline BoundaryKind parse_boundary(std::string_view s) {
    if (s == "free") return BoundaryKind::Free;
    if (s == "periodic") return BoundaryKind::Periodic;
    if (s == "fixed") return BoundaryKind::Fixed;
    throw ConfigError("unknown boundary '" + std::string(s) + "' (expected free, periodic or fixed)", "boundary");
}

class Configuration {
public:
    Configuration(ManifoldKind kind, Window window, BoundaryKind boundary, SitePoint fill)
        : kind_(kind), window_(window), boundary_(boundary), storage_(window.size(), fill) {}

    static Configuration free(ManifoldKind kind, Window window, SitePoint fill) {
        return Configuration(kind, window, BoundaryKind::Free, fill);
    }
    static Configuration periodic(ManifoldKind kind, Window window, SitePoint fill) {
        return Configuration(kind, window, BoundaryKind::Periodic, fill);
    }

    // Window and a collar of the given width, every value taken from eta(site).
    template <class Eta>
    static Configuration fixed(ManifoldKind kind, Window window, int collar_width, Eta&& eta) {
        Configuration c(kind, window, BoundaryKind::Fixed, SitePoint{});
        for (std::size_t i = 0; i < window.size(); ++i) c.storage_[i] = eta(window.site(i));
        const int dim = window.dim();
        std::array<int, kMaxDimension> len{1, 1, 1};
        SiteIndex lo = window.lo();
        for (int k = 0; k < dim; ++k) {
            len[static_cast<std::size_t>(k)] = window.length(k) + 2 * collar_width;
            lo[k] -= collar_width;
        }
        Window outer(lo, len);
        for (std::size_t i = 0; i < outer.size(); ++i) {
            SiteIndex s = outer.site(i);
            if (!window.contains(s)) c.add_collar_site(s, eta(s));
        }
        return c;
    }

    void add_collar_site(const SiteIndex& s, const SitePoint& v) {
        if (boundary_ != BoundaryKind::Fixed) throw ConfigError("only fixed boundaries carry a collar", "boundary");
        if (window_.contains(s)) throw ConfigError("collar site " + s.to_string() + " lies inside the window");
        auto [it, inserted] = collar_.emplace(s, storage_.size());
        if (inserted) storage_.push_back(v);
        else storage_[it->second] = v;
    }

    ManifoldKind kind() const { return kind_; }
    const Window& window() const { return window_; }
    BoundaryKind boundary() const { return boundary_; }
    int dimension() const { return window_.dim(); }

    // Periodic image for periodic windows, identity otherwise.
    SiteIndex canonical(const SiteIndex& s) const {
        return boundary_ == BoundaryKind::Periodic ? window_.wrap(s) : s;
    }

    std::optional<std::size_t> slot(const SiteIndex& s) const {
        if (s.dim != window_.dim()) return std::nullopt;
        if (window_.contains(s)) return window_.flat(s);
        if (boundary_ == BoundaryKind::Periodic) return window_.flat(window_.wrap(s));
        if (boundary_ == BoundaryKind::Fixed) {
            if (auto it = collar_.find(s); it != collar_.end()) return it->second;
        }
        return std::nullopt;
    }

    std::size_t require_slot(const SiteIndex& s) const {
        if (auto k = slot(s)) return *k;
        throw MissingSiteError("site " + s.to_string() + " is outside the window (" + std::string(to_string(boundary_)) +
                               " boundary) and has no boundary value");
    }

    bool covers(const SiteIndex& s) const { return slot(s).has_value(); }
    bool covers(const Observable& f) const {
        for (const auto& s : f.support())
            if (!covers(s)) return false;
        return true;
    }

    const SitePoint& at(const SiteIndex& s) const { return storage_[require_slot(s)]; }
    void set(const SiteIndex& s, const SitePoint& v) { storage_[require_slot(s)] = v; }

    std::span<const SitePoint> storage() const { return storage_; }
    std::span<SitePoint> storage() { return storage_; }

    // Storage slot of every support site of f, in support order.
    std::vector<std::size_t> bind(const Observable& f) const {
        if (f.kind() != kind_) throw ConfigError("observable manifold does not match the configuration");
        if (f.dimension() != dimension()) throw ConfigError("observable dimension does not match the configuration");
        std::vector<std::size_t> slots;
        slots.reserve(f.support().size());
        for (const auto& s : f.support()) slots.push_back(require_slot(s));
        return slots;
    }

    SiteSet window_sites() const { return window_.sites(); }
    SiteSet collar_sites() const {
        SiteSet out;
        for (const auto& [s, k] : collar_) out.push_back(s);
        return out;
    }

    bool same_geometry(const Configuration& o) const {
        return kind_ == o.kind_ && window_ == o.window_ && boundary_ == o.boundary_ && collar_ == o.collar_;
    }

private:
    ManifoldKind kind_;
    Window window_;
    BoundaryKind boundary_;
    std::vector<SitePoint> storage_;
    std::map<SiteIndex, std::size_t> collar_;
};

// Rewrites every site of f to its periodic image (no-op for non-periodic windows).
inline Observable canonicalize(const Observable& f, const Configuration& config) {
    if (config.boundary() != BoundaryKind::Periodic) return f;
    return f.with_sites([&](const SiteIndex& s) { return config.canonical(s); });
}

inline double evaluate(const Observable& f, const Configuration& config) {
    auto slots = config.bind(f);
    return f.evaluate(config.storage(), slots);
}

} // namespace kmslab
