/*
 * Lattice sites of Z^d (d <= 3) and finite rectangular windows.
 */
#pragma once

#include "errors.hpp"

#include <algorithm>
#include <array>
#include <compare>
#include <cstddef>
#include <cstdlib>
#include <initializer_list>
#include <string>
#include <string_view>
#include <vector>

namespace kmslab {

inline constexpr int kMaxDimension = 3;

struct SiteIndex {
    std::array<int, kMaxDimension> c{};
    int dim = 1;

    SiteIndex() = default;
    SiteIndex(std::initializer_list<int> coords) : dim(static_cast<int>(coords.size())) {
        if (dim < 1 || dim > kMaxDimension) throw ConfigError("site index needs 1..3 coordinates");
        std::copy(coords.begin(), coords.end(), c.begin());
    }
    static SiteIndex origin(int dim) {
        SiteIndex s;
        s.dim = dim;
        return s;
    }

    int operator[](int k) const { return c[static_cast<std::size_t>(k)]; }
    int& operator[](int k) { return c[static_cast<std::size_t>(k)]; }

    // lexicographic in the coordinates, then by dimension
    auto operator<=>(const SiteIndex&) const = default;

    SiteIndex operator+(const SiteIndex& o) const {
        SiteIndex r = *this;
        for (int k = 0; k < dim; ++k) r[k] += o[k];
        return r;
    }
    SiteIndex operator-(const SiteIndex& o) const {
        SiteIndex r = *this;
        for (int k = 0; k < dim; ++k) r[k] -= o[k];
        return r;
    }

    int sup_norm() const {
        int m = 0;
        for (int k = 0; k < dim; ++k) m = std::max(m, std::abs(c[static_cast<std::size_t>(k)]));
        return m;
    }

    std::string to_string() const {
        std::string s;
        for (int k = 0; k < dim; ++k) {
            if (k) s += ',';
            s += std::to_string(c[static_cast<std::size_t>(k)]);
        }
        return s;
    }
};

using SiteSet = std::vector<SiteIndex>;

inline void normalize(SiteSet& s) {
    std::sort(s.begin(), s.end());
    s.erase(std::unique(s.begin(), s.end()), s.end());
}

inline bool contains(const SiteSet& sorted, const SiteIndex& i) {
    return std::binary_search(sorted.begin(), sorted.end(), i);
}

inline bool intersects(const SiteSet& sorted_a, const SiteSet& sorted_b) {
    auto a = sorted_a.begin();
    auto b = sorted_b.begin();
    while (a != sorted_a.end() && b != sorted_b.end()) {
        if (*a < *b) ++a;
        else if (*b < *a) ++b;
        else return true;
    }
    return false;
}

inline SiteSet intersection(const SiteSet& sorted_a, const SiteSet& sorted_b) {
    SiteSet out;
    std::set_intersection(sorted_a.begin(), sorted_a.end(), sorted_b.begin(), sorted_b.end(),
                          std::back_inserter(out));
    return out;
}

// Parses "3" or "3,4" (one site) into a SiteIndex.
inline SiteIndex parse_site(std::string_view text) {
    SiteIndex s;
    s.dim = 0;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        auto comma = text.find(',', pos);
        auto part = text.substr(pos, comma == std::string_view::npos ? std::string_view::npos : comma - pos);
        while (!part.empty() && part.front() == ' ') part.remove_prefix(1);
        while (!part.empty() && part.back() == ' ') part.remove_suffix(1);
        if (part.empty() || s.dim == kMaxDimension) throw ConfigError("malformed site '" + std::string(text) + "'");
        char* end = nullptr;
        std::string tmp(part);
        long v = std::strtol(tmp.c_str(), &end, 10);
        if (*end != '\0') throw ConfigError("malformed site '" + std::string(text) + "'");
        s.c[static_cast<std::size_t>(s.dim++)] = static_cast<int>(v);
        if (comma == std::string_view::npos) break;
        pos = comma + 1;
    }
    return s;
}

// Parses a site list "0;1" or "3,3;3,4".
inline SiteSet parse_site_list(std::string_view text) {
    SiteSet out;
    std::size_t pos = 0;
    while (pos < text.size()) {
        auto semi = text.find(';', pos);
        out.push_back(parse_site(text.substr(pos, semi == std::string_view::npos ? std::string_view::npos : semi - pos)));
        if (semi == std::string_view::npos) break;
        pos = semi + 1;
    }
    return out;
}

// Axis-aligned box [lo, lo + len) in Z^d.
class Window {
public:
    Window() = default;
    Window(SiteIndex lo, std::array<int, kMaxDimension> lengths) : lo_(lo), len_(lengths) {
        for (int k = 0; k < lo_.dim; ++k)
            if (len_[static_cast<std::size_t>(k)] < 1) throw ConfigError("window lengths must be positive", "window");
        for (int k = lo_.dim; k < kMaxDimension; ++k) len_[static_cast<std::size_t>(k)] = 1;
    }

    // Window starting at the origin, e.g. {16} or {8, 8}.
    static Window box(std::initializer_list<int> lengths) {
        std::vector<int> l(lengths);
        return box(l);
    }
    static Window box(const std::vector<int>& lengths) {
        if (lengths.empty() || lengths.size() > kMaxDimension) throw ConfigError("window needs 1..3 lengths", "window");
        std::array<int, kMaxDimension> len{1, 1, 1};
        std::copy(lengths.begin(), lengths.end(), len.begin());
        return Window(SiteIndex::origin(static_cast<int>(lengths.size())), len);
    }

    // "16", "8x8", "4x4x4"
    static Window parse(std::string_view spec) {
        std::vector<int> lengths;
        std::size_t pos = 0;
        while (pos <= spec.size()) {
            auto x = spec.find('x', pos);
            std::string part(spec.substr(pos, x == std::string_view::npos ? std::string_view::npos : x - pos));
            char* end = nullptr;
            long v = std::strtol(part.c_str(), &end, 10);
            if (part.empty() || *end != '\0' || v < 1) throw ConfigError("malformed window '" + std::string(spec) + "'", "window");
            lengths.push_back(static_cast<int>(v));
            if (x == std::string_view::npos) break;
            pos = x + 1;
        }
        return box(lengths);
    }

    int dim() const { return lo_.dim; }
    const SiteIndex& lo() const { return lo_; }
    int length(int k) const { return len_[static_cast<std::size_t>(k)]; }

    std::size_t size() const {
        std::size_t n = 1;
        for (int k = 0; k < dim(); ++k) n *= static_cast<std::size_t>(length(k));
        return n;
    }

    bool contains(const SiteIndex& s) const {
        if (s.dim != dim()) return false;
        for (int k = 0; k < dim(); ++k)
            if (s[k] < lo_[k] || s[k] >= lo_[k] + length(k)) return false;
        return true;
    }

    // Row-major offset, last coordinate fastest. Precondition: contains(s).
    std::size_t flat(const SiteIndex& s) const {
        std::size_t idx = 0;
        for (int k = 0; k < dim(); ++k)
            idx = idx * static_cast<std::size_t>(length(k)) + static_cast<std::size_t>(s[k] - lo_[k]);
        return idx;
    }

    SiteIndex site(std::size_t flat_index) const {
        SiteIndex s = SiteIndex::origin(dim());
        for (int k = dim() - 1; k >= 0; --k) {
            auto l = static_cast<std::size_t>(length(k));
            s[k] = lo_[k] + static_cast<int>(flat_index % l);
            flat_index /= l;
        }
        return s;
    }

    // Periodic image inside the window.
    SiteIndex wrap(const SiteIndex& s) const {
        SiteIndex r = s;
        for (int k = 0; k < dim(); ++k) {
            int l = length(k);
            int v = (s[k] - lo_[k]) % l;
            if (v < 0) v += l;
            r[k] = lo_[k] + v;
        }
        return r;
    }

    SiteSet sites() const {
        SiteSet out;
        out.reserve(size());
        for (std::size_t i = 0; i < size(); ++i) out.push_back(site(i));
        return out;
    }

    std::string to_string() const {
        std::string s;
        for (int k = 0; k < dim(); ++k) {
            if (k) s += 'x';
            s += std::to_string(length(k));
        }
        return s;
    }

    bool operator==(const Window& o) const {
        if (lo_ != o.lo_) return false;
        for (int k = 0; k < dim(); ++k)
            if (length(k) != o.length(k)) return false;
        return true;
    }

private:
    SiteIndex lo_ = SiteIndex::origin(1);
    std::array<int, kMaxDimension> len_{1, 1, 1};
};

} // namespace kmslab
