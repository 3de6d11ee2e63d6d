/*
 * Potential files and the bundled model registry.
 *
 * Potential file:
 *     name = "heisenberg1d"
 *     manifold = "sphere2"
 *     dimension = 1
 *     translation_invariant = true
 *     oracle = "..."                 # optional, free text
 *     [[term]]
 *     offsets = [[0], [1]]
 *     expr = "-(sx(0)*sx(1) + sy(0)*sy(1) + sz(0)*sz(1))"
 *     coupling = 1.0                 # optional
 */
#pragma once

#include "potential.hpp"
#include "toml_lite.hpp"

#include <filesystem>

namespace kmslab {

struct Model {
    std::string name;
    std::string summary;
    std::string oracle;
    Potential phi = Potential::zero(ManifoldKind::Sphere2, 1);
};

namespace detail {

inline const toml::Value* find(const toml::Table& t, const std::string& key) {
    auto it = t.find(key);
    return it == t.end() ? nullptr : &it->second;
}

inline std::string get_string(const toml::Table& t, const std::string& key, const std::string& field,
                              std::optional<std::string> fallback = std::nullopt) {
    const auto* v = find(t, key);
    if (!v) {
        if (fallback) return *fallback;
        throw ConfigError("missing", field);
    }
    if (!v->is_string()) throw ConfigError("expected a string", field);
    return v->as_string();
}

inline SiteIndex site_from_array(const toml::Value& v, const std::string& field) {
    if (!v.is_array() || v.as_array().empty() || v.as_array().size() > static_cast<std::size_t>(kMaxDimension))
        throw ConfigError("expected an array of 1..3 integers", field);
    SiteIndex s = SiteIndex::origin(static_cast<int>(v.as_array().size()));
    for (std::size_t k = 0; k < v.as_array().size(); ++k) {
        const auto& c = v.as_array()[k];
        if (!c.is_int()) throw ConfigError("expected an integer coordinate", field);
        s[static_cast<int>(k)] = static_cast<int>(c.as_int());
    }
    return s;
}

} // namespace detail

inline Model model_from_table(const toml::Table& t, const std::string& source) {
    Model m;
    m.name = detail::get_string(t, "name", "name", source);
    m.summary = detail::get_string(t, "summary", "summary", std::string{});
    m.oracle = detail::get_string(t, "oracle", "oracle", std::string{});
    ManifoldKind kind = parse_manifold_kind(detail::get_string(t, "manifold", "manifold"));
    const auto* dim_v = detail::find(t, "dimension");
    if (!dim_v || !dim_v->is_int()) throw ConfigError("expected an integer", "dimension");
    const int dim = static_cast<int>(dim_v->as_int());
    if (dim < 1 || dim > kMaxDimension) throw ConfigError("must be 1..3", "dimension");
    bool ti = true;
    if (const auto* v = detail::find(t, "translation_invariant")) {
        if (!v->is_bool()) throw ConfigError("expected true or false", "translation_invariant");
        ti = v->as_bool();
    }
    std::vector<PotentialTerm> terms;
    if (const auto* v = detail::find(t, "term")) {
        if (!v->is_table_array()) throw ConfigError("expected [[term]] entries", "term");
        for (std::size_t k = 0; k < v->as_table_array().size(); ++k) {
            const auto& tt = *v->as_table_array()[k];
            const std::string field = "term[" + std::to_string(k) + "]";
            PotentialTerm term;
            const auto* off = detail::find(tt, "offsets");
            if (!off || !off->is_array()) throw ConfigError("expected an array of sites", field + ".offsets");
            for (const auto& o : off->as_array()) term.offsets.push_back(detail::site_from_array(o, field + ".offsets"));
            std::string text = detail::get_string(tt, "expr", field + ".expr");
            try {
                term.expr = Observable::parse(text, kind, dim);
            } catch (const ParseError& e) {
                throw ConfigError(e.what(), field + ".expr");
            }
            if (const auto* c = detail::find(tt, "coupling")) {
                if (!c->is_number()) throw ConfigError("expected a number", field + ".coupling");
                term.coupling = c->as_number();
            }
            terms.push_back(std::move(term));
        }
    }
    m.phi = Potential(kind, dim, std::move(terms), ti);
    return m;
}

inline Model load_model_text(std::string_view text, const std::string& source) {
    return model_from_table(toml::parse(text), source);
}

inline Model load_model_file(const std::string& path) {
    return model_from_table(toml::parse_file(path), std::filesystem::path(path).stem().string());
}

namespace detail {

struct BundledModel {
    const char* name;
    const char* text;
};

inline constexpr BundledModel kBundledModels[] = {
    {"field", R"toml(name = "field"
summary = "single spins in a field along z, H = -h sum_i sz(i), h = 1"
oracle = "<sz> = coth(h) - 1/h (Langevin function L(h)); <sy^2> = L(h)/h"
manifold = "sphere2"
dimension = 1
translation_invariant = true
[[term]]
offsets = [[0]]
expr = "-sz(0)"
coupling = 1.0
)toml"},
    {"heisenberg-bond", R"toml(name = "heisenberg-bond"
summary = "one ferromagnetic bond between sites 0 and 1, H = -J s0.s1, J = 1"
oracle = "<s0.s1> = coth(J) - 1/J (free boundary)"
manifold = "sphere2"
dimension = 1
translation_invariant = false
[[term]]
offsets = [[0], [1]]
expr = "-(sx(0)*sx(1) + sy(0)*sy(1) + sz(0)*sz(1))"
coupling = 1.0
)toml"},
    {"heisenberg1d", R"toml(name = "heisenberg1d"
summary = "classical Heisenberg chain, nearest neighbour, J = 1"
oracle = "<s_i.s_{i+1}> = coth(J) - 1/J on the infinite chain (open chains exactly; rings up to L(J)^N)"
manifold = "sphere2"
dimension = 1
translation_invariant = true
[[term]]
offsets = [[0], [1]]
expr = "-(sx(0)*sx(1) + sy(0)*sy(1) + sz(0)*sz(1))"
coupling = 1.0
)toml"},
    {"heisenberg2d", R"toml(name = "heisenberg2d"
summary = "classical Heisenberg model on the square lattice, nearest neighbour, J = 1"
oracle = "none in closed form"
manifold = "sphere2"
dimension = 2
translation_invariant = true
[[term]]
offsets = [[0, 0], [1, 0]]
expr = "-(sx(0,0)*sx(1,0) + sy(0,0)*sy(1,0) + sz(0,0)*sz(1,0))"
[[term]]
offsets = [[0, 0], [0, 1]]
expr = "-(sx(0,0)*sx(0,1) + sy(0,0)*sy(0,1) + sz(0,0)*sz(0,1))"
)toml"},
    {"torus-rotor", R"toml(name = "torus-rotor"
summary = "rotor chain on the torus, H = -J sum cos(q_i - q_{i+1}) - h sum cos(p_i), J = h = 1"
oracle = "<cos p_i> = I1(h)/I0(h); <cos(q_i - q_{i+1})> = I1(J)/I0(J) on open chains"
manifold = "torus2"
dimension = 1
translation_invariant = true
[[term]]
offsets = [[0], [1]]
expr = "-cos(q(0) - q(1))"
[[term]]
offsets = [[0]]
expr = "-cos(p(0))"
)toml"},
    {"liouville", R"toml(name = "liouville"
summary = "zero potential on the sphere; every Gibbs kernel is the Liouville measure"
oracle = "<sz> = 0, <sz^2> = 1/3"
manifold = "sphere2"
dimension = 1
translation_invariant = true
)toml"},
};

} // namespace detail

inline std::vector<Model> list_models() {
    std::vector<Model> out;
    for (const auto& b : detail::kBundledModels) out.push_back(load_model_text(b.text, b.name));
    return out;
}

inline Model bundled_model(std::string_view name) {
    for (const auto& b : detail::kBundledModels)
        if (name == b.name) return load_model_text(b.text, b.name);
    throw ConfigError("unknown model '" + std::string(name) + "'", "model");
}

inline std::string describe_model(std::string_view name) {
    Model m = bundled_model(name);
    std::ostringstream os;
    os << m.name << ": " << m.summary << "\n"
       << "  manifold " << to_string(m.phi.kind()) << ", dimension " << m.phi.dimension() << ", range "
       << m.phi.range() << (m.phi.translation_invariant() ? ", translation invariant" : ", fixed sites") << "\n";
    for (const auto& t : m.phi.terms()) {
        os << "  term";
        for (const auto& o : t.offsets) os << " [" << o.to_string() << "]";
        os << ": " << detail::format_number(t.coupling) << " * " << t.expr.to_string() << "\n";
    }
    os << "  oracle: " << m.oracle << "\n";
    return os.str();
}

// A bundled model name or a path to a potential file.
inline Model resolve_model(const std::string& spec) {
    for (const auto& b : detail::kBundledModels)
        if (spec == b.name) return bundled_model(spec);
    if (std::filesystem::exists(spec)) return load_model_file(spec);
    throw ConfigError("'" + spec + "' is neither a bundled model nor a readable potential file", "model");
}

} // namespace kmslab
