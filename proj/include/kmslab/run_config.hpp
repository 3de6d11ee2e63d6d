/*
 * RunConfig: everything an experiment needs, read from a run file and/or
 * command-line overrides, validated before any computation.
 *
 * Run file (all keys optional except suite):
 *     suite = "kms"                  # kms | dlr | compat | tilt | sample | bench
 *     model = "field"                # bundled name or potential file
 *     window = "1"                   # lengths, e.g. "16" or "8x8"
 *     boundary = "fixed"             # free | periodic | fixed
 *     eta = "north"                  # north | south | equator | alternating | random
 *     lambda = "0"                   # region, sites separated by ';'
 *     regions = ["3,3", "4,4"]       # several regions (dlr)
 *     inner_lambda = "0"             # compat: inner region
 *     beta = 1.0
 *     engine = "quadrature"          # quadrature | mcmc
 *     quadrature_order = 24
 *     bracket_sign = 1
 *     corpus = "corpus/pairs.txt"
 *     seed = 42
 *     threads = 1
 *     [mcmc]
 *     sweeps = 200000
 *     burn_in = 1000
 *     thin = 1
 *     chains = 2
 *     proposal = "uniform"           # uniform | cone
 *     cone_step = 0.5
 *     [thresholds]
 *     z_pass = 4.0
 *     z_fail = 5.0
 *     tol = 1e-8
 *     n_eff_floor = 100
 *     [output]
 *     report = "report.json"
 *     csv = "residuals.csv"
 */
#pragma once

#include "checks.hpp"
#include "models.hpp"

#include <nlohmann/json.hpp>

#include <iomanip>

namespace kmslab {

inline const std::vector<std::string>& known_suites() {
    static const std::vector<std::string> s{"kms", "dlr", "compat", "tilt", "sample", "bench"};
    return s;
}

struct RunConfig {
    std::string suite;
    std::string model = "field";
    std::string window = "1";
    BoundaryKind boundary = BoundaryKind::Fixed;
    std::string eta = "north";
    std::vector<std::string> regions;
    std::string inner_lambda;
    double beta = 1.0;
    EngineKind engine = EngineKind::Quadrature;
    int quadrature_order = 24;
    int bracket_sign = 1;
    std::string corpus;
    std::uint64_t seed = 42;
    int threads = 1;
    McmcParams mcmc{};
    CheckThresholds thresholds{};
    std::string report_path;
    std::string csv_path;
};

namespace detail {

inline double get_number(const toml::Table& t, const std::string& key, const std::string& field, double fallback) {
    const auto* v = find(t, key);
    if (!v) return fallback;
    if (!v->is_number()) throw ConfigError("expected a number", field);
    return v->as_number();
}

inline std::int64_t get_int(const toml::Table& t, const std::string& key, const std::string& field,
                            std::int64_t fallback) {
    const auto* v = find(t, key);
    if (!v) return fallback;
    if (!v->is_int()) throw ConfigError("expected an integer", field);
    return v->as_int();
}

inline const toml::Table* get_table(const toml::Table& t, const std::string& key) {
    const auto* v = find(t, key);
    if (!v) return nullptr;
    if (!v->is_table()) throw ConfigError("expected a table", key);
    return &v->as_table();
}

inline void check_known_keys(const toml::Table& t, const std::vector<std::string>& keys, const std::string& prefix) {
    for (const auto& [k, v] : t)
        if (std::find(keys.begin(), keys.end(), k) == keys.end()) throw ConfigError("unknown key", prefix + k);
}

} // namespace detail

inline RunConfig run_config_from_table(const toml::Table& t) {
    using namespace detail;
    check_known_keys(t,
                     {"suite", "model", "window", "boundary", "eta", "lambda", "regions", "inner_lambda", "beta",
                      "engine", "quadrature_order", "bracket_sign", "corpus", "seed", "threads", "mcmc", "thresholds",
                      "output"},
                     "");
    RunConfig c;
    c.suite = get_string(t, "suite", "suite", std::string{});
    c.model = get_string(t, "model", "model", c.model);
    c.window = get_string(t, "window", "window", c.window);
    c.boundary = parse_boundary(get_string(t, "boundary", "boundary", std::string(to_string(c.boundary))));
    c.eta = get_string(t, "eta", "eta", c.eta);
    if (find(t, "lambda")) c.regions.push_back(get_string(t, "lambda", "lambda"));
    if (const auto* v = find(t, "regions")) {
        if (!v->is_array()) throw ConfigError("expected an array of strings", "regions");
        for (const auto& r : v->as_array()) {
            if (!r.is_string()) throw ConfigError("expected an array of strings", "regions");
            c.regions.push_back(r.as_string());
        }
    }
    c.inner_lambda = get_string(t, "inner_lambda", "inner_lambda", std::string{});
    c.beta = get_number(t, "beta", "beta", c.beta);
    c.engine = parse_engine(get_string(t, "engine", "engine", std::string(to_string(c.engine))));
    c.quadrature_order = static_cast<int>(get_int(t, "quadrature_order", "quadrature_order", c.quadrature_order));
    c.bracket_sign = static_cast<int>(get_int(t, "bracket_sign", "bracket_sign", c.bracket_sign));
    c.corpus = get_string(t, "corpus", "corpus", std::string{});
    c.seed = static_cast<std::uint64_t>(get_int(t, "seed", "seed", static_cast<std::int64_t>(c.seed)));
    c.threads = static_cast<int>(get_int(t, "threads", "threads", c.threads));
    if (const auto* m = get_table(t, "mcmc")) {
        check_known_keys(*m, {"sweeps", "burn_in", "thin", "chains", "proposal", "cone_step"}, "mcmc.");
        c.mcmc.sweeps = get_int(*m, "sweeps", "mcmc.sweeps", c.mcmc.sweeps);
        c.mcmc.burn_in = get_int(*m, "burn_in", "mcmc.burn_in", c.mcmc.burn_in);
        c.mcmc.thin = static_cast<int>(get_int(*m, "thin", "mcmc.thin", c.mcmc.thin));
        c.mcmc.chains = static_cast<int>(get_int(*m, "chains", "mcmc.chains", c.mcmc.chains));
        c.mcmc.proposal = parse_proposal(get_string(*m, "proposal", "mcmc.proposal", std::string(to_string(c.mcmc.proposal))));
        c.mcmc.cone_step = get_number(*m, "cone_step", "mcmc.cone_step", c.mcmc.cone_step);
    }
    if (const auto* th = get_table(t, "thresholds")) {
        check_known_keys(*th, {"z_pass", "z_fail", "tol", "n_eff_floor"}, "thresholds.");
        c.thresholds.z_pass = get_number(*th, "z_pass", "thresholds.z_pass", c.thresholds.z_pass);
        c.thresholds.z_fail = get_number(*th, "z_fail", "thresholds.z_fail", c.thresholds.z_fail);
        c.thresholds.tol = get_number(*th, "tol", "thresholds.tol", c.thresholds.tol);
        c.thresholds.n_eff_floor = get_number(*th, "n_eff_floor", "thresholds.n_eff_floor", c.thresholds.n_eff_floor);
    }
    if (const auto* o = get_table(t, "output")) {
        check_known_keys(*o, {"report", "csv"}, "output.");
        c.report_path = get_string(*o, "report", "output.report", std::string{});
        c.csv_path = get_string(*o, "csv", "output.csv", std::string{});
    }
    return c;
}

inline RunConfig load_run_config(const std::string& path) { return run_config_from_table(toml::parse_file(path)); }

// Everything derived from a validated config.
struct RunContext {
    Model model;
    SiteManifold manifold;
    Configuration eta;
    std::vector<SiteSet> regions;
    SiteSet inner;
};

namespace detail {

inline SitePoint fill_point(ManifoldKind kind, const std::string& name, const SiteIndex& s, RandomStream& rng,
                            const SiteManifold& m) {
    const bool sphere = kind == ManifoldKind::Sphere2;
    auto north = sphere ? north_pole() : SitePoint::torus(0.0, 0.0);
    auto south = sphere ? south_pole() : SitePoint::torus(std::numbers::pi, std::numbers::pi);
    if (name == "north") return north;
    if (name == "south") return south;
    if (name == "equator")
        return sphere ? SitePoint::sphere(1.0, 0.0, 0.0) : SitePoint::torus(std::numbers::pi / 2, std::numbers::pi / 2);
    if (name == "alternating") {
        int parity = 0;
        for (int k = 0; k < s.dim; ++k) parity += s[k];
        return (parity % 2 + 2) % 2 == 0 ? north : south;
    }
    if (name == "random") return m.uniform_sample(rng);
    throw ConfigError("unknown fill '" + name + "' (north, south, equator, alternating, random)", "eta");
}

} // namespace detail

inline RunContext build_context(const RunConfig& c) {
    if (std::find(known_suites().begin(), known_suites().end(), c.suite) == known_suites().end())
        throw ConfigError("unknown suite '" + c.suite + "'", "suite");
    if (!(c.beta > 0) || !std::isfinite(c.beta)) throw ConfigError("must be a positive number", "beta");
    if (c.quadrature_order < 2 || c.quadrature_order > 200) throw ConfigError("must be in 2..200", "quadrature_order");
    if (c.bracket_sign != 1 && c.bracket_sign != -1) throw ConfigError("must be 1 or -1", "bracket_sign");
    if (c.threads < 1) throw ConfigError("must be positive", "threads");
    if (!(c.thresholds.z_pass > 0 && c.thresholds.z_fail >= c.thresholds.z_pass))
        throw ConfigError("need 0 < z_pass <= z_fail", "thresholds");
    if (!(c.thresholds.tol > 0)) throw ConfigError("must be positive", "thresholds.tol");
    if (c.engine == EngineKind::Mcmc || c.suite == "dlr" || c.suite == "sample") {
        McmcParams p = c.mcmc;
        p.threads = c.threads;
        p.validate();
    }

    Model model = resolve_model(c.model);
    Window window;
    try {
        window = Window::parse(c.window);
    } catch (const Error& e) {
        throw ConfigError(e.what(), "window");
    }
    if (window.dim() != model.phi.dimension())
        throw ConfigError("window has dimension " + std::to_string(window.dim()) + " but the model has " +
                              std::to_string(model.phi.dimension()),
                          "window");
    SiteManifold manifold(model.phi.kind(), c.quadrature_order, c.bracket_sign);
    RandomStream rng = RandomStream::for_stream(c.seed, kBoundaryStream);
    auto fill = [&](const SiteIndex& s) { return detail::fill_point(model.phi.kind(), c.eta, s, rng, manifold); };
    Configuration eta = [&] {
        if (c.boundary == BoundaryKind::Fixed)
            return Configuration::fixed(model.phi.kind(), window, std::max(1, model.phi.range()), fill);
        Configuration e(model.phi.kind(), window, c.boundary, SitePoint{});
        for (const auto& s : window.sites()) e.set(s, fill(s));
        return e;
    }();

    RunContext ctx{std::move(model), manifold, std::move(eta), {}, {}};
    auto parse_region = [&](const std::string& text, const std::string& field) {
        SiteSet r;
        try {
            r = parse_site_list(text);
        } catch (const Error& e) {
            throw ConfigError(e.what(), field);
        }
        for (const auto& s : r)
            if (s.dim != window.dim()) throw ConfigError("site " + s.to_string() + " has the wrong dimension", field);
        return detail::canonical_region(r, ctx.eta);
    };
    for (std::size_t k = 0; k < c.regions.size(); ++k)
        ctx.regions.push_back(parse_region(c.regions[k], c.regions.size() == 1 ? "lambda" : "regions[" + std::to_string(k) + "]"));
    if (ctx.regions.empty()) ctx.regions.push_back(ctx.eta.window_sites());
    if (!c.inner_lambda.empty()) ctx.inner = parse_region(c.inner_lambda, "inner_lambda");
    if (c.suite == "compat" && ctx.inner.empty()) throw ConfigError("compat needs an inner region", "inner_lambda");
    if (c.suite == "dlr" && c.boundary != BoundaryKind::Periodic) throw ConfigError("dlr needs a periodic window", "boundary");
    if (c.suite == "tilt" && c.engine != EngineKind::Quadrature)
        throw ConfigError("the tilted functional needs the quadrature engine", "engine");
    return ctx;
}

namespace detail {

inline std::string fnv1a_hex(std::string_view s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char ch : s) {
        h ^= ch;
        h *= 0x100000001b3ULL;
    }
    std::ostringstream os;
    os << std::hex << std::setw(16) << std::setfill('0') << h;
    return os.str();
}

} // namespace detail

// Canonical form of the config; paths for outputs are left out so moving a
// report does not change its hash.
inline nlohmann::json canonical_json(const RunConfig& c) {
    nlohmann::json j;
    j["suite"] = c.suite;
    j["model"] = c.model;
    j["window"] = c.window;
    j["boundary"] = to_string(c.boundary);
    j["eta"] = c.eta;
    j["regions"] = c.regions;
    j["inner_lambda"] = c.inner_lambda;
    j["beta"] = c.beta;
    j["engine"] = to_string(c.engine);
    j["quadrature_order"] = c.quadrature_order;
    j["bracket_sign"] = c.bracket_sign;
    j["corpus"] = c.corpus;
    j["seed"] = c.seed;
    j["mcmc"] = {{"sweeps", c.mcmc.sweeps}, {"burn_in", c.mcmc.burn_in}, {"thin", c.mcmc.thin},
                 {"chains", c.mcmc.chains}, {"proposal", to_string(c.mcmc.proposal)}, {"cone_step", c.mcmc.cone_step}};
    j["thresholds"] = {{"z_pass", c.thresholds.z_pass}, {"z_fail", c.thresholds.z_fail}, {"tol", c.thresholds.tol},
                       {"n_eff_floor", c.thresholds.n_eff_floor}};
    return j;
}

inline std::string config_hash(const RunConfig& c) { return detail::fnv1a_hex(canonical_json(c).dump()); }
inline std::string model_hash(const Potential& phi) { return detail::fnv1a_hex(phi.describe()); }

} // namespace kmslab
