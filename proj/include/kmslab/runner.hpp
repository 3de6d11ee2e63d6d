/*
 * Experiment orchestration: runs the suite named in a RunConfig, builds the
 * report JSON and maps the verdict to an exit status
 * (0 pass, 2 fail, 3 inconclusive; 1 is left for errors).
 */
#pragma once

#include "run_config.hpp"

#include <ostream>

namespace kmslab {

struct RunOutcome {
    nlohmann::json report;
    std::string csv;
    int exit_status = 0;
};

namespace detail {

inline Corpus shifted(const Corpus& c, const SiteIndex& by) {
    Corpus out;
    out.version = c.version;
    for (const auto& [f, g] : c.pairs) out.pairs.push_back({f.translated(by), g.translated(by)});
    for (const auto& f : c.functions) out.functions.push_back(f.translated(by));
    return out;
}

// Single-site pairs: f lives on site 0, g may reach site 1.
inline Corpus single_site_pair_corpus(ManifoldKind kind, int dim) {
    std::string o = dim == 1 ? "0" : dim == 2 ? "0,0" : "0,0,0";
    std::string n = dim == 1 ? "1" : dim == 2 ? "1,0" : "1,0,0";
    auto a = [&](const char* s) { return std::string(s) + "(" + o + ")"; };
    auto b = [&](const char* s) { return std::string(s) + "(" + n + ")"; };
    std::ostringstream s;
    s << "version = v1\n";
    if (kind == ManifoldKind::Sphere2) {
        s << a("sx") << " ; " << a("sy") << "\n"
          << a("sy") << " ; " << a("sz") << "\n"
          << a("sz") << " ; " << a("sx") << "\n"
          << a("sx") << " ; " << a("sy") << "*" << b("sz") << "\n"
          << a("sz") << "^2 ; " << a("sx") << "*" << a("sy") << "\n"
          << a("sx") << "*" << a("sz") << " ; " << a("sy") << "+" << b("sx") << "\n"
          << "exp(" << a("sz") << ") ; " << a("sx") << "\n"
          << a("sx") << "+" << a("sy") << " ; " << a("sz") << "^2\n"
          << "cos(" << a("sx") << ") ; " << a("sy") << "*" << a("sz") << "\n"
          << a("sy") << "^3 ; " << a("sx") << "*" << b("sy") << "+" << a("sz") << "\n";
    } else {
        s << "cos(" << a("q") << ") ; sin(" << a("p") << ")\n"
          << "sin(" << a("q") << ") ; cos(" << a("p") << ")\n"
          << "cos(" << a("p") << ") ; sin(" << a("q") << ")*cos(" << b("q") << ")\n"
          << "sin(" << a("p") << ") ; cos(" << a("q") << ")\n"
          << "cos(" << a("q") << "+" << a("p") << ") ; sin(" << a("p") << ")\n"
          << "exp(cos(" << a("q") << ")) ; sin(" << a("p") << ")\n"
          << "cos(" << a("q") << ")^2 ; sin(" << a("q") << ")*cos(" << a("p") << ")\n"
          << "sin(" << a("q") << "-" << a("p") << ") ; cos(" << b("p") << ")+sin(" << a("q") << ")\n"
          << "cos(" << a("p") << ")^2 ; cos(" << a("q") << ")\n"
          << "sin(2*" << a("q") << ") ; cos(" << a("p") << ")\n";
    }
    return parse_corpus(s.str(), kind, dim);
}

inline Corpus corpus_for(const RunConfig& c, const RunContext& ctx, bool pairs) {
    const auto kind = ctx.model.phi.kind();
    const int dim = ctx.model.phi.dimension();
    if (!c.corpus.empty()) return load_corpus(c.corpus, kind, dim);
    const SiteSet& anchor_region = c.suite == "compat" ? ctx.inner : ctx.regions.front();
    SiteIndex anchor = anchor_region.empty() ? SiteIndex::origin(dim) : anchor_region.front();
    if (!pairs) return shifted(default_function_corpus(kind, dim), anchor);
    if (c.engine == EngineKind::Quadrature && anchor_region.size() == 1)
        return shifted(single_site_pair_corpus(kind, dim), anchor);
    return shifted(default_pair_corpus(kind, dim), anchor);
}

inline GibbsKernel kernel_for(const RunConfig& c, const RunContext& ctx, const SiteSet& region) {
    GibbsKernel k{ctx.model.phi, region, c.beta, c.engine, c.mcmc, ctx.manifold};
    k.mcmc.seed = c.seed;
    k.mcmc.threads = c.threads;
    return k;
}

inline std::string csv_of(const CheckReport& r) {
    std::ostringstream os;
    os << "f,g,residual,stderr,z,verdict\n";
    auto quote = [](const std::string& s) { return "\"" + s + "\""; };
    os << std::setprecision(17);
    for (const auto& p : r.pairs)
        os << quote(p.f) << ',' << quote(p.g) << ',' << p.residual.value << ',' << p.residual.error << ',' << p.z << ','
           << to_string(p.verdict) << '\n';
    return os.str();
}

} // namespace detail

inline nlohmann::json report_json(const RunConfig& c, const RunContext& ctx, const CheckReport& r,
                                  const std::string& corpus_version) {
    nlohmann::json j;
    j["name"] = r.name;
    j["model"] = ctx.model.name;
    j["model_hash"] = model_hash(ctx.model.phi);
    j["config_hash"] = config_hash(c);
    j["corpus_version"] = corpus_version;
    j["seed"] = c.seed;
    j["beta"] = c.beta;
    j["engine"] = to_string(c.engine);
    auto pairs = nlohmann::json::array();
    for (const auto& p : r.pairs)
        pairs.push_back({{"f", p.f},
                         {"g", p.g},
                         {"residual", p.residual.value},
                         {"stderr", p.residual.error},
                         {"z", p.z},
                         {"error_kind", to_string(p.residual.kind)},
                         {"n_effective", p.residual.n_effective},
                         {"verdict", to_string(p.verdict)}});
    j["pairs"] = pairs;
    j["verdict"] = to_string(r.verdict);
    j["coverage"] = r.coverage;
    j["runtime_sec"] = r.runtime_sec;
    return j;
}

// Strips timing fields, for reproducibility comparisons.
inline nlohmann::json without_timing(nlohmann::json j) {
    j.erase("runtime_sec");
    return j;
}

inline CheckReport run_suite(const RunConfig& c, const RunContext& ctx, std::string* corpus_version = nullptr) {
    const bool pairs = c.suite == "kms" || c.suite == "tilt";
    Corpus corpus = detail::corpus_for(c, ctx, pairs);
    if (corpus_version) *corpus_version = corpus.version;
    if (c.suite == "kms") {
        if (corpus.pairs.empty()) throw ConfigError("corpus has no pairs", "corpus");
        return prop41_suite(detail::kernel_for(c, ctx, ctx.regions.front()), ctx.eta, corpus, c.thresholds);
    }
    if (c.suite == "dlr") {
        auto sampler = detail::kernel_for(c, ctx, ctx.eta.window_sites());
        return dlr_invariance_suite(sampler, ctx.eta, ctx.regions, corpus, c.thresholds);
    }
    if (c.suite == "compat") {
        if (corpus.functions.empty()) throw ConfigError("corpus has no functions", "corpus");
        auto outer = detail::kernel_for(c, ctx, ctx.regions.front());
        auto inner = detail::kernel_for(c, ctx, ctx.inner);
        inner.engine = EngineKind::Quadrature;
        return compatibility_suite(outer, inner, ctx.eta, corpus, c.thresholds);
    }
    if (c.suite == "tilt") {
        if (corpus.pairs.empty()) throw ConfigError("corpus has no pairs", "corpus");
        if (corpus.functions.empty()) {
            // Liouville moments of the region's first site
            const auto kind = ctx.model.phi.kind();
            const int dim = ctx.model.phi.dimension();
            SiteIndex at = ctx.regions.front().front();
            std::vector<std::string> texts = kind == ManifoldKind::Sphere2
                                                 ? std::vector<std::string>{"sz(" + at.to_string() + ")",
                                                                            "sz(" + at.to_string() + ")^2"}
                                                 : std::vector<std::string>{"cos(q(" + at.to_string() + "))",
                                                                            "cos(p(" + at.to_string() + "))^2"};
            for (const auto& t : texts) corpus.functions.push_back(Observable::parse(t, kind, dim));
        }
        return tilted_annihilation_suite(detail::kernel_for(c, ctx, ctx.regions.front()), ctx.eta, corpus,
                                         c.thresholds);
    }
    throw ConfigError("suite '" + c.suite + "' does not produce a check report", "suite");
}

inline RunOutcome run_experiment(const RunConfig& c) {
    RunContext ctx = build_context(c);
    std::string version;
    CheckReport r = run_suite(c, ctx, &version);
    RunOutcome out;
    out.report = report_json(c, ctx, r, version);
    out.csv = detail::csv_of(r);
    out.exit_status = exit_code(r.verdict);
    return out;
}

// JSON lines {sweep, config: {site: coords}, H} from chain 0 over the whole window.
inline void write_samples(const RunConfig& c, std::ostream& out) {
    RunContext ctx = build_context(c);
    auto kernel = detail::kernel_for(c, ctx, ctx.eta.window_sites());
    kernel.engine = EngineKind::Mcmc;
    const auto sites = ctx.eta.window_sites();
    for_each_sample(kernel, ctx.eta, 0, [&](std::int64_t sweep, const Configuration& cfg, double h) {
        nlohmann::json j;
        j["sweep"] = sweep;
        nlohmann::json conf = nlohmann::json::object();
        for (const auto& s : sites) {
            const auto& p = cfg.at(s);
            if (cfg.kind() == ManifoldKind::Sphere2) conf[s.to_string()] = {p[0], p[1], p[2]};
            else conf[s.to_string()] = {p[0], p[1]};
        }
        j["config"] = std::move(conf);
        j["H"] = h;
        out << j.dump() << '\n';
    });
}

// Throughput of both engines on the configured model.
inline nlohmann::json run_bench(const RunConfig& c) {
    RunContext ctx = build_context(c);
    nlohmann::json j;
    j["name"] = "bench";
    j["model"] = ctx.model.name;
    j["model_hash"] = model_hash(ctx.model.phi);
    j["config_hash"] = config_hash(c);
    const auto& region = ctx.regions.front();
    if (region.size() <= kMaxQuadratureSites) {
        auto k = detail::kernel_for(c, ctx, region);
        k.engine = EngineKind::Quadrature;
        detail::Stopwatch clock;
        QuadratureEngine engine(k, ctx.eta);
        Observable one = Observable::constant(1.0, ctx.model.phi.kind(), ctx.model.phi.dimension());
        auto e = engine.expectation(ctx.eta, one);
        double t = clock.seconds();
        j["quadrature"] = {{"sites", region.size()},
                           {"nodes", engine.node_count()},
                           {"normalization", e.value},
                           {"seconds", t},
                           {"nodes_per_sec", t > 0 ? engine.node_count() / t : 0.0}};
    }
    auto k = detail::kernel_for(c, ctx, ctx.eta.window_sites());
    k.engine = EngineKind::Mcmc;
    const std::int64_t sweeps = std::min<std::int64_t>(c.mcmc.sweeps, 20000);
    MetropolisChain chain(k, ctx.eta, RandomStream::for_stream(c.seed, 0));
    detail::Stopwatch clock;
    for (std::int64_t s = 0; s < sweeps; ++s) chain.sweep();
    double t = clock.seconds();
    j["mcmc"] = {{"sites", chain.region_size()},
                 {"sweeps", sweeps},
                 {"acceptance", chain.acceptance_rate()},
                 {"seconds", t},
                 {"site_updates_per_sec", t > 0 ? static_cast<double>(sweeps) * chain.region_size() / t : 0.0}};
    return j;
}

} // namespace kmslab
