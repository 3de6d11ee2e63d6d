// kmslab command-line runner.
#include "kmslab/kmslab.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iostream>

namespace {

struct Overrides {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::optional<int> threads;
    std::string out;
    std::string model, window, boundary, lambda, corpus, engine, eta, csv, inner;
    std::optional<std::int64_t> sweeps;
    std::optional<double> beta;
    std::optional<int> order;
};

kmslab::RunConfig make_config(const std::string& suite, const Overrides& o) {
    kmslab::RunConfig c;
    if (!o.config.empty()) c = kmslab::load_run_config(o.config);
    const bool check = suite != "sample" && suite != "bench";
    if (check && !c.suite.empty() && c.suite != suite)
        throw kmslab::ConfigError("run file is for the '" + c.suite + "' suite", "suite");
    c.suite = suite;
    if (!o.model.empty()) c.model = o.model;
    if (!o.window.empty()) c.window = o.window;
    if (!o.boundary.empty()) c.boundary = kmslab::parse_boundary(o.boundary);
    if (!o.lambda.empty()) c.regions = {o.lambda};
    if (!o.inner.empty()) c.inner_lambda = o.inner;
    if (!o.corpus.empty()) c.corpus = o.corpus;
    if (!o.engine.empty()) c.engine = kmslab::parse_engine(o.engine);
    if (!o.eta.empty()) c.eta = o.eta;
    if (o.seed) c.seed = *o.seed;
    if (o.threads) c.threads = *o.threads;
    if (o.sweeps) c.mcmc.sweeps = *o.sweeps;
    if (o.beta) c.beta = *o.beta;
    if (o.order) c.quadrature_order = *o.order;
    if (!o.out.empty()) c.report_path = o.out;
    if (!o.csv.empty()) c.csv_path = o.csv;
    return c;
}

void write_file(const std::string& path, const std::string& text) {
    std::ofstream f(path);
    if (!f) throw kmslab::ConfigError("cannot write '" + path + "'", "out");
    f << text;
}

void print_summary(const nlohmann::json& r) {
    std::cout << r["name"].get<std::string>() << " on " << r["model"].get<std::string>() << ": "
              << r["verdict"].get<std::string>() << " (" << r["pairs"].size() << " rows, "
              << r["runtime_sec"].get<double>() << " s)\n";
    for (const auto& p : r["pairs"]) {
        std::cout << "  " << p["f"].get<std::string>() << " | " << p["g"].get<std::string>()
                  << "  residual " << p["residual"].get<double>() << " +- " << p["stderr"].get<double>();
        if (p["error_kind"] == "mc_stderr") std::cout << "  z " << p["z"].get<double>();
        std::cout << "  " << p["verdict"].get<std::string>() << "\n";
    }
}

int run_check(const std::string& suite, const Overrides& o) {
    auto c = make_config(suite, o);
    auto outcome = kmslab::run_experiment(c);
    std::string text = outcome.report.dump(2) + "\n";
    if (c.report_path.empty()) std::cout << text;
    else write_file(c.report_path, text);
    if (!c.csv_path.empty()) write_file(c.csv_path, outcome.csv);
    if (!c.report_path.empty()) print_summary(outcome.report);
    return outcome.exit_status;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"kmslab: Gibbs/KMS equivalence experiments for lattice spin systems"};
    app.require_subcommand(1);
    Overrides o;
    app.add_option("--config", o.config, "run file")->check(CLI::ExistingFile);
    app.add_option("--seed", o.seed, "master seed");
    app.add_option("--threads", o.threads, "worker threads");
    app.add_option("--out", o.out, "output path");

    auto add_common = [&](CLI::App* s) {
        s->add_option("--model", o.model, "bundled model name or potential file");
        s->add_option("--window", o.window, "window lengths, e.g. 16 or 8x8");
        s->add_option("--boundary", o.boundary, "free | periodic | fixed");
        s->add_option("--lambda", o.lambda, "region, sites separated by ';'");
        s->add_option("--corpus", o.corpus, "corpus file");
        s->add_option("--sweeps", o.sweeps, "measured sweeps per chain");
        s->add_option("--beta", o.beta, "inverse temperature of the sampled state");
        s->add_option("--engine", o.engine, "quadrature | mcmc");
        s->add_option("--eta", o.eta, "boundary fill");
        s->add_option("--order", o.order, "quadrature order");
        s->add_option("--csv", o.csv, "residual CSV path");
        s->add_option("--seed", o.seed, "master seed");
        s->add_option("--threads", o.threads, "worker threads");
        s->add_option("--out", o.out, "output path");
        s->add_option("--config", o.config, "run file")->check(CLI::ExistingFile);
    };

    auto* sample = app.add_subcommand("sample", "write Metropolis samples as JSON lines");
    add_common(sample);
    std::vector<std::pair<std::string, CLI::App*>> checks;
    for (const char* name : {"kms-check", "dlr-check", "compat-check", "tilt-check"}) {
        auto* s = app.add_subcommand(name, std::string("run the ") + name + " suite");
        add_common(s);
        checks.emplace_back(name, s);
    }
    checks[2].second->add_option("--inner", o.inner, "inner region");
    auto* bench = app.add_subcommand("bench", "engine throughput");
    add_common(bench);
    auto* list = app.add_subcommand("list-models", "bundled models");
    std::string describe_name;
    auto* describe = app.add_subcommand("describe-model", "details and oracle of a bundled model");
    describe->add_option("name", describe_name)->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 1;
    }

    try {
        if (*list) {
            for (const auto& m : kmslab::list_models()) std::cout << m.name << "\t" << m.summary << "\n";
            return 0;
        }
        if (*describe) {
            std::cout << kmslab::describe_model(describe_name);
            return 0;
        }
        if (*sample) {
            auto c = make_config("sample", o);
            if (c.report_path.empty()) {
                kmslab::write_samples(c, std::cout);
            } else {
                std::ofstream f(c.report_path);
                if (!f) throw kmslab::ConfigError("cannot write '" + c.report_path + "'", "out");
                kmslab::write_samples(c, f);
            }
            return 0;
        }
        if (*bench) {
            auto c = make_config("bench", o);
            auto text = kmslab::run_bench(c).dump(2) + "\n";
            if (c.report_path.empty()) std::cout << text;
            else write_file(c.report_path, text);
            return 0;
        }
        for (const auto& [name, s] : checks)
            if (*s) return run_check(name.substr(0, name.find('-')), o);
    } catch (const kmslab::ParseError& e) {
        std::cerr << "parse error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 1;
}
