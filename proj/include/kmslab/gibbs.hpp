/*
 * Lambda-Gibbs kernels mu_Lambda(. | eta) with density exp(-beta H_Lambda)
 * against the product Liouville measure on the sites of Lambda, everything
 * outside Lambda frozen at eta.
 *
 * Two engines realize the kernel:
 *   QuadratureEngine  tensor-product quadrature over M^|Lambda|, |Lambda| <= 3,
 *                     with an explicit (rescaled) partition function;
 *   MetropolisChain   single-site Metropolis with a Liouville-symmetric proposal.
 */
#pragma once

#include "potential.hpp"
#include "statistics.hpp"

#include <algorithm>
#include <functional>
#include <limits>
#include <sstream>
#include <thread>

namespace kmslab {

enum class EngineKind { Quadrature, Mcmc };
enum class ProposalKind { UniformSite, Cone };

inline std::string_view to_string(EngineKind e) { return e == EngineKind::Quadrature ? "quadrature" : "mcmc"; }
inline std::string_view to_string(ProposalKind p) { return p == ProposalKind::UniformSite ? "uniform" : "cone"; }

inline EngineKind parse_engine(std::string_view s) {
    if (s == "quadrature") return EngineKind::Quadrature;
    if (s == "mcmc") return EngineKind::Mcmc;
    throw ConfigError("unknown engine '" + std::string(s) + "'", "engine");
}
inline ProposalKind parse_proposal(std::string_view s) {
    if (s == "uniform") return ProposalKind::UniformSite;
    if (s == "cone") return ProposalKind::Cone;
    throw ConfigError("unknown proposal '" + std::string(s) + "'", "mcmc.proposal");
}

struct McmcParams {
    std::int64_t sweeps = 100000; // measured sweeps per chain, after burn-in
    std::int64_t burn_in = 1000;
    int thin = 1;
    ProposalKind proposal = ProposalKind::UniformSite;
    double cone_step = 0.5;       // initial step; tuned during burn-in
    std::uint64_t seed = 42;
    int chains = 2;
    int threads = 1;
    bool randomize_start = true;

    void validate() const {
        if (sweeps < 1) throw ConfigError("must be positive", "mcmc.sweeps");
        if (burn_in < 0) throw ConfigError("must be non-negative", "mcmc.burn_in");
        if (thin < 1) throw ConfigError("must be positive", "mcmc.thin");
        if (chains < 1) throw ConfigError("must be positive", "mcmc.chains");
        if (threads < 1) throw ConfigError("must be positive", "threads");
        if (!(cone_step > 0)) throw ConfigError("must be positive", "mcmc.cone_step");
        if (sweeps / thin < static_cast<std::int64_t>(kDefaultBatches))
            throw ConfigError("need at least 20 measurements per chain for batch means", "mcmc.sweeps");
    }
};

struct GibbsKernel {
    Potential phi;
    SiteSet lambda;
    double beta = 1.0;
    EngineKind engine = EngineKind::Quadrature;
    McmcParams mcmc{};
    SiteManifold manifold{};
};

inline constexpr std::size_t kMaxQuadratureSites = 3;
inline constexpr std::size_t kMaxNestedQuadratureSites = 2;
inline constexpr double kMaxQuadratureNodes = 5e7;

namespace detail {

struct BoundObservable {
    Observable obs;
    std::vector<std::size_t> slots;
    double operator()(std::span<const SitePoint> storage) const { return obs.evaluate(storage, slots); }
};

inline SiteSet canonical_region(const SiteSet& lambda, const Configuration& geometry) {
    SiteSet out;
    for (const auto& s : lambda) {
        SiteIndex c = geometry.canonical(s);
        if (!geometry.window().contains(c))
            throw ConfigError("region site " + s.to_string() + " lies outside the window", "lambda");
        out.push_back(c);
    }
    normalize(out);
    return out;
}

inline std::vector<BoundObservable> bind_hamiltonian(const Potential& phi, const SiteSet& lambda,
                                                     const Configuration& geometry) {
    std::vector<BoundObservable> out;
    for (auto& inst : interacting_terms(phi, lambda, geometry)) {
        auto slots = geometry.bind(inst.expr);
        out.push_back({std::move(inst.expr), std::move(slots)});
    }
    return out;
}

inline std::string dump_configuration(const Configuration& c, std::size_t limit = 32) {
    std::ostringstream os;
    auto sites = c.window_sites();
    for (std::size_t i = 0; i < sites.size() && i < limit; ++i) {
        const auto& p = c.at(sites[i]);
        os << ' ' << sites[i].to_string() << ":(" << p[0] << ',' << p[1] << ',' << p[2] << ')';
    }
    if (sites.size() > limit) os << " ...";
    return os.str();
}

} // namespace detail

class QuadratureEngine {
public:
    // Nodes are enumerated with site_order[0] varying slowest; defaults to the sorted region.
    QuadratureEngine(const GibbsKernel& kernel, const Configuration& geometry, SiteSet site_order = {})
        : geometry_(geometry), manifold_(kernel.manifold), beta_(kernel.beta) {
        if (kernel.phi.kind() != geometry.kind() || manifold_.kind() != geometry.kind())
            throw ConfigError("kernel and configuration use different manifolds");
        auto region = detail::canonical_region(kernel.lambda, geometry);
        if (region.size() > kMaxQuadratureSites)
            throw CostGuardError("quadrature engine limited to " + std::to_string(kMaxQuadratureSites) + " sites, got " +
                                 std::to_string(region.size()));
        const double nodes = std::pow(static_cast<double>(manifold_.nodes().size()), static_cast<double>(region.size()));
        if (nodes > kMaxQuadratureNodes)
            throw CostGuardError("quadrature would need " + std::to_string(nodes) +
                                 " nodes; lower quadrature_order or use the mcmc engine");
        if (site_order.empty()) {
            sites_ = region;
        } else {
            sites_ = detail::canonical_region(site_order, geometry);
            if (sites_ != region) throw ConfigError("site order must be a permutation of the region");
            sites_.clear();
            for (const auto& s : site_order) sites_.push_back(geometry.canonical(s));
        }
        for (const auto& s : sites_) site_slots_.push_back(geometry.require_slot(s));
        hamiltonian_ = detail::bind_hamiltonian(kernel.phi, region, geometry);
        for (const auto& n : manifold_.nodes()) log_weights_.push_back(std::log(n.weight));
    }

    const SiteSet& sites() const { return sites_; }
    std::size_t node_count() const {
        std::size_t n = 1;
        for (std::size_t k = 0; k < sites_.size(); ++k) n *= manifold_.nodes().size();
        return n;
    }
    const Configuration& geometry() const { return geometry_; }

    // H_Lambda for the values currently in storage.
    double energy(std::span<const SitePoint> storage) const {
        double h = 0.0;
        for (const auto& t : hamiltonian_) h += t(storage);
        return h;
    }

    // Gibbs expectations of `n_out` quantities produced by
    // visit(storage, node_indices, out) at every node. `eta_storage` supplies
    // the values outside the region.
    template <class Visit>
    std::vector<Estimate> integrate(std::span<const SitePoint> eta_storage, std::size_t n_out, Visit&& visit) const {
        std::vector<SitePoint> storage(eta_storage.begin(), eta_storage.end());
        const auto& nodes = manifold_.nodes();
        const std::size_t d = sites_.size();
        std::vector<std::size_t> idx(d, 0);
        std::vector<double> out(n_out), sums(n_out, 0.0), abs_sums(n_out, 0.0);
        double z = 0.0;
        double shift = -std::numeric_limits<double>::infinity();
        std::size_t count = 0;
        for (std::size_t k = 0; k < d; ++k) storage[site_slots_[k]] = nodes[0].point;
        for (;;) {
            double lw = 0.0;
            for (std::size_t k = 0; k < d; ++k) lw += log_weights_[idx[k]];
            const double h = energy(storage);
            if (!std::isfinite(h)) throw EvaluationError("non-finite Hamiltonian at quadrature node", node_text(storage));
            lw -= beta_ * h;
            if (lw > shift) {
                double scale = std::isinf(shift) ? 0.0 : std::exp(shift - lw);
                z *= scale;
                for (std::size_t j = 0; j < n_out; ++j) {
                    sums[j] *= scale;
                    abs_sums[j] *= scale;
                }
                shift = lw;
            }
            const double p = std::exp(lw - shift);
            visit(std::span<const SitePoint>(storage), std::span<const std::size_t>(idx), std::span<double>(out));
            z += p;
            for (std::size_t j = 0; j < n_out; ++j) {
                sums[j] += p * out[j];
                abs_sums[j] += p * std::abs(out[j]);
            }
            ++count;
            // odometer, last site fastest
            std::size_t k = d;
            bool done = true;
            while (k-- > 0) {
                if (++idx[k] < nodes.size()) {
                    storage[site_slots_[k]] = nodes[idx[k]].point;
                    done = false;
                    break;
                }
                idx[k] = 0;
                storage[site_slots_[k]] = nodes[0].point;
            }
            if (done) break;
        }
        std::vector<Estimate> res(n_out);
        const double rounding = 4.0 * std::numeric_limits<double>::epsilon() * std::sqrt(static_cast<double>(count));
        for (std::size_t j = 0; j < n_out; ++j) {
            res[j].value = sums[j] / z;
            res[j].error = rounding * abs_sums[j] / z;
            res[j].kind = EstimateKind::QuadratureBound;
            res[j].n_effective = static_cast<double>(count);
        }
        return res;
    }

    // Observables not depending on the region are returned as their value at eta, exactly.
    std::vector<Estimate> expectations(std::span<const SitePoint> eta_storage, std::span<const Observable> fs) const {
        std::vector<detail::BoundObservable> bound;
        std::vector<std::size_t> inside;
        std::vector<Estimate> res(fs.size());
        for (std::size_t j = 0; j < fs.size(); ++j) {
            Observable c = canonicalize(fs[j], geometry_);
            auto slots = geometry_.bind(c);
            detail::BoundObservable b{std::move(c), std::move(slots)};
            bool touches = false;
            for (auto k : b.slots) touches |= std::find(site_slots_.begin(), site_slots_.end(), k) != site_slots_.end();
            if (touches) {
                inside.push_back(j);
                bound.push_back(std::move(b));
            } else {
                res[j] = {b(eta_storage), 0.0, EstimateKind::QuadratureBound, static_cast<double>(node_count())};
            }
        }
        if (bound.empty()) return res;
        auto est = integrate(eta_storage, bound.size(),
                             [&](std::span<const SitePoint> st, std::span<const std::size_t>, std::span<double> out) {
                                 for (std::size_t j = 0; j < bound.size(); ++j) out[j] = bound[j](st);
                             });
        for (std::size_t j = 0; j < inside.size(); ++j) res[inside[j]] = est[j];
        return res;
    }

    std::vector<Estimate> expectations(const Configuration& eta, std::span<const Observable> fs) const {
        check_geometry(eta);
        return expectations(eta.storage(), fs);
    }

    Estimate expectation(const Configuration& eta, const Observable& f) const {
        return expectations(eta, std::span<const Observable>(&f, 1))[0];
    }

    // log Z_Lambda(eta) with Z = int exp(-beta H) d(Liouville).
    double log_partition_function(const Configuration& eta) const {
        check_geometry(eta);
        std::vector<SitePoint> storage(eta.storage().begin(), eta.storage().end());
        const auto& nodes = manifold_.nodes();
        const std::size_t d = sites_.size();
        std::vector<std::size_t> idx(d, 0);
        double z = 0.0, shift = -std::numeric_limits<double>::infinity();
        for (std::size_t k = 0; k < d; ++k) storage[site_slots_[k]] = nodes[0].point;
        for (;;) {
            double lw = -beta_ * energy(storage);
            for (std::size_t k = 0; k < d; ++k) lw += log_weights_[idx[k]];
            if (lw > shift) {
                z *= std::isinf(shift) ? 0.0 : std::exp(shift - lw);
                shift = lw;
            }
            z += std::exp(lw - shift);
            std::size_t k = d;
            bool done = true;
            while (k-- > 0) {
                if (++idx[k] < nodes.size()) {
                    storage[site_slots_[k]] = nodes[idx[k]].point;
                    done = false;
                    break;
                }
                idx[k] = 0;
                storage[site_slots_[k]] = nodes[0].point;
            }
            if (done) break;
        }
        return shift + std::log(z);
    }

    // The tilted functional psi(f) = phi_Lambda(f exp(beta H_Lambda) | eta).
    // exp(beta H) is shifted by beta * max H over the nodes to avoid overflow;
    // the shift cancels in the normalized psi_hat(f) = psi(f) / psi(1).
    struct Tilted {
        std::vector<double> psi_hat;
        std::vector<double> psi;   // shifted: true psi = psi * exp(beta * shift)
        double psi_one = 0.0;      // shifted
        double shift = 0.0;
    };

    Tilted tilted(const Configuration& eta, std::span<const Observable> fs) const {
        check_geometry(eta);
        std::vector<detail::BoundObservable> bound;
        for (const auto& f : fs) {
            Observable c = canonicalize(f, geometry_);
            auto slots = geometry_.bind(c);
            bound.push_back({std::move(c), std::move(slots)});
        }
        // first pass: max H for the tilt shift
        double h_max = -std::numeric_limits<double>::infinity();
        integrate(eta.storage(), 0, [&](std::span<const SitePoint> st, std::span<const std::size_t>, std::span<double>) {
            h_max = std::max(h_max, energy(st));
        });
        const std::size_t n = bound.size();
        auto gibbs = integrate(eta.storage(), n + 1,
                               [&](std::span<const SitePoint> st, std::span<const std::size_t>, std::span<double> out) {
                                   const double tilt = std::exp(beta_ * (energy(st) - h_max));
                                   for (std::size_t j = 0; j < n; ++j) out[j] = bound[j](st) * tilt;
                                   out[n] = tilt;
                               });
        Tilted t;
        t.shift = h_max;
        t.psi_one = gibbs[n].value;
        for (std::size_t j = 0; j < n; ++j) {
            t.psi.push_back(gibbs[j].value);
            t.psi_hat.push_back(gibbs[j].value / t.psi_one);
        }
        return t;
    }

private:
    void check_geometry(const Configuration& eta) const {
        if (!eta.same_geometry(geometry_)) throw ConfigError("boundary configuration does not match the kernel geometry");
    }

    std::string node_text(std::span<const SitePoint> storage) const {
        std::ostringstream os;
        for (std::size_t k = 0; k < sites_.size(); ++k) {
            const auto& p = storage[site_slots_[k]];
            os << sites_[k].to_string() << ":(" << p[0] << ',' << p[1] << ',' << p[2] << ") ";
        }
        return os.str();
    }

    Configuration geometry_;
    SiteManifold manifold_;
    double beta_;
    SiteSet sites_;
    std::vector<std::size_t> site_slots_;
    std::vector<detail::BoundObservable> hamiltonian_;
    std::vector<double> log_weights_;
};

// Single-site Metropolis on the sites of the kernel region; everything else stays at eta.
class MetropolisChain {
public:
    MetropolisChain(const GibbsKernel& kernel, Configuration start, RandomStream rng)
        : config_(std::move(start)), rng_(std::move(rng)), manifold_(kernel.manifold), beta_(kernel.beta),
          proposal_(kernel.mcmc.proposal), step_(kernel.mcmc.cone_step) {
        if (kernel.phi.kind() != config_.kind() || manifold_.kind() != config_.kind())
            throw ConfigError("kernel and configuration use different manifolds");
        auto region = detail::canonical_region(kernel.lambda, config_);
        instances_ = detail::bind_hamiltonian(kernel.phi, region, config_);
        for (const auto& s : region) {
            SiteTerms st;
            st.site = s;
            st.slot = config_.require_slot(s);
            for (std::size_t t = 0; t < instances_.size(); ++t)
                if (instances_[t].obs.depends_on(s)) st.terms.push_back(t);
            sites_.push_back(std::move(st));
        }
    }

    const Configuration& state() const { return config_; }
    Configuration& state() { return config_; }
    RandomStream& rng() { return rng_; }
    std::size_t region_size() const { return sites_.size(); }
    const SiteIndex& region_site(std::size_t k) const { return sites_[k].site; }

    // H over every term instance touching the region.
    double energy() const {
        double h = 0.0;
        for (const auto& t : instances_) h += t(config_.storage());
        return h;
    }

    // Change of H if region site k took the value `proposal`.
    double delta_energy(std::size_t k, const SitePoint& proposal) {
        auto storage = config_.storage();
        const auto& st = sites_[k];
        const SitePoint old = storage[st.slot];
        double before = 0.0, after = 0.0;
        try {
            for (auto t : st.terms) before += instances_[t](storage);
            storage[st.slot] = proposal;
            for (auto t : st.terms) after += instances_[t](storage);
        } catch (const EvaluationError& e) {
            storage[st.slot] = old;
            throw SamplerError("non-finite energy at site " + st.site.to_string() + " (" + e.what() +
                               "); configuration:" + detail::dump_configuration(config_));
        }
        storage[st.slot] = old;
        return after - before;
    }

    SitePoint propose(std::size_t k) {
        if (proposal_ == ProposalKind::UniformSite) return manifold_.uniform_sample(rng_);
        const SitePoint& cur = config_.storage()[sites_[k].slot];
        if (manifold_.kind() == ManifoldKind::Sphere2) {
            // isotropic displacement in a ball of radius step, then renormalize
            SitePoint dir = manifold_.uniform_sample(rng_);
            double r = step_ * std::cbrt(rng_.uniform());
            double x = cur[0] + r * dir[0], y = cur[1] + r * dir[1], z = cur[2] + r * dir[2];
            double n = std::sqrt(x * x + y * y + z * z);
            if (n == 0.0) return manifold_.uniform_sample(rng_);
            return SitePoint::sphere(x / n, y / n, z / n);
        }
        double dq = step_ * std::numbers::pi * rng_.uniform(-1.0, 1.0);
        double dp = step_ * std::numbers::pi * rng_.uniform(-1.0, 1.0);
        return SitePoint::torus(cur[0] + dq, cur[1] + dp);
    }

    static double acceptance_probability(double delta_h, double beta) {
        return delta_h <= 0.0 ? 1.0 : std::exp(-beta * delta_h);
    }

    // One attempted update per region site, in lattice order.
    void sweep() {
        for (std::size_t k = 0; k < sites_.size(); ++k) {
            SitePoint prop = propose(k);
            double dh = delta_energy(k, prop);
            if (!std::isfinite(dh)) {
                throw SamplerError("non-finite energy change at site " + sites_[k].site.to_string() +
                                   "; configuration:" + detail::dump_configuration(config_));
            }
            ++attempts_;
            if (dh <= 0.0 || rng_.uniform() < std::exp(-beta_ * dh)) {
                config_.storage()[sites_[k].slot] = prop;
                ++accepted_;
            }
        }
    }

    double acceptance_rate() const { return attempts_ ? static_cast<double>(accepted_) / attempts_ : 0.0; }
    void reset_counters() { attempts_ = accepted_ = 0; }
    double step() const { return step_; }

    // Keeps the cone acceptance inside [lo, hi] during burn-in.
    void tune(double lo = 0.3, double hi = 0.6) {
        if (proposal_ != ProposalKind::Cone || attempts_ == 0) return;
        double a = acceptance_rate();
        double cap = manifold_.kind() == ManifoldKind::Sphere2 ? 2.0 : 1.0;
        if (a > hi) step_ = std::min(cap, step_ * 1.25);
        else if (a < lo) step_ *= 0.8;
        reset_counters();
    }

private:
    struct SiteTerms {
        SiteIndex site;
        std::size_t slot = 0;
        std::vector<std::size_t> terms;
    };

    Configuration config_;
    RandomStream rng_;
    SiteManifold manifold_;
    double beta_;
    ProposalKind proposal_;
    double step_;
    std::vector<detail::BoundObservable> instances_;
    std::vector<SiteTerms> sites_;
    std::size_t attempts_ = 0, accepted_ = 0;
};

// Chain `index` after randomizing the region (if requested) and burning in.
inline MetropolisChain prepared_chain(const GibbsKernel& kernel, const Configuration& eta, std::uint64_t index) {
    MetropolisChain chain(kernel, eta, RandomStream::for_stream(kernel.mcmc.seed, index));
    if (kernel.mcmc.randomize_start) {
        for (std::size_t k = 0; k < chain.region_size(); ++k)
            chain.state().set(chain.region_site(k), kernel.manifold.uniform_sample(chain.rng()));
    }
    for (std::int64_t s = 0; s < kernel.mcmc.burn_in; ++s) {
        chain.sweep();
        if ((s + 1) % 100 == 0) chain.tune();
    }
    chain.reset_counters();
    return chain;
}

// Post-burn-in, thinned configurations of one chain: callback(sweep, configuration, H).
inline void for_each_sample(const GibbsKernel& kernel, const Configuration& eta, std::uint64_t chain_index,
                            const std::function<void(std::int64_t, const Configuration&, double)>& callback) {
    kernel.mcmc.validate();
    auto chain = prepared_chain(kernel, eta, chain_index);
    for (std::int64_t s = 1; s <= kernel.mcmc.sweeps; ++s) {
        chain.sweep();
        if (s % kernel.mcmc.thin == 0) callback(kernel.mcmc.burn_in + s, chain.state(), chain.energy());
    }
}

struct McmcResult {
    std::vector<Estimate> estimates;
    double acceptance_rate = 0.0;
    std::int64_t samples_per_chain = 0;
};

using Measurement = std::function<void(const Configuration&, std::span<double>)>;

// Runs every chain (on up to mcmc.threads workers) and pools batch means in chain order.
inline McmcResult run_mcmc(const GibbsKernel& kernel, const Configuration& eta, std::size_t n_series,
                           const Measurement& measure) {
    const auto& p = kernel.mcmc;
    p.validate();
    const std::int64_t samples = p.sweeps / p.thin;
    const auto chains = static_cast<std::size_t>(p.chains);
    std::vector<std::vector<BatchMeans>> acc(chains);
    std::vector<double> acceptance(chains, 0.0);
    std::vector<std::exception_ptr> errors(chains);

    auto run_chain = [&](std::size_t c) {
        try {
            auto chain = prepared_chain(kernel, eta, c);
            acc[c].assign(n_series, BatchMeans(static_cast<std::size_t>(samples)));
            std::vector<double> values(n_series);
            for (std::int64_t s = 1; s <= samples * p.thin; ++s) {
                chain.sweep();
                if (s % p.thin) continue;
                measure(chain.state(), values);
                for (std::size_t j = 0; j < n_series; ++j) acc[c][j].add(values[j]);
            }
            acceptance[c] = chain.acceptance_rate();
        } catch (...) {
            errors[c] = std::current_exception();
        }
    };

    const std::size_t workers = std::min<std::size_t>(chains, static_cast<std::size_t>(p.threads));
    if (workers <= 1) {
        for (std::size_t c = 0; c < chains; ++c) run_chain(c);
    } else {
        std::vector<std::thread> pool;
        for (std::size_t w = 0; w < workers; ++w)
            pool.emplace_back([&, w] {
                for (std::size_t c = w; c < chains; c += workers) run_chain(c);
            });
        for (auto& t : pool) t.join();
    }
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);

    McmcResult r;
    r.samples_per_chain = samples;
    for (std::size_t j = 0; j < n_series; ++j) {
        std::vector<const BatchMeans*> per_chain;
        for (std::size_t c = 0; c < chains; ++c) per_chain.push_back(&acc[c][j]);
        r.estimates.push_back(pooled_estimate(per_chain));
    }
    for (double a : acceptance) r.acceptance_rate += a / static_cast<double>(chains);
    return r;
}

// Expectations of several observables under the kernel, by its engine.
inline std::vector<Estimate> gibbs_expectations(const GibbsKernel& kernel, std::span<const Observable> fs,
                                                const Configuration& eta) {
    if (kernel.lambda.empty()) {
        // point mass at eta
        std::vector<Estimate> out;
        for (const auto& f : fs) out.push_back({evaluate(canonicalize(f, eta), eta), 0.0, EstimateKind::QuadratureBound, 1.0});
        return out;
    }
    if (kernel.engine == EngineKind::Quadrature) return QuadratureEngine(kernel, eta).expectations(eta, fs);
    std::vector<detail::BoundObservable> bound;
    for (const auto& f : fs) {
        Observable c = canonicalize(f, eta);
        auto slots = eta.bind(c);
        bound.push_back({std::move(c), std::move(slots)});
    }
    return run_mcmc(kernel, eta, bound.size(), [&](const Configuration& cfg, std::span<double> out) {
               for (std::size_t j = 0; j < bound.size(); ++j) out[j] = bound[j](cfg.storage());
           }).estimates;
}

inline Estimate gibbs_expectation(const GibbsKernel& kernel, const Observable& f, const Configuration& eta) {
    return gibbs_expectations(kernel, std::span<const Observable>(&f, 1), eta)[0];
}

struct CompositionResult {
    Estimate composed; // E_outer[ E_inner[f | .] | eta ]
    Estimate direct;   // E_outer[f | eta]
    Estimate difference;
};

// Composition of the inner kernel (region Lambda1) after the outer one (Lambda2 ⊇ Lambda1).
// Both quadrature when |Lambda2| <= 2; otherwise the outer kernel runs by MCMC
// with the inner kernel by quadrature on every sample.
inline CompositionResult kernel_compose_expectation(const GibbsKernel& outer, const GibbsKernel& inner,
                                                    const Observable& f_in, const Configuration& eta) {
    auto outer_region = detail::canonical_region(outer.lambda, eta);
    auto inner_region = detail::canonical_region(inner.lambda, eta);
    if (!std::includes(outer_region.begin(), outer_region.end(), inner_region.begin(), inner_region.end()))
        throw ConfigError("inner region is not contained in the outer region", "lambda");
    Observable f = canonicalize(f_in, eta);
    auto f_slots = eta.bind(f);
    CompositionResult r;
    if (!intersects(f.support(), outer_region)) {
        const double v = f.evaluate(eta.storage(), f_slots);
        r.composed = r.direct = {v, 0.0, EstimateKind::QuadratureBound, 1.0};
        r.difference = {0.0, 0.0, EstimateKind::QuadratureBound, 1.0};
        return r;
    }

    if (outer_region.size() <= kMaxNestedQuadratureSites && outer.engine == EngineKind::Quadrature) {
        // outer-only sites vary slowest so the inner expectation, which cannot
        // depend on values inside Lambda1, is recomputed only when they change
        SiteSet order;
        for (const auto& s : outer_region)
            if (!contains(inner_region, s)) order.push_back(s);
        const std::size_t n_outer_only = order.size();
        for (const auto& s : inner_region) order.push_back(s);
        QuadratureEngine outer_engine(outer, eta, order);
        QuadratureEngine inner_engine(inner, eta);
        std::vector<std::size_t> key;
        bool have = false;
        double cached = 0.0;
        std::vector<Observable> one{f};
        auto est = outer_engine.integrate(
            eta.storage(), 2, [&](std::span<const SitePoint> st, std::span<const std::size_t> idx, std::span<double> out) {
                auto head = idx.first(n_outer_only);
                if (!have || !std::equal(head.begin(), head.end(), key.begin(), key.end())) {
                    cached = inner_engine.expectations(st, one)[0].value;
                    key.assign(head.begin(), head.end());
                    have = true;
                }
                out[0] = cached;
                out[1] = f.evaluate(st, f_slots);
            });
        r.composed = est[0];
        r.direct = est[1];
        r.difference = {est[0].value - est[1].value, est[0].error + est[1].error, EstimateKind::QuadratureBound,
                        est[0].n_effective};
        return r;
    }

    if (inner_region.size() > kMaxQuadratureSites) throw CostGuardError("inner kernel too large for quadrature");
    GibbsKernel sampler = outer;
    sampler.engine = EngineKind::Mcmc;
    QuadratureEngine inner_engine(inner, eta);
    std::vector<Observable> one{f};
    auto res = run_mcmc(sampler, eta, 3, [&](const Configuration& cfg, std::span<double> out) {
        double in = inner_engine.expectations(cfg.storage(), one)[0].value;
        double direct = f.evaluate(cfg.storage(), f_slots);
        out[0] = in;
        out[1] = direct;
        out[2] = in - direct;
    });
    r.composed = res.estimates[0];
    r.direct = res.estimates[1];
    r.difference = res.estimates[2];
    return r;
}

// Checks the Metropolis identity A(x->x') / A(x'->x) = exp(-beta dH) on random
// (state, proposal) pairs. Returns the largest relative deviation.
inline double detailed_balance_audit(const GibbsKernel& kernel, const Configuration& eta, std::size_t pairs,
                                     std::uint64_t seed) {
    GibbsKernel k = kernel;
    k.mcmc.seed = seed;
    MetropolisChain chain(k, eta, RandomStream::for_stream(seed, kAuditStream));
    if (chain.region_size() == 0) return 0.0;
    double worst = 0.0;
    for (std::size_t n = 0; n < pairs; ++n) {
        for (std::size_t s = 0; s < chain.region_size(); ++s)
            chain.state().set(chain.region_site(s), kernel.manifold.uniform_sample(chain.rng()));
        auto site = static_cast<std::size_t>(chain.rng().bits() % chain.region_size());
        SitePoint old = chain.state().at(chain.region_site(site));
        SitePoint prop = chain.propose(site);
        double dh_fwd = chain.delta_energy(site, prop);
        chain.state().set(chain.region_site(site), prop);
        double dh_bwd = chain.delta_energy(site, old);
        double a_fwd = MetropolisChain::acceptance_probability(dh_fwd, kernel.beta);
        double a_bwd = MetropolisChain::acceptance_probability(dh_bwd, kernel.beta);
        double target = std::exp(-kernel.beta * dh_fwd);
        worst = std::max(worst, std::abs(a_fwd / a_bwd - target) / target);
    }
    return worst;
}

} // namespace kmslab
