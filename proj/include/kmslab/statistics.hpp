/*
 * Estimates with provenance, and batch-means error bars for Markov chains.
 */
#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

namespace kmslab {

enum class EstimateKind { QuadratureBound, McStdErr };

inline std::string_view to_string(EstimateKind k) {
    return k == EstimateKind::QuadratureBound ? "quadrature" : "mc_stderr";
}

struct Estimate {
    double value = 0.0;
    double error = 0.0;
    EstimateKind kind = EstimateKind::QuadratureBound;
    double n_effective = 0.0;

    // value / error, with 0/0 read as 0.
    double z_score() const {
        if (error > 0) return value / error;
        return value == 0.0 ? 0.0 : std::copysign(INFINITY, value);
    }
};

inline constexpr std::size_t kDefaultBatches = 20;

// Splits a series of known length n into `batches` contiguous batches
// (sizes differ by at most one) and keeps running moments.
class BatchMeans {
public:
    BatchMeans(std::size_t n, std::size_t batches = kDefaultBatches)
        : n_(n), sums_(batches, 0.0), counts_(batches, 0) {}

    void add(double x) {
        std::size_t b = n_ ? std::min(sums_.size() - 1, count_ * sums_.size() / n_) : 0;
        sums_[b] += x;
        ++counts_[b];
        ++count_;
        double d = x - mean_;
        mean_ += d / static_cast<double>(count_);
        m2_ += d * (x - mean_);
    }

    std::size_t count() const { return count_; }
    double mean() const { return mean_; }
    double variance() const { return count_ > 1 ? m2_ / static_cast<double>(count_ - 1) : 0.0; }

    std::vector<double> batch_means() const {
        std::vector<double> out;
        for (std::size_t b = 0; b < sums_.size(); ++b)
            if (counts_[b]) out.push_back(sums_[b] / static_cast<double>(counts_[b]));
        return out;
    }

private:
    std::size_t n_;
    std::vector<double> sums_;
    std::vector<std::size_t> counts_;
    std::size_t count_ = 0;
    double mean_ = 0.0;
    double m2_ = 0.0;
};

// Pools the batches of several chains (in the given order) into one estimate:
// stderr = sd(batch means) / sqrt(#batches), n_eff = sample variance / stderr^2.
inline Estimate pooled_estimate(std::span<const BatchMeans* const> chains) {
    std::vector<double> means;
    std::size_t total = 0;
    double sum = 0.0;
    // combined variance via parallel moments
    double m2 = 0.0, mean = 0.0;
    for (const auto* c : chains) {
        for (double m : c->batch_means()) means.push_back(m);
        if (c->count() == 0) continue;
        double n_a = static_cast<double>(total), n_b = static_cast<double>(c->count());
        double delta = c->mean() - mean;
        mean += delta * n_b / (n_a + n_b);
        m2 += c->variance() * (n_b - 1) + delta * delta * n_a * n_b / (n_a + n_b);
        total += c->count();
        sum += c->mean() * n_b;
    }
    Estimate e;
    e.kind = EstimateKind::McStdErr;
    if (total == 0) return e;
    e.value = sum / static_cast<double>(total);
    const double k = static_cast<double>(means.size());
    if (means.size() > 1) {
        double bm = 0.0;
        for (double m : means) bm += m;
        bm /= k;
        double v = 0.0;
        for (double m : means) v += (m - bm) * (m - bm);
        v /= (k - 1);
        e.error = std::sqrt(v / k);
    }
    double var = total > 1 ? m2 / static_cast<double>(total - 1) : 0.0;
    e.n_effective = e.error > 0 ? var / (e.error * e.error) : static_cast<double>(total);
    return e;
}

} // namespace kmslab
