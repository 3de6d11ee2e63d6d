/*
 * Seedable random streams.
 *
 * One master seed drives every run. Stream k (chain k, or an auxiliary
 * purpose such as boundary randomization) is seeded with
 *     splitmix64(master + (k + 1) * 0x9E3779B97F4A7C15)
 * so adding or removing chains never changes the streams of the others.
 * Uniform variates are built from raw engine bits rather than
 * std::uniform_real_distribution, whose output is implementation-defined.
 */
#pragma once

#include <cstdint>
#include <random>

namespace kmslab {

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ull;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
    return x ^ (x >> 31);
}

// Well-known stream indices for non-chain randomness.
inline constexpr std::uint64_t kBoundaryStream = 0xB0B0;
inline constexpr std::uint64_t kAuditStream = 0xA0D1;
inline constexpr std::uint64_t kSupremumStream = 0x5E11;

class RandomStream {
public:
    explicit RandomStream(std::uint64_t seed) : engine_(seed) {}

    static RandomStream for_stream(std::uint64_t master_seed, std::uint64_t index) {
        return RandomStream(splitmix64(master_seed + (index + 1) * 0x9E3779B97F4A7C15ull));
    }

    // Uniform on [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    // Uniform on [lo, hi).
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    std::uint64_t bits() { return engine_(); }

private:
    std::mt19937_64 engine_;
};

} // namespace kmslab
