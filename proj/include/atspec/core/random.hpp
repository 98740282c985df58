// random.hpp: reproducible per-task random streams

#pragma once

#include <cstdint>
#include <random>

namespace atspec {

using Rng = std::mt19937_64;

/// SplitMix64 finaliser; maps (seed, stream index) to a well-mixed 64-bit seed
/// so that parallel and serial runs draw identical streams.
inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t index) {
    std::uint64_t z = base + 0x9E3779B97F4A7C15ULL * (index + 1);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

inline Rng make_rng(std::uint64_t base, std::uint64_t index) { return Rng(derive_seed(base, index)); }

/// Uniform double in [0,1) from the top 53 bits; independent of the standard
/// library's distribution implementations.
inline double uniform01(Rng& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

/// Binomial draw by summing Bernoulli trials; shot counts here are small.
inline int binomial_draw(Rng& rng, int trials, double p) {
    int k = 0;
    for (int i = 0; i < trials; ++i) k += uniform01(rng) < p ? 1 : 0;
    return k;
}

}  // namespace atspec
