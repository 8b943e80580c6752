#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <stdexcept>

namespace riskgame {

/// Engine used everywhere a seeded stream is required. The std::mt19937_64
/// output sequence is fixed by the standard, so runs are reproducible across
/// toolchains as long as we avoid the implementation-defined distributions.
using Rng = std::mt19937_64;

/// Uniform double in [0, 1) built from the top 53 bits of one engine draw.
inline double uniform01(Rng& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

/// Uniform integer in [0, n). Uses rejection to stay unbiased.
inline int uniform_index(Rng& rng, int n) {
    if (n <= 0) throw std::invalid_argument("uniform_index: n must be positive");
    const auto bound = static_cast<std::uint64_t>(n);
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % bound;
    std::uint64_t r;
    do {
        r = rng();
    } while (r >= limit);
    return static_cast<int>(r % bound);
}

/// Draws an index from a probability vector by inverse CDF. Mass lost to
/// rounding is assigned to the last index with positive probability.
inline int sample_index(Rng& rng, std::span<const double> probs) {
    const double u = uniform01(rng);
    double acc = 0.0;
    int last_positive = -1;
    for (std::size_t k = 0; k < probs.size(); ++k) {
        if (probs[k] <= 0.0) continue;
        last_positive = static_cast<int>(k);
        acc += probs[k];
        if (u < acc) return last_positive;
    }
    if (last_positive < 0) throw std::invalid_argument("sample_index: no positive mass");
    return last_positive;
}

/// SplitMix64 finalizer; derives independent stream seeds from (seed, index).
inline std::uint64_t split_seed(std::uint64_t seed, std::uint64_t index) {
    std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (index + 1);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

}  // namespace riskgame
