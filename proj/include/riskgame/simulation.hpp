#pragma once

#include <cmath>
#include <cstdint>
#include <cstring>
#include <stdexcept>
#include <vector>

#include "riskgame/game_model.hpp"
#include "riskgame/parallel.hpp"
#include "riskgame/risk.hpp"
#include "riskgame/rng.hpp"

namespace riskgame {

struct CostSampleSet {
    std::vector<std::vector<double>> samples;  ///< [player][path]
    double discount = 0.0;
    int horizon = 0;
    std::uint64_t seed = 0;
    std::uint64_t strategy_hash = 0;
};

/// FNV-1a over the strategy's probabilities (bit patterns).
inline std::uint64_t strategy_hash(const MultiStrategy& x) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    auto mix = [&](const void* data, std::size_t n) {
        const auto* b = static_cast<const unsigned char*>(data);
        for (std::size_t k = 0; k < n; ++k) {
            h ^= b[k];
            h *= 0x100000001b3ULL;
        }
    };
    for (const auto& player : x.probs)
        for (const auto& row : player)
            for (double p : row) mix(&p, sizeof p);
    return h;
}

/// Smallest H with gamma^H * max|c| / (1 - gamma) < 1e-6.
inline int default_horizon(const GameSpec& g) {
    const double cmax = g.max_abs_cost();
    const double gamma = g.discount();
    if (cmax == 0.0) return 1;
    const double h = std::log(1e-6 * (1.0 - gamma) / cmax) / std::log(gamma);
    return std::max(1, static_cast<int>(std::floor(h)) + 1);
}

/// Discounted cost of n independent paths of length H from s0 under x.
/// Path k uses its own stream seeded from (seed, k), so the output does not
/// depend on the thread count.
inline CostSampleSet simulate_costs(const GameSpec& g, const MultiStrategy& x, int horizon, int n_samples, int s0,
                                    std::uint64_t seed) {
    check_strategy(g, x);
    if (horizon < 1) throw std::invalid_argument("simulate_costs: horizon must be >= 1");
    if (n_samples < 1) throw std::invalid_argument("simulate_costs: sample count must be >= 1");
    if (s0 < 0 || s0 >= g.num_states()) throw std::out_of_range("simulate_costs: initial state out of range");
    CostSampleSet out;
    out.samples.assign(g.num_players(), std::vector<double>(n_samples, 0.0));
    out.discount = g.discount();
    out.horizon = horizon;
    out.seed = seed;
    out.strategy_hash = strategy_hash(x);
    parallel_for(static_cast<std::size_t>(n_samples), [&](std::size_t path) {
        Rng rng(split_seed(seed, path));
        int s = s0;
        double disc = 1.0;
        std::vector<double> acc(g.num_players(), 0.0);
        for (int t = 0; t < horizon; ++t) {
            const int a = sample_joint_action(g, x, s, rng);
            for (int i = 0; i < g.num_players(); ++i) acc[i] += disc * g.cost(i, s, a);
            s = sample_index(rng, g.row(s, a));
            disc *= g.discount();
        }
        for (int i = 0; i < g.num_players(); ++i) out.samples[i][path] = acc[i];
    });
    return out;
}

struct PlayerStats {
    int player = 0;
    double mean = 0.0;
    double variance = 0.0;  ///< unbiased
    std::vector<double> cvar;  ///< one per requested alpha
};

inline std::vector<PlayerStats> stats(const CostSampleSet& set, const std::vector<double>& alphas) {
    std::vector<PlayerStats> out;
    for (std::size_t i = 0; i < set.samples.size(); ++i) {
        const auto& xs = set.samples[i];
        if (xs.empty()) throw std::invalid_argument("stats: empty sample set");
        PlayerStats ps;
        ps.player = static_cast<int>(i);
        double sum = 0.0;
        for (double v : xs) sum += v;
        ps.mean = sum / static_cast<double>(xs.size());
        double ss = 0.0;
        for (double v : xs) ss += (v - ps.mean) * (v - ps.mean);
        ps.variance = xs.size() > 1 ? ss / static_cast<double>(xs.size() - 1) : 0.0;
        for (double a : alphas) ps.cvar.push_back(empirical_cvar(xs, a));
        out.push_back(std::move(ps));
    }
    return out;
}

}  // namespace riskgame
