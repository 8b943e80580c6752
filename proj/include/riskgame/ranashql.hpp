#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include "riskgame/game_model.hpp"
#include "riskgame/risk.hpp"
#include "riskgame/rng.hpp"
#include "riskgame/stage_game.hpp"

namespace riskgame {

/// Q[i][s * J + a].
struct QTable {
    int num_states = 0;
    int num_joint = 0;
    std::vector<std::vector<double>> q;

    QTable() = default;
    QTable(int players, int states, int joint)
        : num_states(states), num_joint(joint),
          q(players, std::vector<double>(static_cast<std::size_t>(states) * joint, 0.0)) {}

    int num_players() const { return static_cast<int>(q.size()); }
    double& at(int i, int s, int a) { return q[i][static_cast<std::size_t>(s) * num_joint + a]; }
    double at(int i, int s, int a) const { return q[i][static_cast<std::size_t>(s) * num_joint + a]; }

    StageGame stage_game(const std::vector<int>& actions, int s) const {
        StageGame g;
        g.actions = actions;
        g.costs.resize(q.size());
        for (std::size_t i = 0; i < q.size(); ++i)
            g.costs[i].assign(q[i].begin() + static_cast<std::ptrdiff_t>(s) * num_joint,
                              q[i].begin() + static_cast<std::ptrdiff_t>(s + 1) * num_joint);
        return g;
    }
};

/// How the SASP step index advances.
///   per_pair  - one clock per (state, joint action) pair, counting every
///               inner step ever applied to it;
///   per_outer - the inner index t = 1..T, restarted every outer iteration.
enum class SaspClock { per_pair, per_outer };

struct LearnerConfig {
    long long outer_iters = 100000;
    int inner_iters = 10;
    double epsilon = 0.2;
    double beta = 0.5;
    double sasp_constant = 0.0;  ///< <= 0 selects each spec's default
    double sasp_exponent = 0.75;
    double h_y = 1.0;
    double h_z = 1.0;
    double window_fraction = 0.5;
    SaspClock clock = SaspClock::per_pair;
    EquilibriumPolicy policy = EquilibriumPolicy::first_lemke_howson;
    std::uint64_t seed = 0;
    int initial_state = 0;
    long long trace_every = 0;  ///< <= 0 selects max(1, N / 1000)
    bool trace_wallclock = false;

    void validate() const {
        if (outer_iters < 0) throw std::invalid_argument("learner: outer_iters must be >= 0");
        if (inner_iters < 1) throw std::invalid_argument("learner: inner_iters must be >= 1");
        if (!(epsilon > 0.0 && epsilon <= 1.0)) throw std::invalid_argument("learner: epsilon must lie in (0,1]");
        if (!(beta > 0.0 && beta <= 1.0)) throw std::invalid_argument("learner: beta must lie in (0,1]");
        if (!(sasp_exponent > 0.5 && sasp_exponent <= 1.0))
            throw std::invalid_argument("learner: sasp_exponent must lie in (1/2,1]");
        if (!(h_y > 0.0 && h_z > 0.0)) throw std::invalid_argument("learner: h_y, h_z must be positive");
        if (!(window_fraction >= 0.0 && window_fraction <= 1.0))
            throw std::invalid_argument("learner: window_fraction must lie in [0,1]");
    }
};

/// CVaR specs whose eta interval covers every value the learner can produce:
/// Q starts at 0 and stays in the hull of {0} and [min c, max c] / (1 - gamma).
inline std::vector<SaddleRiskSpec> make_learner_specs(const GameSpec& g, std::span<const double> alphas) {
    if (static_cast<int>(alphas.size()) != g.num_players())
        throw std::invalid_argument("make_learner_specs: one alpha per player required");
    std::vector<SaddleRiskSpec> specs;
    for (int i = 0; i < g.num_players(); ++i) {
        double lo = 0.0, hi = 0.0;
        for (int s = 0; s < g.num_states(); ++s)
            for (int a = 0; a < g.num_joint(); ++a) {
                lo = std::min(lo, g.cost(i, s, a));
                hi = std::max(hi, g.cost(i, s, a));
            }
        const double scale = 1.0 / (1.0 - g.discount());
        specs.push_back(make_cvar_spec(alphas[i], lo * scale - 1.0, hi * scale + 1.0));
    }
    return specs;
}

/// theta = 1 / count^beta.
inline double learning_rate(long long count, double beta) {
    return 1.0 / std::pow(static_cast<double>(count), beta);
}

/// Returns (1 - theta) q_prev + theta q_hat with theta = 1 / count^beta.
inline double q_update(double q_prev, double q_hat, long long count, double beta) {
    const double theta = learning_rate(count, beta);
    return (1.0 - theta) * q_prev + theta * q_hat;
}

/// G(c + gamma v, y, z).
inline double q_hat(const SaddleRiskSpec& spec, double cost, double v_next, double gamma,
                    std::span<const double> y, std::span<const double> z) {
    return spec.g(cost + gamma * v_next, y, z);
}

/// One projected SASP step at x = c + gamma v_next.
inline void sasp_inner_step(const SaddleRiskSpec& spec, double cost, double v_next, double gamma,
                            std::span<double> y, std::span<double> z, double step, double h_y, double h_z) {
    std::vector<double> gy(y.size()), gz(z.size());
    sasp_step(spec, cost + gamma * v_next, y, z, step, h_y, h_z, gy, gz);
}

struct TraceRow {
    long long n = 0;
    std::vector<double> q_delta;  ///< per player, max |Q change| since the previous row
    long long min_visits = 0;
    double wall_seconds = 0.0;
};

struct LearnerResult {
    QTable q;
    std::vector<long long> visits;  ///< number of updates per (s, a)
    MultiStrategy strategy;
    std::vector<TraceRow> trace;
};

class RaNashQL {
public:
    RaNashQL(const GameSpec& game, std::vector<SaddleRiskSpec> specs, LearnerConfig cfg)
        : g_(game), specs_(std::move(specs)), cfg_(cfg), rng_(cfg.seed),
          q_(game.num_players(), game.num_states(), game.num_joint()) {
        cfg_.validate();
        if (g_.num_players() != 2) throw std::invalid_argument("RaNashQL: two players required");
        if (static_cast<int>(specs_.size()) != g_.num_players())
            throw std::invalid_argument("RaNashQL: one risk spec per player required");
        if (cfg_.initial_state < 0 || cfg_.initial_state >= g_.num_states())
            throw std::out_of_range("RaNashQL: initial state out of range");
        const std::size_t pairs = static_cast<std::size_t>(g_.num_states()) * g_.num_joint();
        visits_.assign(pairs, 0);
        cache_.assign(g_.num_states(), std::nullopt);
        saddle_.resize(g_.num_players());
        for (int i = 0; i < g_.num_players(); ++i) {
            const auto& sp = specs_[i];
            step_c_.push_back(cfg_.sasp_constant > 0.0 ? cfg_.sasp_constant : sp.default_step_constant());
            PairIterate init;
            init.y = sp.initial_y();
            init.z = sp.initial_z();
            init.reset_window();
            saddle_[i].assign(pairs, init);
        }
        state_ = cfg_.initial_state;
    }

    const QTable& q() const { return q_; }
    int state() const { return state_; }
    Rng& rng() { return rng_; }

    /// Cached equilibrium of the stage game (Q^i(s))_i.
    const MixedProfile& equilibrium(int s) {
        if (!cache_[s]) cache_[s] = pick_equilibrium(q_.stage_game(g_.actions(), s), cfg_.policy);
        return *cache_[s];
    }

    double nash_state_value(int s, int i) {
        const MixedProfile& x = equilibrium(s);
        double v = 0.0;
        for (int a = 0; a < g_.num_joint(); ++a) {
            const double p = x[0][g_.own_action(a, 0)] * x[1][g_.own_action(a, 1)];
            if (p != 0.0) v += p * q_.at(i, s, a);
        }
        return v;
    }

    /// Per player: uniform with probability epsilon, else a draw from the
    /// stage equilibrium at s.
    int choose_action(int s) {
        const MixedProfile& x = equilibrium(s);
        std::vector<int> prof(g_.num_players());
        for (int i = 0; i < g_.num_players(); ++i) {
            if (uniform01(rng_) < cfg_.epsilon) prof[i] = uniform_index(rng_, g_.num_actions(i));
            else prof[i] = sample_index(rng_, x[i]);
        }
        return g_.encode(prof);
    }

    /// One outer iteration (Steps 1-4). Returns the max |Q change| per player.
    std::vector<double> step() {
        const int s = state_;
        const int a = choose_action(s);
        const Transition first = sample_transition(g_, s, a, rng_);
        const std::size_t pair = static_cast<std::size_t>(s) * g_.num_joint() + a;
        const long long count = visits_[pair] + 1;
        const double theta = learning_rate(count, cfg_.beta);
        const double gamma = g_.discount();

        std::vector<double> q_new(g_.num_players());
        for (int i = 0; i < g_.num_players(); ++i) {
            PairIterate& it = saddle_[i][pair];
            if (cfg_.clock == SaspClock::per_outer) it.reset_window();
        }
        for (int t = 1; t <= cfg_.inner_iters; ++t) {
            const Transition tr = t == 1 ? first : sample_transition(g_, s, a, rng_);
            for (int i = 0; i < g_.num_players(); ++i) {
                const SaddleRiskSpec& sp = specs_[i];
                PairIterate& it = saddle_[i][pair];
                const double v_next = nash_state_value(tr.next_state, i);
                it.average(cfg_.window_fraction, avg_y_, avg_z_);
                const double qh = q_hat(sp, tr.costs[i], v_next, gamma, avg_y_, avg_z_);
                q_new[i] = (1.0 - theta) * q_.at(i, s, a) + theta * qh;
                const double lambda = step_c_[i] * std::pow(static_cast<double>(it.clock + 1), -cfg_.sasp_exponent);
                gy_.resize(it.y.size());
                gz_.resize(it.z.size());
                sasp_step(sp, tr.costs[i] + gamma * v_next, it.y, it.z, lambda, cfg_.h_y, cfg_.h_z, gy_, gz_);
                it.push(cfg_.window_fraction);
            }
        }
        std::vector<double> delta(g_.num_players());
        for (int i = 0; i < g_.num_players(); ++i) {
            delta[i] = std::abs(q_new[i] - q_.at(i, s, a));
            q_.at(i, s, a) = q_new[i];
        }
        visits_[pair] = count;
        cache_[s].reset();
        state_ = first.next_state;
        return delta;
    }

    LearnerResult run() {
        LearnerResult res;
        const long long every = cfg_.trace_every > 0 ? cfg_.trace_every : std::max(1LL, cfg_.outer_iters / 1000);
        const auto t0 = std::chrono::steady_clock::now();
        std::vector<double> window(g_.num_players(), 0.0);
        for (long long n = 1; n <= cfg_.outer_iters; ++n) {
            const auto d = step();
            for (int i = 0; i < g_.num_players(); ++i) window[i] = std::max(window[i], d[i]);
            if (n % every == 0 || n == cfg_.outer_iters) {
                TraceRow row;
                row.n = n;
                row.q_delta = window;
                row.min_visits = *std::min_element(visits_.begin(), visits_.end());
                if (cfg_.trace_wallclock)
                    row.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
                res.trace.push_back(std::move(row));
                std::fill(window.begin(), window.end(), 0.0);
            }
        }
        res.q = q_;
        res.visits = visits_;
        res.strategy = extract();
        return res;
    }

    MultiStrategy extract() {
        MultiStrategy x;
        x.probs.assign(g_.num_players(), std::vector<std::vector<double>>(g_.num_states()));
        for (int s = 0; s < g_.num_states(); ++s) {
            const MixedProfile& e = equilibrium(s);
            for (int i = 0; i < g_.num_players(); ++i) x.probs[i][s] = e[i];
        }
        return x;
    }

private:
    /// Saddle iterate of one (player, state, joint action) pair together with
    /// the prefix sums of its iterate chain that the suffix window can still
    /// reach. P(c) is the sum of chain iterates 1..c; P(base) is kept apart and
    /// P(base + 1..clock) are stored flattened by dimension.
    struct PairIterate {
        std::vector<double> y, z;
        std::vector<double> ysum, zsum;
        std::vector<double> ybase, zbase;  ///< P(base)
        long long clock = 0;               ///< steps taken on the current chain
        long long base = 0;

        void reset_window() {
            ysum.clear();
            zsum.clear();
            ybase.assign(y.size(), 0.0);
            zbase.assign(z.size(), 0.0);
            clock = 0;
            base = 0;
        }

        double prefix(const std::vector<double>& sum, const std::vector<double>& at_base, std::size_t d,
                      long long c, std::size_t k) const {
            return c == base ? at_base[k] : sum[static_cast<std::size_t>(c - base - 1) * d + k];
        }

        /// Appends the current iterate, then drops prefixes that windows of
        /// fraction f can no longer reach.
        void push(double f) {
            if (ybase.size() != y.size()) ybase.assign(y.size(), 0.0);
            if (zbase.size() != z.size()) zbase.assign(z.size(), 0.0);
            const std::size_t dy = y.size(), dz = z.size();
            for (std::size_t k = 0; k < dy; ++k) ysum.push_back(prefix(ysum, ybase, dy, clock, k) + y[k]);
            for (std::size_t k = 0; k < dz; ++k) zsum.push_back(prefix(zsum, zbase, dz, clock, k) + z[k]);
            ++clock;
            const long long keep = window_start(clock, f) - 1;
            if (keep - base < 64 || 2 * (keep - base) < clock - base) return;
            compact(ysum, ybase, dy, keep);
            compact(zsum, zbase, dz, keep);
            base = keep;
        }

        void compact(std::vector<double>& sum, std::vector<double>& at_base, std::size_t d, long long keep) {
            for (std::size_t k = 0; k < d; ++k) at_base[k] = prefix(sum, at_base, d, keep, k);
            sum.erase(sum.begin(), sum.begin() + static_cast<std::ptrdiff_t>((keep - base) * static_cast<long long>(d)));
        }

        /// Mean of chain iterates ceil(f c)..c; the current iterate when c = 0.
        void average(double f, std::vector<double>& ay, std::vector<double>& az) const {
            if (clock == 0) {
                ay = y;
                az = z;
                return;
            }
            const long long lo = window_start(clock, f);
            const double cnt = static_cast<double>(clock - lo + 1);
            const std::size_t dy = y.size(), dz = z.size();
            ay.resize(dy);
            az.resize(dz);
            for (std::size_t k = 0; k < dy; ++k)
                ay[k] = (prefix(ysum, ybase, dy, clock, k) - prefix(ysum, ybase, dy, lo - 1, k)) / cnt;
            for (std::size_t k = 0; k < dz; ++k)
                az[k] = (prefix(zsum, zbase, dz, clock, k) - prefix(zsum, zbase, dz, lo - 1, k)) / cnt;
        }
    };

    const GameSpec& g_;
    std::vector<SaddleRiskSpec> specs_;
    LearnerConfig cfg_;
    Rng rng_;
    QTable q_;
    std::vector<long long> visits_;
    std::vector<std::optional<MixedProfile>> cache_;
    std::vector<std::vector<PairIterate>> saddle_;
    std::vector<double> step_c_;
    std::vector<double> avg_y_, avg_z_, gy_, gz_;
    int state_ = 0;
};

inline LearnerResult run_ranashql(const GameSpec& g, std::vector<SaddleRiskSpec> specs, const LearnerConfig& cfg) {
    RaNashQL learner(g, std::move(specs), cfg);
    return learner.run();
}

/// Per state, the picked equilibrium of the stage game (Q^i(s))_i.
inline MultiStrategy extract_equilibrium(const QTable& q, const std::vector<int>& actions, EquilibriumPolicy policy) {
    MultiStrategy x;
    x.probs.assign(q.num_players(), std::vector<std::vector<double>>(q.num_states));
    for (int s = 0; s < q.num_states; ++s) {
        const MixedProfile e = pick_equilibrium(q.stage_game(actions, s), policy);
        for (int i = 0; i < q.num_players(); ++i) x.probs[i][s] = e[i];
    }
    return x;
}

/// (S A ln(S A / (delta eps)) / eps^2)^(1/beta) + (ln(sqrt(S A) / eps))^(1/(1-beta)),
/// with A the joint-action count.
inline double complexity_bound(double states, double joint_actions, double delta, double epsilon, double beta) {
    if (!(states > 0.0 && joint_actions > 0.0)) throw std::domain_error("complexity_bound: S and A must be positive");
    if (!(delta > 0.0 && delta < 1.0)) throw std::domain_error("complexity_bound: delta must lie in (0,1)");
    if (!(epsilon > 0.0)) throw std::domain_error("complexity_bound: epsilon must be positive");
    if (!(beta > 0.0 && beta < 1.0)) throw std::domain_error("complexity_bound: beta must lie in (0,1)");
    const double sa = states * joint_actions;
    const double base = sa * std::log(sa / (delta * epsilon)) / (epsilon * epsilon);
    if (base < 0.0) throw std::domain_error("complexity_bound: ln(S A/(delta eps)) is negative");
    const double first = std::pow(base, 1.0 / beta);
    const double l = std::log(std::sqrt(sa) / epsilon);
    if (l < 0.0) throw std::domain_error("complexity_bound: ln(sqrt(S A)/eps) is negative");
    return first + std::pow(l, 1.0 / (1.0 - beta));
}

}  // namespace riskgame
