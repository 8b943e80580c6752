#pragma once

#include <cmath>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "riskgame/rng.hpp"

namespace riskgame {

constexpr double kMassTol = 1e-12;

/// Finite Markov game {I, S, A, P, c, gamma}.
///
/// Joint actions are dense indices in row-major order over players, player 0
/// varying slowest. The kernel is stored as kernel[(s * J + a) * S + k] and
/// costs as costs[(i * S + s) * J + a], where J is the joint-action count.
class GameSpec {
public:
    GameSpec() = default;

    GameSpec(int num_states, std::vector<int> actions, double discount)
        : num_states_(num_states), actions_(std::move(actions)), discount_(discount) {
        if (num_states_ <= 0) throw std::invalid_argument("GameSpec: need at least one state");
        if (actions_.empty()) throw std::invalid_argument("GameSpec: need at least one player");
        strides_.assign(actions_.size(), 1);
        num_joint_ = 1;
        for (int i = static_cast<int>(actions_.size()) - 1; i >= 0; --i) {
            if (actions_[i] <= 0) throw std::invalid_argument("GameSpec: empty action set");
            strides_[i] = num_joint_;
            num_joint_ *= actions_[i];
        }
        kernel_.assign(static_cast<std::size_t>(num_states_) * num_joint_ * num_states_, 0.0);
        costs_.assign(actions_.size() * num_states_ * num_joint_, 0.0);
    }

    int num_players() const { return static_cast<int>(actions_.size()); }
    int num_states() const { return num_states_; }
    int num_joint() const { return num_joint_; }
    int num_actions(int i) const { return actions_.at(i); }
    const std::vector<int>& actions() const { return actions_; }
    double discount() const { return discount_; }
    void set_discount(double g) { discount_ = g; }

    /// Action of player i inside joint action a.
    int own_action(int a, int i) const { return (a / strides_[i]) % actions_[i]; }

    /// Joint index with player i's component replaced by h.
    int with_action(int a, int i, int h) const {
        return a + (h - own_action(a, i)) * strides_[i];
    }

    int encode(std::span<const int> profile) const {
        if (profile.size() != actions_.size())
            throw std::invalid_argument("encode: profile length mismatch");
        int a = 0;
        for (std::size_t i = 0; i < profile.size(); ++i) {
            if (profile[i] < 0 || profile[i] >= actions_[i])
                throw std::out_of_range("encode: action out of range");
            a += profile[i] * strides_[i];
        }
        return a;
    }

    std::vector<int> decode(int a) const {
        std::vector<int> out(actions_.size());
        for (std::size_t i = 0; i < actions_.size(); ++i) out[i] = own_action(a, static_cast<int>(i));
        return out;
    }

    double& P(int s, int a, int k) { return kernel_[kidx(s, a) + k]; }
    double P(int s, int a, int k) const { return kernel_[kidx(s, a) + k]; }
    std::span<const double> row(int s, int a) const {
        return {kernel_.data() + kidx(s, a), static_cast<std::size_t>(num_states_)};
    }

    double& cost(int i, int s, int a) { return costs_[cidx(i, s, a)]; }
    double cost(int i, int s, int a) const { return costs_[cidx(i, s, a)]; }

    const std::vector<double>& kernel_data() const { return kernel_; }
    const std::vector<double>& cost_data() const { return costs_; }

    double max_abs_cost() const {
        double m = 0.0;
        for (double c : costs_) m = std::max(m, std::abs(c));
        return m;
    }

private:
    std::size_t kidx(int s, int a) const {
        return (static_cast<std::size_t>(s) * num_joint_ + a) * num_states_;
    }
    std::size_t cidx(int i, int s, int a) const {
        return (static_cast<std::size_t>(i) * num_states_ + s) * num_joint_ + a;
    }

    int num_states_ = 0;
    int num_joint_ = 0;
    std::vector<int> actions_;
    std::vector<int> strides_;
    std::vector<double> kernel_;
    std::vector<double> costs_;
    double discount_ = 0.0;
};

/// Stationary mixed strategy: probs[i][s] is player i's distribution at s.
struct MultiStrategy {
    std::vector<std::vector<std::vector<double>>> probs;

    const std::vector<double>& at(int i, int s) const { return probs.at(i).at(s); }
    std::vector<double>& at(int i, int s) { return probs.at(i).at(s); }

    static MultiStrategy uniform(const GameSpec& g) {
        MultiStrategy x;
        x.probs.resize(g.num_players());
        for (int i = 0; i < g.num_players(); ++i) {
            const int n = g.num_actions(i);
            x.probs[i].assign(g.num_states(), std::vector<double>(n, 1.0 / n));
        }
        return x;
    }

    /// Every player plays a fixed pure action at every state.
    static MultiStrategy pure(const GameSpec& g, std::span<const int> profile) {
        MultiStrategy x;
        x.probs.resize(g.num_players());
        for (int i = 0; i < g.num_players(); ++i) {
            std::vector<double> p(g.num_actions(i), 0.0);
            p.at(profile[i]) = 1.0;
            x.probs[i].assign(g.num_states(), p);
        }
        return x;
    }
};

struct Violation {
    std::string message;
};

/// Distribution over (joint action, next state) at a fixed state, mass[a * S + k].
struct JointDistribution {
    int state = 0;
    int num_joint = 0;
    int num_states = 0;
    std::vector<double> mass;

    double operator()(int a, int k) const { return mass[static_cast<std::size_t>(a) * num_states + k]; }
};

inline std::vector<Violation> validate(const GameSpec& g) {
    std::vector<Violation> out;
    if (!(g.discount() > 0.0 && g.discount() < 1.0))
        out.push_back({"discount must lie in (0,1), got " + std::to_string(g.discount())});
    for (int s = 0; s < g.num_states(); ++s) {
        for (int a = 0; a < g.num_joint(); ++a) {
            double sum = 0.0;
            bool negative = false;
            for (double p : g.row(s, a)) {
                if (!(p >= 0.0)) negative = true;
                sum += p;
            }
            if (negative || std::abs(sum - 1.0) > kMassTol) {
                out.push_back({"kernel row (s=" + std::to_string(s) + ", a=" + std::to_string(a) +
                               ") invalid: sum " + std::to_string(sum)});
            }
            for (int i = 0; i < g.num_players(); ++i) {
                if (!std::isfinite(g.cost(i, s, a)))
                    out.push_back({"cost (i=" + std::to_string(i) + ", s=" + std::to_string(s) +
                                   ", a=" + std::to_string(a) + ") not finite"});
            }
        }
    }
    return out;
}

/// Checks dimensions and simplex constraints of a strategy; throws on failure.
inline void check_strategy(const GameSpec& g, const MultiStrategy& x, double tol = 1e-10) {
    if (static_cast<int>(x.probs.size()) != g.num_players())
        throw std::invalid_argument("strategy: player count mismatch");
    for (int i = 0; i < g.num_players(); ++i) {
        if (static_cast<int>(x.probs[i].size()) != g.num_states())
            throw std::invalid_argument("strategy: state count mismatch for player " + std::to_string(i));
        for (int s = 0; s < g.num_states(); ++s) {
            const auto& p = x.probs[i][s];
            if (static_cast<int>(p.size()) != g.num_actions(i))
                throw std::invalid_argument("strategy: action count mismatch for player " + std::to_string(i));
            double sum = 0.0;
            for (double v : p) {
                if (!(v >= -tol)) throw std::invalid_argument("strategy: negative probability");
                sum += v;
            }
            if (std::abs(sum - 1.0) > tol) throw std::invalid_argument("strategy: row does not sum to 1");
        }
    }
}

/// Probability of joint action a at state s, optionally overriding player i's
/// distribution by u.
inline double joint_action_prob(const GameSpec& g, const MultiStrategy& x, int s, int a,
                                const std::optional<std::pair<int, std::span<const double>>>& ovr = {}) {
    double p = 1.0;
    for (int j = 0; j < g.num_players(); ++j) {
        const int aj = g.own_action(a, j);
        p *= (ovr && ovr->first == j) ? ovr->second[aj] : x.probs[j][s][aj];
        if (p == 0.0) break;
    }
    return p;
}

/// P_s of the strategy profile, with optional override of one player's
/// distribution at s.
inline JointDistribution joint_distribution(const GameSpec& g, const MultiStrategy& x, int s,
                                            const std::optional<std::pair<int, std::span<const double>>>& ovr = {}) {
    if (static_cast<int>(x.probs.size()) != g.num_players())
        throw std::invalid_argument("joint_distribution: player count mismatch");
    for (int j = 0; j < g.num_players(); ++j) {
        if (static_cast<int>(x.probs[j].at(s).size()) != g.num_actions(j))
            throw std::invalid_argument("joint_distribution: action count mismatch");
    }
    if (ovr && (ovr->first < 0 || ovr->first >= g.num_players() ||
                static_cast<int>(ovr->second.size()) != g.num_actions(ovr->first)))
        throw std::invalid_argument("joint_distribution: override dimension mismatch");

    JointDistribution d;
    d.state = s;
    d.num_joint = g.num_joint();
    d.num_states = g.num_states();
    d.mass.assign(static_cast<std::size_t>(d.num_joint) * d.num_states, 0.0);
    for (int a = 0; a < g.num_joint(); ++a) {
        const double pa = joint_action_prob(g, x, s, a, ovr);
        if (pa == 0.0) continue;
        auto r = g.row(s, a);
        for (int k = 0; k < g.num_states(); ++k) d.mass[static_cast<std::size_t>(a) * d.num_states + k] = pa * r[k];
    }
    return d;
}

struct Transition {
    std::vector<double> costs;
    int next_state = 0;
};

inline Transition sample_transition(const GameSpec& g, int s, int a, Rng& rng) {
    Transition t;
    t.costs.resize(g.num_players());
    for (int i = 0; i < g.num_players(); ++i) t.costs[i] = g.cost(i, s, a);
    t.next_state = sample_index(rng, g.row(s, a));
    return t;
}

/// Samples a joint action from the profile at state s.
inline int sample_joint_action(const GameSpec& g, const MultiStrategy& x, int s, Rng& rng) {
    std::vector<int> prof(g.num_players());
    for (int i = 0; i < g.num_players(); ++i) prof[i] = sample_index(rng, x.probs[i][s]);
    return g.encode(prof);
}

}  // namespace riskgame
