#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "riskgame/game_model.hpp"
#include "riskgame/risk.hpp"
#include "riskgame/stage_game.hpp"

namespace riskgame {

/// How the one-step CVaR is taken at a state.
///   joint      - CVaR of c(s,A) + gamma v(S') under the joint (action, next
///                state) distribution P_s;
///   per_action - expectation over the mixed joint action of
///                c(s,a) + gamma CVaR(v(S') | s, a).
/// The two coincide for pure profiles and for alpha = 0.
enum class RiskScope { joint, per_action };

/// v[i][s].
using ValueFunction = std::vector<std::vector<double>>;

struct DpOptions {
    RiskScope scope = RiskScope::joint;
    long long max_iters = 100000;
};

class ConvergenceError : public std::runtime_error {
public:
    ConvergenceError(const std::string& what, double gap) : std::runtime_error(what), gap_(gap) {}
    double gap() const { return gap_; }

private:
    double gap_;
};

namespace detail {

inline void check_alphas(const GameSpec& g, std::span<const double> alphas) {
    if (static_cast<int>(alphas.size()) != g.num_players())
        throw std::invalid_argument("risk: one alpha per player required");
    for (double a : alphas) check_alpha(a);
}

/// rho[s * J + a] = CVaR_alpha(v(S') | s, a).
inline std::vector<double> next_state_cvar(const GameSpec& g, std::span<const double> v, double alpha) {
    std::vector<double> rho(static_cast<std::size_t>(g.num_states()) * g.num_joint());
    for (int s = 0; s < g.num_states(); ++s)
        for (int a = 0; a < g.num_joint(); ++a) rho[static_cast<std::size_t>(s) * g.num_joint() + a] = cvar_exact(v, g.row(s, a), alpha);
    return rho;
}

using Override = std::optional<std::pair<int, std::span<const double>>>;

inline double joint_scope_risk(const GameSpec& g, const MultiStrategy& x, const Override& ovr,
                               std::span<const double> v, int s, int i, double alpha,
                               std::vector<double>& atoms, std::vector<double>& probs) {
    atoms.clear();
    probs.clear();
    const double gamma = g.discount();
    for (int a = 0; a < g.num_joint(); ++a) {
        const double pa = joint_action_prob(g, x, s, a, ovr);
        if (pa == 0.0) continue;
        const double c = g.cost(i, s, a);
        auto r = g.row(s, a);
        for (int k = 0; k < g.num_states(); ++k) {
            if (r[k] == 0.0) continue;
            atoms.push_back(c + gamma * v[k]);
            probs.push_back(pa * r[k]);
        }
    }
    return cvar_exact(atoms, probs, alpha);
}

inline double per_action_risk(const GameSpec& g, const MultiStrategy& x, const Override& ovr,
                              std::span<const double> rho, int s, int i) {
    double total = 0.0;
    for (int a = 0; a < g.num_joint(); ++a) {
        const double pa = joint_action_prob(g, x, s, a, ovr);
        if (pa == 0.0) continue;
        total += pa * (g.cost(i, s, a) + g.discount() * rho[static_cast<std::size_t>(s) * g.num_joint() + a]);
    }
    return total;
}

inline double sup_diff(std::span<const double> a, std::span<const double> b) {
    double d = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) d = std::max(d, std::abs(a[k] - b[k]));
    return d;
}

}  // namespace detail

/// Stage risk psi_s^i: the one-step risk of player i at s under x, with
/// player i's distribution optionally replaced by `u`.
inline double stage_risk(const GameSpec& g, std::span<const double> alphas, const MultiStrategy& x,
                         std::optional<std::span<const double>> u, std::span<const double> v, int s, int i,
                         RiskScope scope = RiskScope::joint) {
    detail::check_alphas(g, alphas);
    if (static_cast<int>(v.size()) != g.num_states()) throw std::invalid_argument("stage_risk: value size mismatch");
    detail::Override ovr;
    if (u) {
        if (static_cast<int>(u->size()) != g.num_actions(i)) throw std::invalid_argument("stage_risk: override size mismatch");
        ovr = std::make_pair(i, *u);
    }
    if (scope == RiskScope::joint) {
        std::vector<double> atoms, probs;
        return detail::joint_scope_risk(g, x, ovr, v, s, i, alphas[i], atoms, probs);
    }
    double total = 0.0;
    for (int a = 0; a < g.num_joint(); ++a) {
        const double pa = joint_action_prob(g, x, s, a, ovr);
        if (pa == 0.0) continue;
        total += pa * (g.cost(i, s, a) + g.discount() * cvar_exact(v, g.row(s, a), alphas[i]));
    }
    return total;
}

struct BellmanResult {
    std::vector<double> value;        ///< per state
    std::vector<int> argmin_action;   ///< minimizing own pure action per state
};

/// One application of [T_x v]^i: min over u_s^i of the stage risk.
///
/// The stage risk is concave in u_s^i under either scope (CVaR is concave in
/// the distribution, which is linear in u), so the minimum over the simplex
/// is attained at a pure action. Ties go to the lowest index.
inline BellmanResult bellman_min(const GameSpec& g, std::span<const double> alphas, const MultiStrategy& x,
                                 std::span<const double> v, int i, RiskScope scope = RiskScope::joint) {
    detail::check_alphas(g, alphas);
    const int n = g.num_actions(i);
    BellmanResult out;
    out.value.assign(g.num_states(), 0.0);
    out.argmin_action.assign(g.num_states(), 0);
    std::vector<double> rho;
    if (scope == RiskScope::per_action) rho = detail::next_state_cvar(g, v, alphas[i]);
    std::vector<double> atoms, probs, e(n, 0.0);
    for (int s = 0; s < g.num_states(); ++s) {
        double best = std::numeric_limits<double>::infinity();
        for (int h = 0; h < n; ++h) {
            std::fill(e.begin(), e.end(), 0.0);
            e[h] = 1.0;
            const detail::Override ovr = std::make_pair(i, std::span<const double>(e));
            const double val = scope == RiskScope::joint
                                   ? detail::joint_scope_risk(g, x, ovr, v, s, i, alphas[i], atoms, probs)
                                   : detail::per_action_risk(g, x, ovr, rho, s, i);
            if (val < best) {
                best = val;
                out.argmin_action[s] = h;
            }
        }
        out.value[s] = best;
    }
    return out;
}

/// Applies the fixed-strategy recursion once: J <- psi(x, v).
inline std::vector<double> bellman_fixed(const GameSpec& g, std::span<const double> alphas, const MultiStrategy& x,
                                         std::span<const double> v, int i, RiskScope scope = RiskScope::joint) {
    std::vector<double> out(g.num_states());
    std::vector<double> rho;
    if (scope == RiskScope::per_action) rho = detail::next_state_cvar(g, v, alphas[i]);
    std::vector<double> atoms, probs;
    for (int s = 0; s < g.num_states(); ++s) {
        out[s] = scope == RiskScope::joint ? detail::joint_scope_risk(g, x, {}, v, s, i, alphas[i], atoms, probs)
                                           : detail::per_action_risk(g, x, {}, rho, s, i);
    }
    return out;
}

struct BestResponse {
    std::vector<double> value;
    std::vector<std::vector<double>> strategy;  ///< per state, distribution over A^i
    long long iterations = 0;
};

namespace detail {

template <class Step>
std::vector<double> value_iterate(const GameSpec& g, double tol, long long max_iters, Step step, long long& iters) {
    if (!(tol > 0.0)) throw std::invalid_argument("value iteration: tol must be positive");
    const double gamma = g.discount();
    const double stop = tol * (1.0 - gamma) / gamma;
    std::vector<double> v(g.num_states(), 0.0);
    for (iters = 1; iters <= max_iters; ++iters) {
        std::vector<double> next = step(v);
        const double d = sup_diff(next, v);
        v = std::move(next);
        if (d < stop) return v;
    }
    throw ConvergenceError("value iteration: iteration cap exceeded", stop);
}

}  // namespace detail

/// Player i's optimal value against frozen x^{-i}, accurate to tol in sup norm.
inline BestResponse best_response_value(const GameSpec& g, std::span<const double> alphas, const MultiStrategy& x,
                                        int i, double tol, const DpOptions& opt = {}) {
    check_strategy(g, x);
    BestResponse br;
    br.value = detail::value_iterate(
        g, tol, opt.max_iters,
        [&](const std::vector<double>& v) { return bellman_min(g, alphas, x, v, i, opt.scope).value; },
        br.iterations);
    const auto arg = bellman_min(g, alphas, x, br.value, i, opt.scope).argmin_action;
    br.strategy.assign(g.num_states(), std::vector<double>(g.num_actions(i), 0.0));
    for (int s = 0; s < g.num_states(); ++s) br.strategy[s][arg[s]] = 1.0;
    return br;
}

/// J^i(x): fixed point of the un-minimized recursion.
inline std::vector<double> evaluate_fixed(const GameSpec& g, std::span<const double> alphas, const MultiStrategy& x,
                                          int i, double tol, const DpOptions& opt = {}) {
    check_strategy(g, x);
    long long iters = 0;
    return detail::value_iterate(
        g, tol, opt.max_iters,
        [&](const std::vector<double>& v) { return bellman_fixed(g, alphas, x, v, i, opt.scope); }, iters);
}

struct VerifyReport {
    std::vector<double> gaps;  ///< per player max_s [J_s^i(x) - min_u J_s^i(u, x^{-i})]
    std::vector<std::vector<double>> values;       ///< J^i(x)
    std::vector<std::vector<double>> br_values;    ///< best-response values
    double tol = 0.0;
    bool pass = false;
};

inline VerifyReport verify_equilibrium(const GameSpec& g, std::span<const double> alphas, const MultiStrategy& x,
                                       double tol, const DpOptions& opt = {}) {
    const double inner = std::min(1e-9, tol / 100.0);
    VerifyReport rep;
    rep.tol = tol;
    rep.pass = true;
    for (int i = 0; i < g.num_players(); ++i) {
        auto J = evaluate_fixed(g, alphas, x, i, inner, opt);
        auto br = best_response_value(g, alphas, x, i, inner, opt);
        double gap = -std::numeric_limits<double>::infinity();
        for (int s = 0; s < g.num_states(); ++s) gap = std::max(gap, J[s] - br.value[s]);
        rep.gaps.push_back(gap);
        rep.values.push_back(std::move(J));
        rep.br_values.push_back(std::move(br.value));
        rep.pass = rep.pass && gap < tol;
    }
    return rep;
}

struct FixedPointConfig {
    double damping = 0.5;
    double damping_decay = 0.0;  ///< theta_k = damping / (1 + decay * k)
    int max_rounds = 200;
    double tol = 1e-3;
    DpOptions dp;
};

struct FixedPointResult {
    MultiStrategy x;
    VerifyReport report;
    int rounds = 0;
};

/// Damped simultaneous best-response iteration x <- (1 - theta) x + theta BR(x).
/// A heuristic; the outcome is certified only by the returned report.
inline FixedPointResult fixed_point_search(const GameSpec& g, std::span<const double> alphas, MultiStrategy x0,
                                           const FixedPointConfig& cfg) {
    if (!(cfg.damping > 0.0 && cfg.damping <= 1.0)) throw std::invalid_argument("fixed_point_search: damping in (0,1]");
    FixedPointResult res;
    res.x = std::move(x0);
    const double inner = std::min(1e-9, cfg.tol / 100.0);
    for (res.rounds = 1;; ++res.rounds) {
        res.report = verify_equilibrium(g, alphas, res.x, cfg.tol, cfg.dp);
        if (res.report.pass || res.rounds >= cfg.max_rounds) break;
        const double theta = cfg.damping / (1.0 + cfg.damping_decay * (res.rounds - 1));
        MultiStrategy next = res.x;
        for (int i = 0; i < g.num_players(); ++i) {
            auto br = best_response_value(g, alphas, res.x, i, inner, cfg.dp);
            for (int s = 0; s < g.num_states(); ++s)
                for (int h = 0; h < g.num_actions(i); ++h)
                    next.probs[i][s][h] = (1.0 - theta) * res.x.probs[i][s][h] + theta * br.strategy[s][h];
        }
        res.x = std::move(next);
    }
    return res;
}

/// Stage game at s formed by Q^i(s, a) = c^i(s,a) + gamma CVaR(v^i(S') | s, a).
inline StageGame model_stage_game(const GameSpec& g, std::span<const double> alphas, const ValueFunction& v, int s) {
    StageGame sg;
    sg.actions = g.actions();
    sg.costs.assign(g.num_players(), std::vector<double>(g.num_joint()));
    for (int i = 0; i < g.num_players(); ++i)
        for (int a = 0; a < g.num_joint(); ++a)
            sg.costs[i][a] = g.cost(i, s, a) + g.discount() * cvar_exact(v[i], g.row(s, a), alphas[i]);
    return sg;
}

struct NashIterationResult {
    MultiStrategy x;
    ValueFunction v;
    int iterations = 0;
    bool converged = false;
};

/// Model-based Nash value iteration under the per-action scope: solve the
/// stage game of the current values at every state and back up the Nash
/// values. A fixed point is a stationary equilibrium of that model.
inline NashIterationResult stage_nash_iteration(const GameSpec& g, std::span<const double> alphas,
                                                EquilibriumPolicy policy, double tol, int max_iters = 10000) {
    detail::check_alphas(g, alphas);
    if (g.num_players() != 2) throw std::invalid_argument("stage_nash_iteration: two players required");
    NashIterationResult res;
    res.v.assign(g.num_players(), std::vector<double>(g.num_states(), 0.0));
    res.x = MultiStrategy::uniform(g);
    for (res.iterations = 1; res.iterations <= max_iters; ++res.iterations) {
        ValueFunction next = res.v;
        for (int s = 0; s < g.num_states(); ++s) {
            const StageGame sg = model_stage_game(g, alphas, res.v, s);
            const MixedProfile prof = pick_equilibrium(sg, policy);
            for (int i = 0; i < g.num_players(); ++i) {
                res.x.probs[i][s] = prof[i];
                next[i][s] = nash_value(sg, prof, i);
            }
        }
        double d = 0.0;
        for (int i = 0; i < g.num_players(); ++i) d = std::max(d, detail::sup_diff(next[i], res.v[i]));
        res.v = std::move(next);
        if (d < tol * (1.0 - g.discount()) / g.discount()) {
            res.converged = true;
            break;
        }
    }
    return res;
}

}  // namespace riskgame
