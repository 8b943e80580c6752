#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace riskgame {

/// One-shot game in cost (minimization) convention. costs[i][a] is player i's
/// cost at joint action a, joint actions row-major with player 0 slowest.
struct StageGame {
    std::vector<int> actions;
    std::vector<std::vector<double>> costs;

    int num_players() const { return static_cast<int>(actions.size()); }
    int num_joint() const {
        int n = 1;
        for (int m : actions) n *= m;
        return n;
    }

    static StageGame bimatrix(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B) {
        if (A.rows() != B.rows() || A.cols() != B.cols())
            throw std::invalid_argument("bimatrix: A and B shapes differ");
        StageGame g;
        g.actions = {static_cast<int>(A.rows()), static_cast<int>(A.cols())};
        g.costs.assign(2, std::vector<double>(A.size()));
        for (int r = 0; r < A.rows(); ++r)
            for (int c = 0; c < A.cols(); ++c) {
                g.costs[0][r * A.cols() + c] = A(r, c);
                g.costs[1][r * A.cols() + c] = B(r, c);
            }
        return g;
    }

    Eigen::MatrixXd matrix(int i) const {
        if (num_players() != 2) throw std::invalid_argument("matrix: two-player game required");
        Eigen::MatrixXd M(actions[0], actions[1]);
        for (int r = 0; r < actions[0]; ++r)
            for (int c = 0; c < actions[1]; ++c) M(r, c) = costs[i][r * actions[1] + c];
        return M;
    }
};

using MixedProfile = std::vector<std::vector<double>>;

namespace detail {

inline std::vector<int> strides(const std::vector<int>& actions) {
    std::vector<int> s(actions.size(), 1);
    for (int i = static_cast<int>(actions.size()) - 2; i >= 0; --i) s[i] = s[i + 1] * actions[i + 1];
    return s;
}

/// Probability of joint action a, skipping player `skip` (pass -1 for none).
inline double profile_prob(const std::vector<int>& actions, const std::vector<int>& st,
                           const MixedProfile& x, int a, int skip) {
    double p = 1.0;
    for (std::size_t j = 0; j < actions.size(); ++j) {
        if (static_cast<int>(j) == skip) continue;
        p *= x[j][(a / st[j]) % actions[j]];
        if (p == 0.0) break;
    }
    return p;
}

}  // namespace detail

inline void check_stage_game(const StageGame& g) {
    if (g.actions.empty() || g.costs.size() != g.actions.size())
        throw std::invalid_argument("stage game: players/costs mismatch");
    for (const auto& c : g.costs) {
        if (static_cast<int>(c.size()) != g.num_joint()) throw std::invalid_argument("stage game: cost size mismatch");
        for (double v : c)
            if (!std::isfinite(v)) throw std::invalid_argument("stage game: non-finite cost");
    }
}

inline double nash_value(const StageGame& g, const MixedProfile& x, int i) {
    const auto st = detail::strides(g.actions);
    double v = 0.0;
    for (int a = 0; a < g.num_joint(); ++a) {
        const double p = detail::profile_prob(g.actions, st, x, a, -1);
        if (p != 0.0) v += p * g.costs[i][a];
    }
    return v;
}

/// Player i's expected cost of each own pure action against x^{-i}.
inline std::vector<double> action_costs(const StageGame& g, const MixedProfile& x, int i) {
    const auto st = detail::strides(g.actions);
    std::vector<double> out(g.actions[i], 0.0);
    for (int a = 0; a < g.num_joint(); ++a) {
        const double p = detail::profile_prob(g.actions, st, x, a, i);
        if (p != 0.0) out[(a / st[i]) % g.actions[i]] += p * g.costs[i][a];
    }
    return out;
}

/// max_i [C^i(x) - min_u C^i(u, x^{-i})]; at most eps iff x is an eps-Nash profile.
inline double best_unilateral_gain(const StageGame& g, const MixedProfile& x) {
    double gain = 0.0;
    for (int i = 0; i < g.num_players(); ++i) {
        const auto ac = action_costs(g, x, i);
        double cur = 0.0;
        for (int h = 0; h < g.actions[i]; ++h) cur += x[i][h] * ac[h];
        gain = std::max(gain, cur - *std::min_element(ac.begin(), ac.end()));
    }
    return gain;
}

namespace detail {

/// Tableau over labels 0..m+n-1 plus a right-hand side column.
struct Tableau {
    Eigen::MatrixXd T;
    std::vector<int> basis;
    std::vector<int> lex_cols;  // labels of the initial basis, used for lexicographic ties

    int rhs() const { return static_cast<int>(T.cols()) - 1; }

    /// Brings label `enter` into the basis and returns the label that leaves.
    std::optional<int> pivot(int enter) {
        int best = -1;
        for (int r = 0; r < T.rows(); ++r) {
            const double d = T(r, enter);
            if (d <= 1e-12) continue;
            if (best < 0 || lex_less(r, best, enter)) best = r;
        }
        if (best < 0) return std::nullopt;
        const double piv = T(best, enter);
        T.row(best) /= piv;
        for (int r = 0; r < T.rows(); ++r) {
            if (r == best) continue;
            const double f = T(r, enter);
            if (f != 0.0) T.row(r) -= f * T.row(best);
        }
        const int leaving = basis[best];
        basis[best] = enter;
        return leaving;
    }

private:
    bool lex_less(int r1, int r2, int col) const {
        const double d1 = T(r1, col), d2 = T(r2, col);
        auto cmp = [&](int c) {
            const double a = T(r1, c) / d1, b = T(r2, c) / d2;
            const double scale = std::max({1.0, std::abs(a), std::abs(b)});
            if (a < b - 1e-12 * scale) return -1;
            if (a > b + 1e-12 * scale) return 1;
            return 0;
        };
        if (int c = cmp(rhs())) return c < 0;
        for (int c0 : lex_cols)
            if (int c = cmp(c0)) return c < 0;
        return r1 < r2;
    }
};

inline std::uint64_t binomial(int n, int k) {
    std::uint64_t r = 1;
    for (int j = 1; j <= k; ++j) r = r * static_cast<std::uint64_t>(n - k + j) / static_cast<std::uint64_t>(j);
    return r;
}

}  // namespace detail

/// Solves the two-player indifference systems for support pair (I, J).
/// x is supported on I and makes player 1 indifferent over J; y is supported
/// on J and makes player 0 indifferent over I. Costs are minimized.
inline bool solve_support(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B, const std::vector<int>& I,
                          const std::vector<int>& J, std::vector<double>& x, std::vector<double>& y) {
    const int kI = static_cast<int>(I.size()), kJ = static_cast<int>(J.size());
    if (kI != kJ || kI == 0) return false;
    // y_J and value u: A(I,J) y_J - u 1 = 0, sum y = 1.
    Eigen::MatrixXd My = Eigen::MatrixXd::Zero(kI + 1, kJ + 1);
    Eigen::VectorXd ry = Eigen::VectorXd::Zero(kI + 1);
    for (int r = 0; r < kI; ++r) {
        for (int c = 0; c < kJ; ++c) My(r, c) = A(I[r], J[c]);
        My(r, kJ) = -1.0;
    }
    for (int c = 0; c < kJ; ++c) My(kI, c) = 1.0;
    ry(kI) = 1.0;
    Eigen::MatrixXd Mx = Eigen::MatrixXd::Zero(kJ + 1, kI + 1);
    Eigen::VectorXd rx = Eigen::VectorXd::Zero(kJ + 1);
    for (int c = 0; c < kJ; ++c) {
        for (int r = 0; r < kI; ++r) Mx(c, r) = B(I[r], J[c]);
        Mx(c, kI) = -1.0;
    }
    for (int r = 0; r < kI; ++r) Mx(kJ, r) = 1.0;
    rx(kJ) = 1.0;
    Eigen::FullPivLU<Eigen::MatrixXd> luy(My), lux(Mx);
    if (!luy.isInvertible() || !lux.isInvertible()) return false;
    const Eigen::VectorXd sy = luy.solve(ry), sx = lux.solve(rx);
    x.assign(A.rows(), 0.0);
    y.assign(A.cols(), 0.0);
    for (int r = 0; r < kI; ++r) x[I[r]] = sx(r);
    for (int c = 0; c < kJ; ++c) y[J[c]] = sy(c);
    return true;
}

namespace detail {

/// Re-solves the indifference systems on the supports to remove pivoting
/// round-off. Returns false if the system is singular or leaves the simplex.
inline bool polish_on_support(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B, std::vector<int> I,
                              std::vector<int> J, std::vector<double>& x, std::vector<double>& y) {
    std::vector<double> px, py;
    if (!solve_support(A, B, I, J, px, py)) return false;
    for (double v : px)
        if (v < -1e-12) return false;
    for (double v : py)
        if (v < -1e-12) return false;
    for (double& v : px) v = std::max(v, 0.0);
    for (double& v : py) v = std::max(v, 0.0);
    x = std::move(px);
    y = std::move(py);
    return true;
}

inline void normalize(std::vector<double>& p) {
    double s = 0.0;
    for (double v : p) s += v;
    for (double& v : p) v /= s;
}

}  // namespace detail

/// Lemke-Howson on a two-player cost game, dropping `initial_label` first
/// (labels 0..m-1 are row actions, m..m+n-1 column actions). Returns nullopt
/// when the pivot cap is hit or the endpoint is not an equilibrium.
inline std::optional<MixedProfile> lemke_howson(const StageGame& g, int initial_label = 0) {
    check_stage_game(g);
    if (g.num_players() != 2) throw std::invalid_argument("lemke_howson: two players required");
    const Eigen::MatrixXd A = g.matrix(0), B = g.matrix(1);
    const int m = static_cast<int>(A.rows()), n = static_cast<int>(A.cols());
    if (initial_label < 0 || initial_label >= m + n) throw std::out_of_range("lemke_howson: bad initial label");
    // Positive payoff matrices for the standard formulation.
    const Eigen::MatrixXd PA = (A.maxCoeff() + 1.0) - A.array();
    const Eigen::MatrixXd PB = (B.maxCoeff() + 1.0) - B.array();

    // Q: PA y + r = 1, labels r_i -> i, y_j -> m + j.
    detail::Tableau tq;
    tq.T = Eigen::MatrixXd::Zero(m, m + n + 1);
    for (int i = 0; i < m; ++i) {
        tq.T(i, i) = 1.0;
        for (int j = 0; j < n; ++j) tq.T(i, m + j) = PA(i, j);
        tq.T(i, m + n) = 1.0;
        tq.basis.push_back(i);
        tq.lex_cols.push_back(i);
    }
    // P: PB^T x + s = 1, labels x_i -> i, s_j -> m + j.
    detail::Tableau tp;
    tp.T = Eigen::MatrixXd::Zero(n, m + n + 1);
    for (int j = 0; j < n; ++j) {
        tp.T(j, m + j) = 1.0;
        for (int i = 0; i < m; ++i) tp.T(j, i) = PB(i, j);
        tp.T(j, m + n) = 1.0;
        tp.basis.push_back(m + j);
        tp.lex_cols.push_back(m + j);
    }

    const std::uint64_t cap = 2 * detail::binomial(m + n, m);
    bool in_p = initial_label < m;
    int enter = initial_label;
    std::uint64_t pivots = 0;
    while (true) {
        if (++pivots > cap) return std::nullopt;
        auto leaving = (in_p ? tp : tq).pivot(enter);
        if (!leaving) return std::nullopt;
        if (*leaving == initial_label) break;
        enter = *leaving;
        in_p = !in_p;
    }

    std::vector<double> x(m, 0.0), y(n, 0.0);
    for (int r = 0; r < n; ++r)
        if (tp.basis[r] < m) x[tp.basis[r]] = std::max(0.0, tp.T(r, m + n));
    for (int r = 0; r < m; ++r)
        if (tq.basis[r] >= m) y[tq.basis[r] - m] = std::max(0.0, tq.T(r, m + n));
    double sx = 0.0, sy = 0.0;
    for (double v : x) sx += v;
    for (double v : y) sy += v;
    if (!(sx > 0.0 && sy > 0.0)) return std::nullopt;
    detail::normalize(x);
    detail::normalize(y);

    std::vector<int> I, J;
    for (int i = 0; i < m; ++i)
        if (x[i] > 1e-12) I.push_back(i);
    for (int j = 0; j < n; ++j)
        if (y[j] > 1e-12) J.push_back(j);
    MixedProfile prof{x, y};
    std::vector<double> px, py;
    if (detail::polish_on_support(A, B, I, J, px, py)) {
        MixedProfile polished{px, py};
        if (best_unilateral_gain(g, polished) <= best_unilateral_gain(g, prof)) prof = std::move(polished);
    }
    if (best_unilateral_gain(g, prof) > 1e-8) return std::nullopt;
    return prof;
}

struct EnumerationResult {
    std::vector<MixedProfile> equilibria;
    bool degenerate = false;
};

/// All equilibria reachable by equal-size support enumeration, sorted
/// lexicographically by (x, y). Flags degeneracy when a support system is
/// singular or a profile has more best responses than its support size.
inline EnumerationResult enumerate_equilibria(const StageGame& g) {
    check_stage_game(g);
    if (g.num_players() != 2) throw std::invalid_argument("enumerate_equilibria: two players required");
    const Eigen::MatrixXd A = g.matrix(0), B = g.matrix(1);
    const int m = static_cast<int>(A.rows()), n = static_cast<int>(A.cols());
    if (m > 5 || n > 5) throw std::invalid_argument("enumerate_equilibria: at most 5 actions per player");
    const double scale = std::max({1.0, A.cwiseAbs().maxCoeff(), B.cwiseAbs().maxCoeff()});
    const double tol = 1e-9 * scale;

    EnumerationResult res;
    auto subsets = [](int total, int k) {
        std::vector<std::vector<int>> out;
        for (int mask = 0; mask < (1 << total); ++mask) {
            if (__builtin_popcount(static_cast<unsigned>(mask)) != k) continue;
            std::vector<int> s;
            for (int b = 0; b < total; ++b)
                if (mask & (1 << b)) s.push_back(b);
            out.push_back(std::move(s));
        }
        return out;
    };
    for (int k = 1; k <= std::min(m, n); ++k) {
        for (const auto& I : subsets(m, k)) {
            for (const auto& J : subsets(n, k)) {
                std::vector<double> x, y;
                if (!solve_support(A, B, I, J, x, y)) {
                    res.degenerate = true;
                    continue;
                }
                bool ok = true;
                for (double v : x) ok = ok && v >= -1e-12;
                for (double v : y) ok = ok && v >= -1e-12;
                if (!ok) continue;
                for (double& v : x) v = std::max(v, 0.0);
                for (double& v : y) v = std::max(v, 0.0);
                detail::normalize(x);
                detail::normalize(y);
                MixedProfile prof{x, y};
                if (best_unilateral_gain(g, prof) > 1e-8) continue;
                // Degeneracy: more pure best responses than the support size.
                for (int i = 0; i < 2; ++i) {
                    const auto ac = action_costs(g, prof, i);
                    const double best = *std::min_element(ac.begin(), ac.end());
                    int nbr = 0;
                    for (double c : ac) nbr += c <= best + tol;
                    if (nbr > k) res.degenerate = true;
                }
                bool dup = false;
                for (const auto& e : res.equilibria) {
                    double d = 0.0;
                    for (int i = 0; i < 2; ++i)
                        for (std::size_t h = 0; h < e[i].size(); ++h) d = std::max(d, std::abs(e[i][h] - prof[i][h]));
                    if (d < 1e-9) dup = true;
                }
                if (!dup) res.equilibria.push_back(std::move(prof));
            }
        }
    }
    std::sort(res.equilibria.begin(), res.equilibria.end());
    return res;
}

enum class EquilibriumKind { global_optimal, saddle, mixed_point, plain_nash };

inline std::string to_string(EquilibriumKind k) {
    switch (k) {
        case EquilibriumKind::global_optimal: return "global_optimal";
        case EquilibriumKind::saddle: return "saddle";
        case EquilibriumKind::mixed_point: return "mixed_point";
        case EquilibriumKind::plain_nash: return "plain_nash";
    }
    return "unknown";
}

struct EquilibriumClassification {
    EquilibriumKind kind = EquilibriumKind::plain_nash;
    std::vector<int> subset;  ///< players in I' when kind == mixed_point
    double tol = 0.0;
};

/// Classifies an equilibrium profile. Per player i:
///   global   - C^i(x) equals the minimum of C^i over all profiles;
///   saddle   - C^i(x^i, u^{-i}) <= C^i(x) for every deviation u^{-i} of the others;
///   reverse  - C^i(x) <= C^i(x^i, u^{-i}) for every such deviation.
/// All global gives global_optimal, all saddle gives saddle, a nonempty proper
/// saddle subset with every other player reverse gives mixed_point(subset).
/// Pure profiles suffice for all three checks since C^i is multilinear.
inline EquilibriumClassification classify(const StageGame& g, const MixedProfile& x, double tol) {
    check_stage_game(g);
    if (best_unilateral_gain(g, x) > tol) throw std::invalid_argument("classify: profile is not an equilibrium");
    const int np = g.num_players();
    const auto st = detail::strides(g.actions);
    std::vector<bool> glob(np), sad(np), rev(np);
    for (int i = 0; i < np; ++i) {
        const double ci = nash_value(g, x, i);
        const double gmin = *std::min_element(g.costs[i].begin(), g.costs[i].end());
        glob[i] = ci <= gmin + tol;
        // C^i(x^i, u^{-i}) for each pure u^{-i}: joint actions with player i's digit 0.
        bool s_ok = true, r_ok = true;
        for (int a = 0; a < g.num_joint(); ++a) {
            if ((a / st[i]) % g.actions[i] != 0) continue;
            double dev = 0.0;
            for (int h = 0; h < g.actions[i]; ++h) dev += x[i][h] * g.costs[i][a + h * st[i]];
            s_ok = s_ok && dev <= ci + tol;
            r_ok = r_ok && ci <= dev + tol;
        }
        sad[i] = s_ok;
        rev[i] = r_ok;
    }
    EquilibriumClassification out;
    out.tol = tol;
    if (std::all_of(glob.begin(), glob.end(), [](bool b) { return b; })) {
        out.kind = EquilibriumKind::global_optimal;
        return out;
    }
    if (std::all_of(sad.begin(), sad.end(), [](bool b) { return b; })) {
        out.kind = EquilibriumKind::saddle;
        return out;
    }
    std::vector<int> subset;
    bool rest_reverse = true;
    for (int i = 0; i < np; ++i) {
        if (sad[i]) subset.push_back(i);
        else rest_reverse = rest_reverse && rev[i];
    }
    if (!subset.empty() && static_cast<int>(subset.size()) < np && rest_reverse) {
        out.kind = EquilibriumKind::mixed_point;
        out.subset = std::move(subset);
        return out;
    }
    out.kind = EquilibriumKind::plain_nash;
    return out;
}

enum class EquilibriumPolicy { first_lemke_howson, lowest_total_cost };

inline MixedProfile pick_equilibrium(const StageGame& g, EquilibriumPolicy policy) {
    if (g.num_players() != 2) throw std::invalid_argument("pick_equilibrium: two players required");
    if (policy == EquilibriumPolicy::first_lemke_howson) {
        if (auto lh = lemke_howson(g, 0)) return *lh;
        auto all = enumerate_equilibria(g);
        if (all.equilibria.empty()) throw std::runtime_error("pick_equilibrium: no equilibrium found");
        return all.equilibria.front();
    }
    auto all = enumerate_equilibria(g);
    if (all.equilibria.empty()) {
        if (auto lh = lemke_howson(g, 0)) return *lh;
        throw std::runtime_error("pick_equilibrium: no equilibrium found");
    }
    std::size_t best = 0;
    double best_total = std::numeric_limits<double>::infinity();
    for (std::size_t e = 0; e < all.equilibria.size(); ++e) {
        const double total = nash_value(g, all.equilibria[e], 0) + nash_value(g, all.equilibria[e], 1);
        if (total < best_total) {
            best_total = total;
            best = e;
        }
    }
    return all.equilibria[best];
}

}  // namespace riskgame
