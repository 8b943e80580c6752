#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "riskgame/dp_oracle.hpp"
#include "riskgame/game_model.hpp"
#include "riskgame/linprog.hpp"
#include "riskgame/parallel.hpp"
#include "riskgame/rng.hpp"

namespace riskgame {

/// Constraint families of the CVaR equilibrium system, per player i and state s:
///   value        v(s) = sum_a X(a) [c(a) + gamma sum_k t(k|a) v(k)]
///   per_action   v(s) <= sum_{a^-i} x^-i(a^-i) [c(h,a^-i) + gamma sum_k t(k|h,a^-i) v(k)]  for all h
///   dual_obj     v(s) >= sum_a X(a) [c(a) + m_a - sum_k n_ak P(k|a) / (1 - alpha)]
///   dual_feas    gamma v(k) <= m_a - n_ak                                              for all a, k
///   t_bounds     0 <= t(k|a) <= P(k|a) / (1 - alpha)
///   simplex      sum_k t(k|a) = 1,  sum_h x(h) = 1
///   signs        x >= 0,  n <= 0
enum Family { kValue, kPerAction, kDualObj, kDualFeas, kTBounds, kSimplex, kSigns, kNumFamilies };

inline const char* family_name(int f) {
    static const char* names[] = {"value", "per_action", "dual_obj", "dual_feas", "t_bounds", "simplex", "signs"};
    return names[f];
}

struct ResidualReport {
    std::array<double, kNumFamilies> family_max{};
    double aggregate = 0.0;
};

class MultilinearSystem {
public:
    MultilinearSystem(GameSpec game, std::vector<double> alphas) : g_(std::move(game)), alphas_(std::move(alphas)) {
        if (g_.num_players() != 2) throw std::invalid_argument("multilinear: only two-player games are supported");
        if (static_cast<int>(alphas_.size()) != 2) throw std::invalid_argument("multilinear: two alphas required");
        for (double a : alphas_) check_alpha(a);
        const int S = g_.num_states(), J = g_.num_joint();
        int off = 0;
        for (int i = 0; i < 2; ++i) {
            off_v_[i] = off;
            off += S;
            off_x_[i] = off;
            off += S * g_.num_actions(i);
            off_m_[i] = off;
            off += S * J;
            off_n_[i] = off;
            off += S * J * S;
            off_t_[i] = off;
            off += S * J * S;
        }
        size_ = off;
    }

    const GameSpec& game() const { return g_; }
    const std::vector<double>& alphas() const { return alphas_; }
    int size() const { return size_; }

    int iv(int i, int s) const { return off_v_[i] + s; }
    int ix(int i, int s, int h) const { return off_x_[i] + s * g_.num_actions(i) + h; }
    int im(int i, int s, int a) const { return off_m_[i] + s * g_.num_joint() + a; }
    int in(int i, int s, int a, int k) const { return off_n_[i] + (s * g_.num_joint() + a) * g_.num_states() + k; }
    int it(int i, int s, int a, int k) const { return off_t_[i] + (s * g_.num_joint() + a) * g_.num_states() + k; }

    double cap(int i, int s, int a, int k) const { return g_.P(s, a, k) / (1.0 - alphas_[i]); }

    /// Point with the given strategies and values; auxiliaries zero.
    Eigen::VectorXd make_point(const MultiStrategy& x, const ValueFunction& v) const {
        check_strategy(g_, x);
        Eigen::VectorXd p = Eigen::VectorXd::Zero(size_);
        for (int i = 0; i < 2; ++i)
            for (int s = 0; s < g_.num_states(); ++s) {
                p(iv(i, s)) = v.at(i).at(s);
                for (int h = 0; h < g_.num_actions(i); ++h) p(ix(i, s, h)) = x.probs[i][s][h];
            }
        return p;
    }

    MultiStrategy strategy(const Eigen::VectorXd& p) const {
        MultiStrategy x;
        x.probs.resize(2);
        for (int i = 0; i < 2; ++i) {
            x.probs[i].assign(g_.num_states(), std::vector<double>(g_.num_actions(i)));
            for (int s = 0; s < g_.num_states(); ++s)
                for (int h = 0; h < g_.num_actions(i); ++h) x.probs[i][s][h] = p(ix(i, s, h));
        }
        return x;
    }

    ValueFunction values(const Eigen::VectorXd& p) const {
        ValueFunction v(2, std::vector<double>(g_.num_states()));
        for (int i = 0; i < 2; ++i)
            for (int s = 0; s < g_.num_states(); ++s) v[i][s] = p(iv(i, s));
        return v;
    }

    /// E[h][a^-i] = x^-i(a^-i) c^i(s, (h, a^-i)).
    Eigen::MatrixXd E(int i, int s, const Eigen::VectorXd& p) const {
        const int o = 1 - i;
        Eigen::MatrixXd e(g_.num_actions(i), g_.num_actions(o));
        for (int h = 0; h < g_.num_actions(i); ++h)
            for (int b = 0; b < g_.num_actions(o); ++b) e(h, b) = p(ix(o, s, b)) * g_.cost(i, s, joint(i, h, b));
        return e;
    }

    /// Y[(a, k), h] = [a^i == h] x^-i(a^-i) v(k); Y u equals z(u) below.
    Eigen::MatrixXd Y(int i, int s, const Eigen::VectorXd& p) const {
        const int S = g_.num_states(), J = g_.num_joint();
        Eigen::MatrixXd y = Eigen::MatrixXd::Zero(J * S, g_.num_actions(i));
        for (int a = 0; a < J; ++a) {
            const double xo = p(ix(1 - i, s, g_.own_action(a, 1 - i)));
            for (int k = 0; k < S; ++k) y(a * S + k, g_.own_action(a, i)) = xo * p(iv(i, k));
        }
        return y;
    }

    /// z[(a, k)] = u(a^i) x^-i(a^-i) v(k).
    Eigen::VectorXd z(int i, int s, const Eigen::VectorXd& p, const Eigen::VectorXd& u) const {
        const int S = g_.num_states(), J = g_.num_joint();
        Eigen::VectorXd out(J * S);
        for (int a = 0; a < J; ++a)
            for (int k = 0; k < S; ++k)
                out(a * S + k) = u(g_.own_action(a, i)) * p(ix(1 - i, s, g_.own_action(a, 1 - i))) * p(iv(i, k));
        return out;
    }

    ResidualReport residual(const Eigen::VectorXd& p) const {
        if (p.size() != size_) throw std::invalid_argument("residual: point dimension mismatch");
        ResidualReport rep;
        double sq = 0.0;
        auto add = [&](int fam, double viol) {
            viol = std::max(viol, 0.0);
            rep.family_max[fam] = std::max(rep.family_max[fam], viol);
            sq += viol * viol;
        };
        const int S = g_.num_states(), J = g_.num_joint();
        const double gamma = g_.discount();
        for (int i = 0; i < 2; ++i) {
            const int o = 1 - i;
            for (int s = 0; s < S; ++s) {
                const double vs = p(iv(i, s));
                double w_sum = 0.0, d_sum = 0.0;
                std::vector<double> dev(g_.num_actions(i), 0.0);
                for (int a = 0; a < J; ++a) {
                    const double xi = p(ix(i, s, g_.own_action(a, i))), xo = p(ix(o, s, g_.own_action(a, o)));
                    double tv = 0.0, np = 0.0, tsum = 0.0;
                    for (int k = 0; k < S; ++k) {
                        const double t = p(it(i, s, a, k)), n = p(in(i, s, a, k));
                        tv += t * p(iv(i, k));
                        np += n * cap(i, s, a, k);
                        tsum += t;
                        add(kDualFeas, gamma * p(iv(i, k)) - p(im(i, s, a)) + n);
                        add(kTBounds, -t);
                        add(kTBounds, t - cap(i, s, a, k));
                        add(kSigns, n);
                    }
                    add(kSimplex, std::abs(tsum - 1.0));
                    const double W = g_.cost(i, s, a) + gamma * tv;
                    const double D = g_.cost(i, s, a) + p(im(i, s, a)) - np;
                    w_sum += xi * xo * W;
                    d_sum += xi * xo * D;
                    dev[g_.own_action(a, i)] += xo * W;
                }
                add(kValue, std::abs(vs - w_sum));
                for (double d : dev) add(kPerAction, vs - d);
                add(kDualObj, d_sum - vs);
                double xsum = 0.0;
                for (int h = 0; h < g_.num_actions(i); ++h) {
                    xsum += p(ix(i, s, h));
                    add(kSigns, -p(ix(i, s, h)));
                }
                add(kSimplex, std::abs(xsum - 1.0));
            }
        }
        rep.aggregate = std::sqrt(sq);
        return rep;
    }

    /// Weighted squared penalty of the value, per-action, dual-objective and
    /// dual-feasibility families; the remaining families are enforced by
    /// projection. Writes the gradient when `grad` is non-null.
    double penalty(const Eigen::VectorXd& p, const std::array<double, 4>& w, Eigen::VectorXd* grad) const {
        if (grad) grad->setZero(size_);
        const int S = g_.num_states(), J = g_.num_joint();
        const double gamma = g_.discount();
        double f = 0.0;
        std::vector<double> W(J), D(J);
        for (int i = 0; i < 2; ++i) {
            const int o = 1 - i;
            for (int s = 0; s < S; ++s) {
                const double vs = p(iv(i, s));
                double r1 = vs, r3 = -vs;
                std::vector<double> r2(g_.num_actions(i), vs);
                for (int a = 0; a < J; ++a) {
                    const double xi = p(ix(i, s, g_.own_action(a, i))), xo = p(ix(o, s, g_.own_action(a, o)));
                    double tv = 0.0, np = 0.0;
                    for (int k = 0; k < S; ++k) {
                        tv += p(it(i, s, a, k)) * p(iv(i, k));
                        np += p(in(i, s, a, k)) * cap(i, s, a, k);
                    }
                    W[a] = g_.cost(i, s, a) + gamma * tv;
                    D[a] = g_.cost(i, s, a) + p(im(i, s, a)) - np;
                    r1 -= xi * xo * W[a];
                    r3 += xi * xo * D[a];
                    r2[g_.own_action(a, i)] -= xo * W[a];
                }
                f += w[0] * r1 * r1;
                if (r3 > 0.0) f += w[2] * r3 * r3;
                for (double r : r2)
                    if (r > 0.0) f += w[1] * r * r;
                for (int a = 0; a < J; ++a)
                    for (int k = 0; k < S; ++k) {
                        const double r4 = gamma * p(iv(i, k)) - p(im(i, s, a)) + p(in(i, s, a, k));
                        if (r4 > 0.0) {
                            f += w[3] * r4 * r4;
                            if (grad) {
                                const double c = 2.0 * w[3] * r4;
                                (*grad)(iv(i, k)) += c * gamma;
                                (*grad)(im(i, s, a)) -= c;
                                (*grad)(in(i, s, a, k)) += c;
                            }
                        }
                    }
                if (!grad) continue;
                Eigen::VectorXd& G = *grad;
                // value family
                {
                    const double c = 2.0 * w[0] * r1;
                    G(iv(i, s)) += c;
                    for (int a = 0; a < J; ++a) {
                        const int ai = g_.own_action(a, i), ao = g_.own_action(a, o);
                        const double xi = p(ix(i, s, ai)), xo = p(ix(o, s, ao));
                        G(ix(i, s, ai)) -= c * xo * W[a];
                        G(ix(o, s, ao)) -= c * xi * W[a];
                        for (int k = 0; k < S; ++k) {
                            G(iv(i, k)) -= c * gamma * xi * xo * p(it(i, s, a, k));
                            G(it(i, s, a, k)) -= c * gamma * xi * xo * p(iv(i, k));
                        }
                    }
                }
                // per-action family
                for (int a = 0; a < J; ++a) {
                    const int ai = g_.own_action(a, i), ao = g_.own_action(a, o);
                    if (r2[ai] <= 0.0) continue;
                    const double c = 2.0 * w[1] * r2[ai];
                    const double xo = p(ix(o, s, ao));
                    G(ix(o, s, ao)) -= c * W[a];
                    for (int k = 0; k < S; ++k) {
                        G(iv(i, k)) -= c * gamma * xo * p(it(i, s, a, k));
                        G(it(i, s, a, k)) -= c * gamma * xo * p(iv(i, k));
                    }
                }
                for (double r : r2)
                    if (r > 0.0) G(iv(i, s)) += 2.0 * w[1] * r;
                // dual objective family
                if (r3 > 0.0) {
                    const double c = 2.0 * w[2] * r3;
                    G(iv(i, s)) -= c;
                    for (int a = 0; a < J; ++a) {
                        const int ai = g_.own_action(a, i), ao = g_.own_action(a, o);
                        const double xi = p(ix(i, s, ai)), xo = p(ix(o, s, ao));
                        G(im(i, s, a)) += c * xi * xo;
                        for (int k = 0; k < S; ++k) G(in(i, s, a, k)) -= c * xi * xo * cap(i, s, a, k);
                        G(ix(i, s, ai)) += c * xo * D[a];
                        G(ix(o, s, ao)) += c * xi * D[a];
                    }
                }
            }
        }
        return f;
    }

    /// Projects onto simplex (x), capped simplex (t) and n <= 0.
    void project(Eigen::VectorXd& p) const {
        const int S = g_.num_states(), J = g_.num_joint();
        std::vector<double> buf, caps;
        for (int i = 0; i < 2; ++i)
            for (int s = 0; s < S; ++s) {
                const int na = g_.num_actions(i);
                buf.assign(na, 0.0);
                caps.assign(na, 1.0);
                for (int h = 0; h < na; ++h) buf[h] = p(ix(i, s, h));
                project_capped_simplex(buf, caps);
                for (int h = 0; h < na; ++h) p(ix(i, s, h)) = buf[h];
                for (int a = 0; a < J; ++a) {
                    buf.assign(S, 0.0);
                    caps.assign(S, 0.0);
                    for (int k = 0; k < S; ++k) {
                        buf[k] = p(it(i, s, a, k));
                        caps[k] = cap(i, s, a, k);
                        p(in(i, s, a, k)) = std::min(p(in(i, s, a, k)), 0.0);
                    }
                    project_capped_simplex(buf, caps);
                    for (int k = 0; k < S; ++k) p(it(i, s, a, k)) = buf[k];
                }
            }
    }

    /// Euclidean projection onto {0 <= q <= caps, sum q = 1} by bisection on
    /// the shift tau in q = clamp(p - tau, 0, caps). Requires sum caps >= 1.
    static void project_capped_simplex(std::vector<double>& p, const std::vector<double>& caps) {
        auto mass = [&](double tau) {
            double m = 0.0;
            for (std::size_t k = 0; k < p.size(); ++k) m += std::clamp(p[k] - tau, 0.0, caps[k]);
            return m;
        };
        double lo = std::numeric_limits<double>::infinity(), hi = -lo;
        for (std::size_t k = 0; k < p.size(); ++k) {
            lo = std::min(lo, p[k] - caps[k]);
            hi = std::max(hi, p[k]);
        }
        // mass(lo) = sum caps >= 1, mass(hi) = 0.
        for (int it = 0; it < 200 && hi - lo > 0.0; ++it) {
            const double mid = 0.5 * (lo + hi);
            if (mid <= lo || mid >= hi) break;
            (mass(mid) >= 1.0 ? lo : hi) = mid;
        }
        for (std::size_t k = 0; k < p.size(); ++k) p[k] = std::clamp(p[k] - lo, 0.0, caps[k]);
        // Put the bisection remainder on a coordinate with slack.
        double rem = 1.0 - std::accumulate(p.begin(), p.end(), 0.0);
        for (std::size_t k = 0; k < p.size() && rem != 0.0; ++k) {
            const double nv = std::clamp(p[k] + rem, 0.0, caps[k]);
            rem -= nv - p[k];
            p[k] = nv;
        }
    }

    int joint(int i, int h, int b) const {
        std::vector<int> prof(2);
        prof[i] = h;
        prof[1 - i] = b;
        return g_.encode(prof);
    }

private:
    GameSpec g_;
    std::vector<double> alphas_;
    std::array<int, 2> off_v_{}, off_x_{}, off_m_{}, off_n_{}, off_t_{};
    int size_ = 0;
};

enum class AuxMethod { linear_program, closed_form };

/// Fills (m, n, t) at the point's (x, v): t maximizes t.v over the capped
/// simplex (primal), (m, n) solve the dual. Both are exact at the optimum.
inline void recover_auxiliaries(const MultilinearSystem& sys, Eigen::VectorXd& p,
                                AuxMethod method = AuxMethod::linear_program) {
    const GameSpec& g = sys.game();
    const int S = g.num_states(), J = g.num_joint();
    const double gamma = g.discount();
    for (int i = 0; i < 2; ++i) {
        Eigen::VectorXd v(S);
        for (int k = 0; k < S; ++k) v(k) = p(sys.iv(i, k));
        for (int s = 0; s < S; ++s)
            for (int a = 0; a < J; ++a) {
                Eigen::VectorXd caps(S);
                for (int k = 0; k < S; ++k) caps(k) = sys.cap(i, s, a, k);
                Eigen::VectorXd t(S), n(S);
                double m = 0.0;
                if (method == AuxMethod::linear_program) {
                    // Primal: min -v.t, t <= caps, sum t = 1, t >= 0.
                    const LpResult pr = linprog(-v, Eigen::MatrixXd::Identity(S, S), caps,
                                                Eigen::MatrixXd::Ones(1, S), Eigen::VectorXd::Ones(1));
                    // Dual with m = mp - mm, n = -w: min m + caps.w, -m - w_k <= -gamma v_k.
                    Eigen::VectorXd c(S + 2);
                    c << 1.0, -1.0, caps;
                    Eigen::MatrixXd A = Eigen::MatrixXd::Zero(S, S + 2);
                    for (int k = 0; k < S; ++k) {
                        A(k, 0) = -1.0;
                        A(k, 1) = 1.0;
                        A(k, 2 + k) = -1.0;
                    }
                    const LpResult du = linprog(c, A, -gamma * v, Eigen::MatrixXd(0, S + 2), Eigen::VectorXd(0));
                    if (pr.status != LpStatus::optimal || du.status != LpStatus::optimal)
                        throw std::runtime_error("recover_auxiliaries: LP did not reach optimality");
                    t = pr.x;
                    m = du.x(0) - du.x(1);
                    n = -du.x.tail(S);
                } else {
                    // Greedy fill from the largest v(k); eta is the marginal atom.
                    std::vector<int> order(S);
                    std::iota(order.begin(), order.end(), 0);
                    std::stable_sort(order.begin(), order.end(), [&](int x, int y) { return v(x) > v(y); });
                    t.setZero();
                    double left = 1.0;
                    int marginal = order.back();
                    for (int k : order) {
                        if (left <= 0.0) break;
                        t(k) = std::min(caps(k), left);
                        left -= t(k);
                        if (caps(k) > 0.0) marginal = k;
                    }
                    m = gamma * v(marginal);
                    for (int k = 0; k < S; ++k) n(k) = -gamma * std::max(v(k) - v(marginal), 0.0);
                }
                p(sys.im(i, s, a)) = m;
                for (int k = 0; k < S; ++k) {
                    p(sys.it(i, s, a, k)) = t(k);
                    p(sys.in(i, s, a, k)) = n(k);
                }
            }
    }
}

struct LocalSolveConfig {
    std::vector<double> weight_schedule{1.0, 10.0, 100.0};  ///< multiplier on the inequality families per round
    int max_iters = 5000;                                  ///< per round
    double tol = 1e-8;                                     ///< target aggregate residual
    int restarts = 1;
    std::uint64_t seed = 0;
};

struct LocalSolveResult {
    Eigen::VectorXd point;
    ResidualReport report;
    int restart = 0;  ///< index of the restart that produced the best point
};

/// Random strategy, its per-action values, and LP auxiliaries.
inline Eigen::VectorXd random_initial_point(const MultilinearSystem& sys, Rng& rng) {
    const GameSpec& g = sys.game();
    MultiStrategy x = MultiStrategy::uniform(g);
    for (int i = 0; i < 2; ++i)
        for (int s = 0; s < g.num_states(); ++s) {
            double sum = 0.0;
            for (double& q : x.probs[i][s]) sum += (q = -std::log(1.0 - uniform01(rng)));
            for (double& q : x.probs[i][s]) q /= sum;
        }
    DpOptions opt;
    opt.scope = RiskScope::per_action;
    ValueFunction v;
    for (int i = 0; i < 2; ++i) v.push_back(evaluate_fixed(g, sys.alphas(), x, i, 1e-12, opt));
    Eigen::VectorXd p = sys.make_point(x, v);
    recover_auxiliaries(sys, p);
    return p;
}

/// Projected gradient with Barzilai-Borwein steps and Armijo backtracking on
/// the squared penalty. Converges to a local minimum only.
inline LocalSolveResult solve_local_from(const MultilinearSystem& sys, Eigen::VectorXd p,
                                         const LocalSolveConfig& cfg) {
    if (p.size() != sys.size()) throw std::invalid_argument("solve_local: init dimension mismatch");
    LocalSolveResult res;
    res.report = sys.residual(p);
    res.point = p;
    if (res.report.aggregate <= cfg.tol) return res;
    sys.project(p);
    for (double mult : cfg.weight_schedule) {
        const std::array<double, 4> w{1.0, mult, mult, mult};
        Eigen::VectorXd g(sys.size()), gn(sys.size());
        double f = sys.penalty(p, w, &g);
        double step = 1.0 / std::max(1.0, g.norm());
        for (int k = 0; k < cfg.max_iters && f > 0.0; ++k) {
            Eigen::VectorXd pn;
            double fn = f;
            bool accepted = false;
            for (int bt = 0; bt < 60; ++bt) {
                pn = p - step * g;
                sys.project(pn);
                fn = sys.penalty(pn, w, nullptr);
                if (fn <= f + 1e-4 * g.dot(pn - p)) {
                    accepted = true;
                    break;
                }
                step *= 0.5;
            }
            if (!accepted) break;
            sys.penalty(pn, w, &gn);
            const Eigen::VectorXd sv = pn - p, yv = gn - g;
            const double sy = sv.dot(yv);
            step = sy > 0.0 ? std::clamp(sv.squaredNorm() / sy, 1e-12, 1e6) : std::min(1e6, step * 2.0);
            p = std::move(pn);
            g = gn;
            f = fn;
            if (sv.norm() < 1e-16) break;
            if ((k & 63) == 0 && sys.residual(p).aggregate <= cfg.tol) break;
        }
        const ResidualReport rep = sys.residual(p);
        if (rep.aggregate < res.report.aggregate) {
            res.report = rep;
            res.point = p;
        }
        if (rep.aggregate <= cfg.tol) break;
    }
    return res;
}

/// Seeded restarts (run concurrently); returns the lowest-residual point.
inline LocalSolveResult solve_local(const MultilinearSystem& sys, const LocalSolveConfig& cfg,
                                    const std::optional<Eigen::VectorXd>& init = std::nullopt) {
    const int runs = std::max(1, cfg.restarts);
    std::vector<LocalSolveResult> out(runs);
    parallel_for(static_cast<std::size_t>(runs), [&](std::size_t r) {
        Eigen::VectorXd p0;
        if (r == 0 && init) {
            p0 = *init;
        } else {
            Rng rng(split_seed(cfg.seed, r));
            p0 = random_initial_point(sys, rng);
        }
        out[r] = solve_local_from(sys, std::move(p0), cfg);
        out[r].restart = static_cast<int>(r);
    });
    std::size_t best = 0;
    for (std::size_t r = 1; r < out.size(); ++r)
        if (out[r].report.aggregate < out[best].report.aggregate) best = r;
    return out[best];
}

}  // namespace riskgame
