#pragma once

#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

namespace riskgame {

enum class LpStatus { optimal, infeasible, unbounded, iteration_limit };

struct LpResult {
    LpStatus status = LpStatus::infeasible;
    Eigen::VectorXd x;
    double objective = 0.0;
};

namespace detail {

/// Dense simplex tableau: rows 0..m-1 are constraints, row m is the
/// objective (reduced costs), last column is the right-hand side.
class SimplexTableau {
public:
    SimplexTableau(Eigen::MatrixXd t, std::vector<int> basis) : T_(std::move(t)), basis_(std::move(basis)) {}

    /// Bland's rule; only columns < ncols_allowed may enter.
    LpStatus optimize(int ncols_allowed, long long max_iter, double eps) {
        const int m = rows();
        for (long long it = 0; it < max_iter; ++it) {
            int enter = -1;
            for (int j = 0; j < ncols_allowed; ++j) {
                if (T_(m, j) < -eps) {
                    enter = j;
                    break;
                }
            }
            if (enter < 0) return LpStatus::optimal;
            int leave = -1;
            double best = std::numeric_limits<double>::infinity();
            for (int r = 0; r < m; ++r) {
                if (T_(r, enter) <= eps) continue;
                const double ratio = T_(r, rhs()) / T_(r, enter);
                if (ratio < best - eps || (std::abs(ratio - best) <= eps && basis_[r] < basis_[leave])) {
                    best = ratio;
                    leave = r;
                }
            }
            if (leave < 0) return LpStatus::unbounded;
            pivot(leave, enter);
        }
        return LpStatus::iteration_limit;
    }

    void pivot(int r, int c) {
        T_.row(r) /= T_(r, c);
        for (int k = 0; k < T_.rows(); ++k) {
            if (k == r) continue;
            const double f = T_(k, c);
            if (f != 0.0) T_.row(k) -= f * T_.row(r);
        }
        basis_[r] = c;
    }

    int rows() const { return static_cast<int>(T_.rows()) - 1; }
    int rhs() const { return static_cast<int>(T_.cols()) - 1; }
    Eigen::MatrixXd& T() { return T_; }
    std::vector<int>& basis() { return basis_; }

private:
    Eigen::MatrixXd T_;
    std::vector<int> basis_;
};

}  // namespace detail

/// minimize c^T x  s.t.  A_ub x <= b_ub,  A_eq x = b_eq,  x >= 0.
/// Two-phase dense simplex with Bland's anti-cycling rule.
inline LpResult linprog(const Eigen::VectorXd& c, const Eigen::MatrixXd& A_ub, const Eigen::VectorXd& b_ub,
                        const Eigen::MatrixXd& A_eq, const Eigen::VectorXd& b_eq, long long max_iter = 100000,
                        double eps = 1e-10) {
    const int n = static_cast<int>(c.size());
    const int mu = static_cast<int>(A_ub.rows()), me = static_cast<int>(A_eq.rows());
    if ((mu > 0 && A_ub.cols() != n) || (me > 0 && A_eq.cols() != n) || b_ub.size() != mu || b_eq.size() != me)
        throw std::invalid_argument("linprog: dimension mismatch");
    const int m = mu + me;
    // Columns: x (n), slacks (mu), artificials (m), rhs.
    const int ncol = n + mu + m;
    Eigen::MatrixXd T = Eigen::MatrixXd::Zero(m + 1, ncol + 1);
    std::vector<int> basis(m);
    for (int r = 0; r < m; ++r) {
        const bool ub = r < mu;
        Eigen::RowVectorXd a = ub ? Eigen::RowVectorXd(A_ub.row(r)) : Eigen::RowVectorXd(A_eq.row(r - mu));
        double b = ub ? b_ub(r) : b_eq(r - mu);
        double sgn = b < 0.0 ? -1.0 : 1.0;
        T.block(r, 0, 1, n) = sgn * a;
        if (ub) T(r, n + r) = sgn;
        T(r, n + mu + r) = 1.0;
        T(r, ncol) = sgn * b;
        basis[r] = n + mu + r;
    }
    // Phase 1 objective: sum of artificials, expressed in reduced form.
    for (int r = 0; r < m; ++r) T.row(m) -= T.row(r);
    for (int r = 0; r < m; ++r) T(m, n + mu + r) = 0.0;

    detail::SimplexTableau tab(std::move(T), std::move(basis));
    LpResult res;
    if (m > 0) {
        const LpStatus st = tab.optimize(ncol, max_iter, eps);
        if (st == LpStatus::iteration_limit) {
            res.status = st;
            return res;
        }
        if (-tab.T()(m, ncol) > 1e-8 * std::max(1.0, tab.T().col(ncol).head(m).cwiseAbs().maxCoeff())) {
            res.status = LpStatus::infeasible;
            return res;
        }
        // Drive remaining artificials out of the basis where possible.
        for (int r = 0; r < m; ++r) {
            if (tab.basis()[r] < n + mu) continue;
            for (int j = 0; j < n + mu; ++j) {
                if (std::abs(tab.T()(r, j)) > 1e-9) {
                    tab.pivot(r, j);
                    break;
                }
            }
        }
    }
    // Phase 2 objective.
    Eigen::MatrixXd& TT = tab.T();
    TT.row(m).setZero();
    TT.block(m, 0, 1, n) = c.transpose();
    for (int r = 0; r < m; ++r) {
        const int b = tab.basis()[r];
        if (b < n + mu && TT(m, b) != 0.0) TT.row(m) -= TT(m, b) * TT.row(r);
    }
    // Artificials stuck in the basis sit on redundant rows at level zero;
    // forbid them from re-entering by restricting the entering columns.
    const LpStatus st = tab.optimize(n + mu, max_iter, eps);
    res.status = st;
    if (st != LpStatus::optimal) return res;
    res.x = Eigen::VectorXd::Zero(n);
    for (int r = 0; r < m; ++r)
        if (tab.basis()[r] < n) res.x(tab.basis()[r]) = TT(r, ncol);
    res.objective = c.dot(res.x);
    return res;
}

}  // namespace riskgame
