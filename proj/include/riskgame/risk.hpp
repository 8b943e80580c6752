#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <span>
#include <stdexcept>
#include <vector>

#include "riskgame/rng.hpp"

namespace riskgame {

struct DiscreteDistribution {
    std::vector<double> atoms;
    std::vector<double> probs;
};

inline void check_alpha(double alpha) {
    if (!(alpha >= 0.0 && alpha < 1.0)) throw std::domain_error("cvar: alpha must lie in [0,1)");
}

/// Exact CVaR_alpha(X) = min_eta { eta + E[(X - eta)^+] / (1 - alpha) }.
///
/// The minimizer is the alpha-quantile of X, so the atoms are sorted and the
/// objective is evaluated once at that quantile.
inline double cvar_exact(std::span<const double> atoms, std::span<const double> probs, double alpha) {
    check_alpha(alpha);
    if (atoms.size() != probs.size() || atoms.empty())
        throw std::invalid_argument("cvar_exact: atoms/probs size mismatch or empty");
    std::vector<std::size_t> order(atoms.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return atoms[a] < atoms[b]; });

    double eta = atoms[order.back()];
    double cum = 0.0;
    for (std::size_t idx : order) {
        if (probs[idx] <= 0.0) continue;
        cum += probs[idx];
        if (cum >= alpha) {
            eta = atoms[idx];
            break;
        }
    }
    double tail = 0.0;
    for (std::size_t k = 0; k < atoms.size(); ++k) {
        if (atoms[k] > eta) tail += probs[k] * (atoms[k] - eta);
    }
    return eta + tail / (1.0 - alpha);
}

inline double cvar_exact(const DiscreteDistribution& d, double alpha) {
    return cvar_exact(d.atoms, d.probs, alpha);
}

/// Pointwise integrand eta + (x - eta)^+ / (1 - alpha). Written so that
/// alpha = 0 and x > eta return x exactly.
inline double cvar_g(double x, double eta, double alpha) {
    return x > eta ? (x - alpha * eta) / (1.0 - alpha) : eta;
}

/// Subgradient of cvar_g in eta; the kink x == eta takes the inactive branch.
inline double cvar_g_sub_eta(double x, double eta, double alpha) {
    return x > eta ? 1.0 - 1.0 / (1.0 - alpha) : 1.0;
}

/// Mean of the worst (1 - alpha) fraction of the samples.
inline double empirical_cvar(std::span<const double> samples, double alpha) {
    if (samples.empty()) throw std::invalid_argument("empirical_cvar: empty sample set");
    std::vector<double> w(samples.size(), 1.0 / static_cast<double>(samples.size()));
    return cvar_exact(samples, w, alpha);
}

/// Axis-aligned box; a zero-dimensional box stands for a single point.
struct Box {
    std::vector<double> lo;
    std::vector<double> hi;

    std::size_t dim() const { return lo.size(); }
    double diameter() const {
        double s = 0.0;
        for (std::size_t k = 0; k < lo.size(); ++k) s += (hi[k] - lo[k]) * (hi[k] - lo[k]);
        return std::sqrt(s);
    }
};

/// Euclidean projection onto a box (coordinatewise clamp).
inline void project(const Box& box, std::span<double> p) {
    for (std::size_t k = 0; k < box.dim(); ++k) p[k] = std::clamp(p[k], box.lo[k], box.hi[k]);
}

inline std::vector<double> project(const Box& box, std::vector<double> p) {
    project(box, std::span<double>(p));
    return p;
}

/// Risk measure in minimax form rho(X) = min_y max_z E[G(X, y, z)], G convex
/// in y and concave in z. Subgradient callbacks write into `out`.
struct SaddleRiskSpec {
    using Integrand = std::function<double(double, std::span<const double>, std::span<const double>)>;
    using Subgradient =
        std::function<void(double, std::span<const double>, std::span<const double>, std::span<double>)>;

    Box y_domain;
    Box z_domain;
    Integrand g;
    Subgradient g_sub_y;
    Subgradient g_sub_z;
    double lipschitz_bound = 1.0;
    /// CVaR level when the spec is a CVaR instance, otherwise 0.
    double alpha = 0.0;

    double default_step_constant() const {
        const double d = std::max(y_domain.diameter(), z_domain.diameter());
        return d > 0.0 ? d / lipschitz_bound : 1.0;
    }

    std::vector<double> initial_y() const { return y_domain.lo; }
    std::vector<double> initial_z() const { return z_domain.lo; }
};

inline SaddleRiskSpec make_cvar_spec(double alpha, double eta_min, double eta_max) {
    check_alpha(alpha);
    if (!(eta_min < eta_max)) throw std::invalid_argument("make_cvar_spec: empty eta interval");
    SaddleRiskSpec r;
    r.y_domain = {{eta_min}, {eta_max}};
    r.z_domain = {{}, {}};
    r.g = [alpha](double x, std::span<const double> y, std::span<const double>) { return cvar_g(x, y[0], alpha); };
    r.g_sub_y = [alpha](double x, std::span<const double> y, std::span<const double>, std::span<double> out) {
        out[0] = cvar_g_sub_eta(x, y[0], alpha);
    };
    r.g_sub_z = [](double, std::span<const double>, std::span<const double>, std::span<double>) {};
    r.lipschitz_bound = 1.0 + 1.0 / (1.0 - alpha);
    r.alpha = alpha;
    return r;
}

/// Expectation: G(x, y, z) = x with trivial domains.
inline SaddleRiskSpec make_neutral_spec() {
    SaddleRiskSpec r;
    r.y_domain = {{}, {}};
    r.z_domain = {{}, {}};
    r.g = [](double x, std::span<const double>, std::span<const double>) { return x; };
    r.g_sub_y = [](double, std::span<const double>, std::span<const double>, std::span<double>) {};
    r.g_sub_z = r.g_sub_y;
    r.lipschitz_bound = 1.0;
    return r;
}

/// Start of the averaging window for iterate t: ceil(fraction * t), at least 1.
/// fraction = 0 averages the whole history, fraction = 1 keeps the last iterate.
inline long long window_start(long long t, double fraction) {
    const auto s = static_cast<long long>(std::ceil(fraction * static_cast<double>(t)));
    return std::clamp(s, 1LL, t);
}

struct SaspConfig {
    long long steps = 100000;
    double step_constant = 0.0;  ///< <= 0 selects the spec default.
    double step_exponent = 0.75;
    double window_fraction = 0.5;
    double h_y = 1.0;
    double h_z = 1.0;
    long long holdout = 0;  ///< plug-in sample count; <= 0 means `steps`.
};

struct SaspResult {
    std::vector<double> y_avg;
    std::vector<double> z_avg;
    double value = 0.0;
};

/// One projected descent (y) / ascent (z) step at sample x.
inline void sasp_step(const SaddleRiskSpec& spec, double x, std::span<double> y, std::span<double> z,
                      double step, double h_y, double h_z, std::span<double> gy, std::span<double> gz) {
    if (!std::isfinite(x)) throw std::domain_error("sasp: non-finite sample");
    spec.g_sub_y(x, y, z, gy);
    spec.g_sub_z(x, y, z, gz);
    for (std::size_t k = 0; k < y.size(); ++k) {
        if (!std::isfinite(gy[k])) throw std::domain_error("sasp: non-finite subgradient");
        y[k] -= step * h_y * gy[k];
    }
    for (std::size_t k = 0; k < z.size(); ++k) {
        if (!std::isfinite(gz[k])) throw std::domain_error("sasp: non-finite subgradient");
        z[k] += step * h_z * gz[k];
    }
    project(spec.y_domain, y);
    project(spec.z_domain, z);
}

/// Stochastic approximation of rho(X) from a sampler, with suffix averaging.
inline SaspResult sasp_estimate(const SaddleRiskSpec& spec, const std::function<double(Rng&)>& sampler,
                                const SaspConfig& cfg, Rng& rng) {
    if (cfg.steps < 1) throw std::invalid_argument("sasp_estimate: steps must be >= 1");
    if (!(cfg.step_exponent > 0.5 && cfg.step_exponent <= 1.0))
        throw std::invalid_argument("sasp_estimate: step exponent must lie in (1/2, 1]");
    const double c = cfg.step_constant > 0.0 ? cfg.step_constant : spec.default_step_constant();
    std::vector<double> y = spec.initial_y(), z = spec.initial_z();
    std::vector<double> gy(y.size()), gz(z.size());
    std::vector<double> ysum(y.size(), 0.0), zsum(z.size(), 0.0);
    const long long start = window_start(cfg.steps, cfg.window_fraction);

    for (long long t = 1; t <= cfg.steps; ++t) {
        const double x = sampler(rng);
        const double step = c * std::pow(static_cast<double>(t), -cfg.step_exponent);
        sasp_step(spec, x, y, z, step, cfg.h_y, cfg.h_z, gy, gz);
        if (t >= start) {
            for (std::size_t k = 0; k < y.size(); ++k) ysum[k] += y[k];
            for (std::size_t k = 0; k < z.size(); ++k) zsum[k] += z[k];
        }
    }
    const double count = static_cast<double>(cfg.steps - start + 1);
    SaspResult res;
    res.y_avg.resize(y.size());
    res.z_avg.resize(z.size());
    for (std::size_t k = 0; k < y.size(); ++k) res.y_avg[k] = ysum[k] / count;
    for (std::size_t k = 0; k < z.size(); ++k) res.z_avg[k] = zsum[k] / count;

    const long long n = cfg.holdout > 0 ? cfg.holdout : cfg.steps;
    double acc = 0.0;
    for (long long j = 0; j < n; ++j) {
        const double x = sampler(rng);
        if (!std::isfinite(x)) throw std::domain_error("sasp: non-finite sample");
        acc += spec.g(x, res.y_avg, res.z_avg);
    }
    res.value = acc / static_cast<double>(n);
    return res;
}

}  // namespace riskgame
