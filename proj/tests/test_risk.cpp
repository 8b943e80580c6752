#include <gtest/gtest.h>

#include "oracles.hpp"
#include "riskgame/risk.hpp"

using namespace riskgame;

namespace {

std::vector<double> grid(double lo, double hi, int n) {
    std::vector<double> g(n);
    for (int k = 0; k < n; ++k) g[k] = lo + (hi - lo) * k / (n - 1);
    return g;
}

}  // namespace

TEST(Cvar, AlphaZeroIsMean) {
    const std::vector<double> atoms{1.0, 4.0, -2.0}, probs{0.2, 0.3, 0.5};
    EXPECT_NEAR(cvar_exact(atoms, probs, 0.0), 0.2 - 1.0 + 1.2 + 0.0, 1e-12);
}

TEST(Cvar, TwoPointExamples) {
    const std::vector<double> atoms{0.0, 10.0}, probs{0.5, 0.5};
    EXPECT_NEAR(cvar_exact(atoms, probs, 0.5), 10.0, 1e-12);
    EXPECT_NEAR(cvar_exact(atoms, probs, 0.0), 5.0, 1e-12);
    EXPECT_NEAR(cvar_exact(atoms, probs, 0.9), 10.0, 1e-12);
    EXPECT_NEAR(cvar_exact(atoms, probs, 0.25), 5.0 / 0.75, 1e-12);
}

TEST(Cvar, RejectsAlphaOutOfRange) {
    const std::vector<double> atoms{1.0}, probs{1.0};
    EXPECT_THROW(cvar_exact(atoms, probs, 1.0), std::domain_error);
    EXPECT_THROW(cvar_exact(atoms, probs, -0.1), std::domain_error);
}

TEST(Cvar, MatchesDualAndFineGrid) {
    Rng rng(21);
    for (int rep = 0; rep < 200; ++rep) {
        const int n = 1 + uniform_index(rng, 20);
        std::vector<double> atoms(n);
        for (double& a : atoms) a = oracle::uniform(rng, -10, 10);
        const auto probs = oracle::random_simplex(rng, n, 0.2);
        const double alpha = 0.95 * uniform01(rng);
        const double exact = cvar_exact(atoms, probs, alpha);
        EXPECT_NEAR(exact, oracle::cvar_dual(atoms, probs, alpha), 1e-9);
        // The objective is piecewise linear with kinks at the atoms.
        EXPECT_NEAR(exact, oracle::cvar_grid(atoms, probs, alpha, atoms), 1e-9);
        EXPECT_LE(exact, oracle::cvar_grid(atoms, probs, alpha, grid(-10, 10, 501)) + 1e-12);
    }
}

TEST(Cvar, MonotoneInAlphaAndBounded) {
    Rng rng(5);
    std::vector<double> atoms(30);
    for (double& a : atoms) a = oracle::uniform(rng, 0, 1);
    const auto probs = oracle::random_simplex(rng, 30);
    double prev = -1e300;
    for (double alpha = 0.0; alpha < 0.99; alpha += 0.05) {
        const double c = cvar_exact(atoms, probs, alpha);
        EXPECT_GE(c, prev - 1e-12);
        EXPECT_LE(c, *std::max_element(atoms.begin(), atoms.end()) + 1e-12);
        prev = c;
    }
}

TEST(Cvar, IntegrandIsExactAtAlphaZero) {
    for (double x : {-3.5, 0.1, 1e6}) EXPECT_EQ(cvar_g(x, -1e7, 0.0), x);
    EXPECT_EQ(cvar_g(1.0, 2.0, 0.3), 2.0);
    EXPECT_DOUBLE_EQ(cvar_g(5.0, 1.0, 0.5), 1.0 + 4.0 / 0.5);
}

TEST(Cvar, SubgradientMatchesFiniteDifference) {
    for (double alpha : {0.1, 0.5}) {
        for (double eta : {-1.0, 0.3, 2.0}) {
            const double x = 0.7, h = 1e-7;
            const double fd = (cvar_g(x, eta + h, alpha) - cvar_g(x, eta - h, alpha)) / (2 * h);
            EXPECT_NEAR(cvar_g_sub_eta(x, eta, alpha), fd, 1e-6);
        }
    }
}

TEST(Cvar, EmpiricalIsUpperTailMean) {
    std::vector<double> xs(100);
    for (int k = 0; k < 100; ++k) xs[k] = 99 - k;
    EXPECT_NEAR(empirical_cvar(xs, 0.9), (90 + 99) / 2.0, 1e-12);
    EXPECT_NEAR(empirical_cvar(xs, 0.0), 49.5, 1e-12);
    EXPECT_THROW(empirical_cvar(std::vector<double>{}, 0.1), std::invalid_argument);
}

TEST(Box, ProjectClampsAndDiameter) {
    const Box b{{0.0, -1.0}, {1.0, 1.0}};
    EXPECT_EQ(project(b, std::vector<double>{2.0, -3.0}), (std::vector<double>{1.0, -1.0}));
    EXPECT_EQ(project(b, std::vector<double>{0.5, 0.0}), (std::vector<double>{0.5, 0.0}));
    EXPECT_NEAR(b.diameter(), std::sqrt(5.0), 1e-15);
}

TEST(CvarSpec, DefaultsAndErrors) {
    const auto sp = make_cvar_spec(0.5, 0.0, 10.0);
    EXPECT_NEAR(sp.lipschitz_bound, 3.0, 1e-15);
    EXPECT_NEAR(sp.default_step_constant(), 10.0 / 3.0, 1e-15);
    EXPECT_EQ(sp.initial_y(), std::vector<double>{0.0});
    EXPECT_THROW(make_cvar_spec(0.5, 1.0, 1.0), std::invalid_argument);
    EXPECT_THROW(make_cvar_spec(1.0, 0.0, 1.0), std::domain_error);
}

TEST(WindowStart, Rule) {
    EXPECT_EQ(window_start(1, 0.5), 1);
    EXPECT_EQ(window_start(10, 0.5), 5);
    EXPECT_EQ(window_start(11, 0.5), 6);
    EXPECT_EQ(window_start(10, 0.0), 1);
    EXPECT_EQ(window_start(10, 1.0), 10);
}

TEST(Sasp, StepProjectsOntoDomain) {
    const auto sp = make_cvar_spec(0.5, 0.0, 10.0);
    std::vector<double> y{0.0}, z, gy(1), gz;
    sasp_step(sp, 5.0, y, z, 100.0, 1.0, 1.0, gy, gz);
    EXPECT_EQ(y[0], 10.0);
    sasp_step(sp, 5.0, y, z, 100.0, 1.0, 1.0, gy, gz);
    EXPECT_EQ(y[0], 0.0);
    EXPECT_THROW(sasp_step(sp, std::nan(""), y, z, 1.0, 1.0, 1.0, gy, gz), std::domain_error);
}

TEST(Sasp, ConvergesOnTwoPointDistribution) {
    const auto sp = make_cvar_spec(0.5, 0.0, 10.0);
    auto sampler = [](Rng& r) { return uniform01(r) < 0.5 ? 0.0 : 10.0; };
    SaspConfig cfg;
    cfg.steps = 100000;
    Rng rng(2);
    const auto res = sasp_estimate(sp, sampler, cfg, rng);
    EXPECT_NEAR(res.value, 10.0, 0.15);
}

TEST(Sasp, NeutralSpecEstimatesMean) {
    const auto sp = make_neutral_spec();
    auto sampler = [](Rng& r) { return oracle::uniform(r, 0.0, 2.0); };
    SaspConfig cfg;
    cfg.steps = 20000;
    Rng rng(3);
    EXPECT_NEAR(sasp_estimate(sp, sampler, cfg, rng).value, 1.0, 0.02);
}

TEST(Sasp, DeterministicForSeed) {
    const auto sp = make_cvar_spec(0.2, -5.0, 5.0);
    auto sampler = [](Rng& r) { return oracle::uniform(r, -1.0, 3.0); };
    SaspConfig cfg;
    cfg.steps = 5000;
    Rng a(7), b(7);
    EXPECT_EQ(sasp_estimate(sp, sampler, cfg, a).value, sasp_estimate(sp, sampler, cfg, b).value);
}

TEST(Sasp, RejectsBadConfig) {
    const auto sp = make_neutral_spec();
    auto sampler = [](Rng&) { return 0.0; };
    Rng rng(1);
    SaspConfig cfg;
    cfg.step_exponent = 0.5;
    EXPECT_THROW(sasp_estimate(sp, sampler, cfg, rng), std::invalid_argument);
    cfg.step_exponent = 0.75;
    cfg.steps = 0;
    EXPECT_THROW(sasp_estimate(sp, sampler, cfg, rng), std::invalid_argument);
}
