#include <gtest/gtest.h>

#include "oracles.hpp"
#include "riskgame/dp_oracle.hpp"
#include "riskgame/queueing.hpp"

using namespace riskgame;

TEST(Queue, Structure) {
    const QueueParams p = default_params(0.1);
    const GameSpec g = build_queue_game(p);
    EXPECT_EQ(g.num_states(), 31);
    EXPECT_EQ(g.num_joint(), 4);
    EXPECT_TRUE(validate(g).empty());
    for (int a = 0; a < 4; ++a) {
        EXPECT_EQ(g.P(0, a, 1), 1.0);
        EXPECT_EQ(g.P(30, a, 29), 1.0);
    }
    // Fast service (1/11) against high admission (1/10).
    const double mu = 1.0 / 11.0, lam = 1.0 / 10.0;
    EXPECT_NEAR(g.P(7, 0, 6), mu / (mu + lam), 1e-15);
    EXPECT_NEAR(g.P(7, 0, 8), lam / (mu + lam), 1e-15);
    EXPECT_EQ(g.P(7, 0, 7), 0.0);
}

TEST(Queue, CostsAndHolding) {
    const QueueParams p = default_params(0.1);
    const GameSpec g = build_queue_game(p);
    EXPECT_EQ(p.holding(0), 0.0);
    EXPECT_NEAR(p.holding(5), 1.2 * std::exp(1.0), 1e-12);
    const double theta[2][2] = {{110, 110}, {90, 90}}, beta[2][2] = {{60, 30}, {20, 70}};
    for (int s : {0, 3, 30})
        for (int m = 0; m < 2; ++m)
            for (int l = 0; l < 2; ++l) {
                const int a = m * 2 + l;
                EXPECT_EQ(g.cost(0, s, a), beta[m][l] - theta[m][l]);
                EXPECT_NEAR(g.cost(0, s, a) + g.cost(1, s, a), p.holding(s), 1e-12);
            }
}

TEST(Queue, InvalidParameters) {
    QueueParams p = default_params(0.1);
    p.max_packets = 1;
    EXPECT_THROW(build_queue_game(p), std::invalid_argument);
    p = default_params(0.1);
    p.service_rates[1] = 0.0;
    EXPECT_THROW(build_queue_game(p), std::invalid_argument);
    EXPECT_THROW(default_params(1.0), std::invalid_argument);
}

TEST(Queue, EmptyStateEquilibriumMatchesClosedForm) {
    // From s = 0 every action leads to s = 1, so the stage game there is the
    // cost bimatrix shifted per player by a constant.
    const GameSpec g = build_queue_game(default_params(0.1));
    Eigen::MatrixXd A(2, 2), B(2, 2);
    for (int m = 0; m < 2; ++m)
        for (int l = 0; l < 2; ++l) {
            A(m, l) = g.cost(0, 0, m * 2 + l);
            B(m, l) = g.cost(1, 0, m * 2 + l);
        }
    ASSERT_TRUE(oracle::pure_equilibria(A, B).empty());
    const auto expect = oracle::mixed_2x2(A, B);
    EXPECT_NEAR(expect[0][0], 0.625, 1e-12);
    EXPECT_NEAR(expect[1][0], 0.75, 1e-12);
    for (double alpha : {0.0, 0.1}) {
        const std::vector<double> alphas{alpha, alpha};
        const auto ne = stage_nash_iteration(g, alphas, EquilibriumPolicy::first_lemke_howson, 1e-12);
        ASSERT_TRUE(ne.converged);
        EXPECT_NEAR(ne.x.probs[0][0][0], expect[0][0], 1e-10);
        EXPECT_NEAR(ne.x.probs[1][0][0], expect[1][0], 1e-10);
    }
}

TEST(Queue, GammaOverride) {
    const GameSpec g = build_queue_game(default_params(0.7));
    EXPECT_EQ(g.discount(), 0.7);
}
