#include <gtest/gtest.h>

#include "oracles.hpp"
#include "riskgame/dp_oracle.hpp"
#include "riskgame/queueing.hpp"
#include "riskgame/ranashql.hpp"

using namespace riskgame;

namespace {

/// Textbook Nash-Q with the same sampling order as the learner: per player an
/// exploration coin then an action draw, then the next state.
QTable classical_nash_q(const GameSpec& g, const LearnerConfig& cfg) {
    Rng rng(cfg.seed);
    QTable q(2, g.num_states(), g.num_joint());
    std::vector<long long> visits(static_cast<std::size_t>(g.num_states()) * g.num_joint(), 0);
    int s = cfg.initial_state;
    for (long long n = 1; n <= cfg.outer_iters; ++n) {
        const MixedProfile eq = pick_equilibrium(q.stage_game(g.actions(), s), cfg.policy);
        std::vector<int> prof(2);
        for (int i = 0; i < 2; ++i) {
            if (uniform01(rng) < cfg.epsilon) prof[i] = uniform_index(rng, g.num_actions(i));
            else prof[i] = sample_index(rng, eq[i]);
        }
        const int a = g.encode(prof);
        const int k = sample_index(rng, g.row(s, a));
        const long long count = ++visits[static_cast<std::size_t>(s) * g.num_joint() + a];
        const double theta = 1.0 / std::pow(static_cast<double>(count), cfg.beta);
        const MixedProfile en = pick_equilibrium(q.stage_game(g.actions(), k), cfg.policy);
        std::vector<double> next(2);
        for (int i = 0; i < 2; ++i) {
            double v = 0.0;
            for (int b = 0; b < g.num_joint(); ++b) {
                const double p = en[0][g.own_action(b, 0)] * en[1][g.own_action(b, 1)];
                if (p != 0.0) v += p * q.at(i, k, b);
            }
            next[i] = (1.0 - theta) * q.at(i, s, a) + theta * (g.cost(i, s, a) + g.discount() * v);
        }
        for (int i = 0; i < 2; ++i) q.at(i, s, a) = next[i];
        s = k;
    }
    return q;
}

LearnerConfig small_config(long long n, std::uint64_t seed) {
    LearnerConfig c;
    c.outer_iters = n;
    c.inner_iters = 1;
    c.seed = seed;
    return c;
}

}  // namespace

TEST(RaNashQL, LearningRateAndUpdate) {
    EXPECT_EQ(learning_rate(1, 0.5), 1.0);
    EXPECT_NEAR(learning_rate(4, 0.5), 0.5, 1e-15);
    EXPECT_NEAR(q_update(2.0, 6.0, 4, 0.5), 4.0, 1e-15);
    EXPECT_EQ(q_update(2.0, 6.0, 1, 0.7), 6.0);
}

TEST(RaNashQL, QHatUsesRiskIntegrand) {
    const auto sp = make_cvar_spec(0.5, -10.0, 10.0);
    const std::vector<double> y{1.0}, z;
    EXPECT_DOUBLE_EQ(q_hat(sp, 2.0, 4.0, 0.5, y, z), cvar_g(4.0, 1.0, 0.5));
    const auto neutral = make_neutral_spec();
    EXPECT_EQ(q_hat(neutral, 2.0, 4.0, 0.5, {}, {}), 4.0);
}

TEST(RaNashQL, AlphaZeroIsBitwiseClassicalNashQ) {
    Rng rng(12);
    const GameSpec g = oracle::random_game(rng, 4, {2, 3}, 0.7);
    const std::vector<double> alphas{0.0, 0.0};
    for (double beta : {0.5, 0.8}) {
        LearnerConfig cfg = small_config(20000, 5);
        cfg.beta = beta;
        const QTable ref = classical_nash_q(g, cfg);
        const auto cvar_run = run_ranashql(g, make_learner_specs(g, alphas), cfg);
        const auto neutral_run = run_ranashql(g, {make_neutral_spec(), make_neutral_spec()}, cfg);
        for (int i = 0; i < 2; ++i) {
            EXPECT_EQ(cvar_run.q.q[i], ref.q[i]) << "cvar spec, beta " << beta;
            EXPECT_EQ(neutral_run.q.q[i], ref.q[i]) << "neutral spec, beta " << beta;
        }
    }
}

TEST(RaNashQL, QueueAlphaZeroIsBitwiseClassicalNashQ) {
    const GameSpec g = build_queue_game(default_params(0.1));
    const std::vector<double> alphas{0.0, 0.0};
    const LearnerConfig cfg = small_config(30000, 9);
    const QTable ref = classical_nash_q(g, cfg);
    const auto run = run_ranashql(g, make_learner_specs(g, alphas), cfg);
    for (int i = 0; i < 2; ++i) EXPECT_EQ(run.q.q[i], ref.q[i]);
}

TEST(RaNashQL, DeterministicForSeed) {
    const GameSpec g = build_queue_game(default_params(0.1));
    const std::vector<double> alphas{0.1, 0.1};
    LearnerConfig cfg = small_config(5000, 3);
    cfg.inner_iters = 3;
    const auto a = run_ranashql(g, make_learner_specs(g, alphas), cfg);
    const auto b = run_ranashql(g, make_learner_specs(g, alphas), cfg);
    EXPECT_EQ(a.q.q, b.q.q);
    EXPECT_EQ(a.visits, b.visits);
    cfg.seed = 4;
    const auto c = run_ranashql(g, make_learner_specs(g, alphas), cfg);
    EXPECT_NE(a.q.q, c.q.q);
}

TEST(RaNashQL, LearnsRiskAverseMdpValues) {
    // Player 1 has a single action, so the stage games reduce to minimization
    // and the fixed point is the per-action CVaR Bellman equation.
    Rng rng(31);
    const GameSpec g = oracle::random_game(rng, 3, {2, 1}, 0.5, 2.0);
    for (double alpha : {0.0, 0.3}) {
        const std::vector<double> alphas{alpha, alpha};
        const auto ne = stage_nash_iteration(g, alphas, EquilibriumPolicy::first_lemke_howson, 1e-13);
        ASSERT_TRUE(ne.converged);
        LearnerConfig cfg = small_config(300000, 2);
        cfg.beta = 0.8;
        cfg.epsilon = 0.5;
        const auto run = run_ranashql(g, make_learner_specs(g, alphas), cfg);
        double err = 0.0;
        for (int s = 0; s < g.num_states(); ++s) {
            const StageGame model = model_stage_game(g, alphas, ne.v, s);
            for (int a = 0; a < g.num_joint(); ++a) err = std::max(err, std::abs(run.q.at(0, s, a) - model.costs[0][a]));
        }
        EXPECT_LT(err, 0.1) << "alpha " << alpha;
    }
}

TEST(RaNashQL, ExtractMatchesStageEquilibria) {
    const GameSpec g = build_queue_game(default_params(0.1));
    const std::vector<double> alphas{0.0, 0.0};
    const auto run = run_ranashql(g, make_learner_specs(g, alphas), small_config(10000, 1));
    const MultiStrategy x = extract_equilibrium(run.q, g.actions(), EquilibriumPolicy::first_lemke_howson);
    EXPECT_EQ(x.probs, run.strategy.probs);
    EXPECT_NO_THROW(check_strategy(g, run.strategy, 1e-9));
}

TEST(RaNashQL, TraceAndVisits) {
    const GameSpec g = build_queue_game(default_params(0.1));
    const std::vector<double> alphas{0.1, 0.1};
    LearnerConfig cfg = small_config(1000, 1);
    cfg.trace_every = 100;
    cfg.clock = SaspClock::per_outer;
    const auto run = run_ranashql(g, make_learner_specs(g, alphas), cfg);
    ASSERT_EQ(run.trace.size(), 10u);
    EXPECT_EQ(run.trace.back().n, 1000);
    long long total = 0;
    for (long long v : run.visits) total += v;
    EXPECT_EQ(total, 1000);
    for (const auto& r : run.trace) EXPECT_EQ(r.wall_seconds, 0.0);
}

TEST(RaNashQL, LearnerSpecsCoverValueRange) {
    const GameSpec g = build_queue_game(default_params(0.1));
    const std::vector<double> alphas{0.1, 0.2};
    const auto specs = make_learner_specs(g, alphas);
    for (int i = 0; i < 2; ++i) {
        double lo = 0.0, hi = 0.0;
        for (int s = 0; s < g.num_states(); ++s)
            for (int a = 0; a < g.num_joint(); ++a) {
                lo = std::min(lo, g.cost(i, s, a));
                hi = std::max(hi, g.cost(i, s, a));
            }
        EXPECT_LT(specs[i].y_domain.lo[0], lo / 0.9);
        EXPECT_GT(specs[i].y_domain.hi[0], hi / 0.9);
        EXPECT_EQ(specs[i].alpha, alphas[i]);
    }
}

TEST(RaNashQL, ConfigValidation) {
    LearnerConfig c;
    c.beta = 0.0;
    EXPECT_THROW(c.validate(), std::invalid_argument);
    c.beta = 0.5;
    c.epsilon = 1.5;
    EXPECT_THROW(c.validate(), std::invalid_argument);
    c.epsilon = 0.2;
    c.sasp_exponent = 0.5;
    EXPECT_THROW(c.validate(), std::invalid_argument);
    c.sasp_exponent = 0.75;
    c.inner_iters = 0;
    EXPECT_THROW(c.validate(), std::invalid_argument);
}

TEST(Complexity, HandEvaluation) {
    // S = A = 1, delta = 1/2, eps = 1, beta = 1/2: ln(2)^2 + 0.
    EXPECT_NEAR(complexity_bound(1, 1, 0.5, 1, 0.5), std::log(2.0) * std::log(2.0), 1e-15);
    // S A = 4, delta = 0.1, eps = 0.5, beta = 0.5.
    const double first = 4 * std::log(4 / 0.05) / 0.25;
    const double second = std::log(2 / 0.5);
    EXPECT_NEAR(complexity_bound(2, 2, 0.1, 0.5, 0.5), first * first + second * second, 1e-9);
}

TEST(Complexity, Errors) {
    EXPECT_THROW(complexity_bound(30, 4, 0.1, 0.5, 1.0), std::domain_error);
    EXPECT_THROW(complexity_bound(30, 4, 0.1, 0.5, 0.0), std::domain_error);
    EXPECT_THROW(complexity_bound(30, 4, 1.5, 0.5, 0.5), std::domain_error);
    EXPECT_THROW(complexity_bound(30, 4, 0.1, 0.0, 0.5), std::domain_error);
    EXPECT_THROW(complexity_bound(1, 1, 0.5, 10.0, 0.5), std::domain_error);
}
