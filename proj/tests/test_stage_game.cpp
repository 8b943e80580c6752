#include <gtest/gtest.h>

#include "oracles.hpp"
#include "riskgame/stage_game.hpp"

using namespace riskgame;

namespace {

StageGame table_game(int which) {
    Eigen::MatrixXd A(2, 2), B(2, 2);
    if (which == 1) {
        A << 0, 10, 7, 11;
        B << 1, 7, 10, 8;
    } else if (which == 2) {
        A << 5, 10, 4, 8;
        B << 5, 4, 10, 8;
    } else {
        A << 0, 10, 7, 8;
        B << 1, 9, 10, 8;
    }
    return StageGame::bimatrix(A, B);
}

MixedProfile pure(int r, int c) {
    MixedProfile p{{0.0, 0.0}, {0.0, 0.0}};
    p[0][r] = 1.0;
    p[1][c] = 1.0;
    return p;
}

double max_diff(const MixedProfile& a, const MixedProfile& b) {
    double d = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i)
        for (std::size_t h = 0; h < a[i].size(); ++h) d = std::max(d, std::abs(a[i][h] - b[i][h]));
    return d;
}

StageGame random_bimatrix(Rng& rng, int m, int n) {
    Eigen::MatrixXd A(m, n), B(m, n);
    for (int r = 0; r < m; ++r)
        for (int c = 0; c < n; ++c) {
            A(r, c) = oracle::uniform(rng, -10, 10);
            B(r, c) = oracle::uniform(rng, -10, 10);
        }
    return StageGame::bimatrix(A, B);
}

}  // namespace

TEST(StageGame, NashValueOfPureAndUniform) {
    const StageGame g = table_game(1);
    EXPECT_EQ(nash_value(g, pure(0, 0), 0), 0.0);
    EXPECT_EQ(nash_value(g, pure(0, 0), 1), 1.0);
    const MixedProfile u{{0.5, 0.5}, {0.5, 0.5}};
    EXPECT_NEAR(nash_value(g, u, 0), (0 + 10 + 7 + 11) / 4.0, 1e-12);
}

TEST(StageGame, BestUnilateralGainExamples) {
    const StageGame g = table_game(1);
    EXPECT_LE(best_unilateral_gain(g, pure(0, 0)), 1e-12);
    // At (Down, Right) player 1 moves to Up (11 -> 10), player 2 to Left (8 -> 10 is worse).
    EXPECT_NEAR(best_unilateral_gain(g, pure(1, 1)), 1.0, 1e-12);
    StageGame flat = g;
    for (auto& c : flat.costs) std::fill(c.begin(), c.end(), 3.0);
    EXPECT_EQ(best_unilateral_gain(flat, MixedProfile{{0.3, 0.7}, {0.9, 0.1}}), 0.0);
}

TEST(StageGame, TableGamesLemkeHowson) {
    const auto g1 = lemke_howson(table_game(1));
    ASSERT_TRUE(g1);
    EXPECT_LT(max_diff(*g1, pure(0, 0)), 1e-12);
    const auto g2 = lemke_howson(table_game(2));
    ASSERT_TRUE(g2);
    EXPECT_LT(max_diff(*g2, pure(1, 1)), 1e-12);
}

TEST(StageGame, MatchingPenniesIsUniform) {
    Eigen::MatrixXd A(2, 2), B(2, 2);
    A << 1, -1, -1, 1;
    B = -A;
    const auto g = StageGame::bimatrix(A, B);
    for (int label = 0; label < 4; ++label) {
        const auto lh = lemke_howson(g, label);
        ASSERT_TRUE(lh);
        EXPECT_LT(max_diff(*lh, MixedProfile{{0.5, 0.5}, {0.5, 0.5}}), 1e-12);
    }
}

TEST(StageGame, GameThreeEnumeration) {
    const auto res = enumerate_equilibria(table_game(3));
    ASSERT_EQ(res.equilibria.size(), 3u);
    EXPECT_FALSE(res.degenerate);
    Eigen::MatrixXd A(2, 2), B(2, 2);
    A << 0, 10, 7, 8;
    B << 1, 9, 10, 8;
    const auto mixed = oracle::mixed_2x2(A, B);
    std::vector<MixedProfile> expect{pure(0, 0), pure(1, 1), mixed};
    std::sort(expect.begin(), expect.end());
    for (std::size_t e = 0; e < 3; ++e) EXPECT_LT(max_diff(res.equilibria[e], expect[e]), 1e-12);
}

TEST(StageGame, Classification) {
    EXPECT_EQ(classify(table_game(1), pure(0, 0), 1e-9).kind, EquilibriumKind::global_optimal);
    EXPECT_EQ(classify(table_game(2), pure(1, 1), 1e-9).kind, EquilibriumKind::saddle);
    const auto c3 = classify(table_game(3), pure(1, 1), 1e-9);
    EXPECT_EQ(c3.kind, EquilibriumKind::mixed_point);
    EXPECT_EQ(c3.subset, std::vector<int>{0});
    EXPECT_EQ(classify(table_game(3), pure(0, 0), 1e-9).kind, EquilibriumKind::global_optimal);
    EXPECT_THROW(classify(table_game(1), pure(1, 1), 1e-9), std::invalid_argument);
}

TEST(StageGame, DominantStrategyGame) {
    Eigen::MatrixXd A(3, 3), B(3, 3);
    A << 0, 0, 0, 1, 1, 1, 2, 2, 2;
    B << 5, 1, 3, 5, 1, 3, 5, 1, 3;
    const auto res = enumerate_equilibria(StageGame::bimatrix(A, B));
    ASSERT_EQ(res.equilibria.size(), 1u);
    EXPECT_EQ(res.equilibria[0][0], (std::vector<double>{1, 0, 0}));
    EXPECT_EQ(res.equilibria[0][1], (std::vector<double>{0, 1, 0}));
}

TEST(StageGame, RandomGamesAreCertified) {
    Rng rng(99);
    for (int rep = 0; rep < 100; ++rep) {
        const int m = 1 + uniform_index(rng, 4), n = 1 + uniform_index(rng, 4);
        const StageGame g = random_bimatrix(rng, m, n);
        const auto all = enumerate_equilibria(g);
        ASSERT_FALSE(all.equilibria.empty());
        for (const auto& e : all.equilibria) EXPECT_LT(best_unilateral_gain(g, e), 1e-8);
        for (int label = 0; label < m + n; ++label) {
            const auto lh = lemke_howson(g, label);
            ASSERT_TRUE(lh) << "rep " << rep << " label " << label;
            EXPECT_LT(best_unilateral_gain(g, *lh), 1e-8);
            // Lemke-Howson reaches equilibria that enumeration also lists.
            double nearest = 1e300;
            for (const auto& e : all.equilibria) nearest = std::min(nearest, max_diff(e, *lh));
            EXPECT_LT(nearest, 1e-7);
        }
    }
}

TEST(StageGame, TwoByTwoMatchesClosedForm) {
    Rng rng(7);
    int checked = 0;
    while (checked < 30) {
        const StageGame g = random_bimatrix(rng, 2, 2);
        const Eigen::MatrixXd A = g.matrix(0), B = g.matrix(1);
        if (!oracle::pure_equilibria(A, B).empty()) continue;
        const auto lh = lemke_howson(g);
        ASSERT_TRUE(lh);
        EXPECT_LT(max_diff(*lh, oracle::mixed_2x2(A, B)), 1e-10);
        ++checked;
    }
}

TEST(StageGame, PureEquilibriaFoundByEnumeration) {
    Rng rng(17);
    for (int rep = 0; rep < 50; ++rep) {
        const StageGame g = random_bimatrix(rng, 3, 3);
        const auto res = enumerate_equilibria(g);
        for (auto [r, c] : oracle::pure_equilibria(g.matrix(0), g.matrix(1))) {
            MixedProfile p{{0, 0, 0}, {0, 0, 0}};
            p[0][r] = p[1][c] = 1.0;
            bool found = false;
            for (const auto& e : res.equilibria) found = found || max_diff(e, p) < 1e-12;
            EXPECT_TRUE(found);
        }
    }
}

TEST(StageGame, DegenerateGameIsFlagged) {
    Eigen::MatrixXd A = Eigen::MatrixXd::Zero(2, 2), B(2, 2);
    B << 0, 1, 0, 1;
    const auto res = enumerate_equilibria(StageGame::bimatrix(A, B));
    EXPECT_TRUE(res.degenerate);
    EXPECT_FALSE(res.equilibria.empty());
    for (const auto& e : res.equilibria) EXPECT_LT(best_unilateral_gain(StageGame::bimatrix(A, B), e), 1e-8);
}

TEST(StageGame, PolicyLowestTotalCost) {
    const auto e = pick_equilibrium(table_game(3), EquilibriumPolicy::lowest_total_cost);
    EXPECT_LT(max_diff(e, pure(0, 0)), 1e-12);
}

TEST(StageGame, RejectsBadInput) {
    StageGame g = table_game(1);
    g.costs[0][1] = std::numeric_limits<double>::quiet_NaN();
    EXPECT_THROW(check_stage_game(g), std::invalid_argument);
    EXPECT_THROW(enumerate_equilibria(StageGame::bimatrix(Eigen::MatrixXd::Zero(6, 2), Eigen::MatrixXd::Zero(6, 2))),
                 std::invalid_argument);
}
