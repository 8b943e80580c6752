#include <gtest/gtest.h>

#include "riskgame/io.hpp"

using namespace riskgame;

namespace {

std::string error_path(const json& j) {
    try {
        parse_run_config(j);
    } catch (const ConfigError& e) {
        return e.path();
    }
    return "<no error>";
}

json base_config() {
    return json::parse(R"({
        "schema_version": 1,
        "game": {"type": "queue", "discount": 0.1},
        "risk": [{"type": "cvar", "alpha": 0.1}, {"type": "neutral"}],
        "learner": {"outer_iters": 100, "beta": 0.7, "sasp_clock": "per_outer"},
        "simulation": {"horizon": 50, "samples": 20, "alphas": [0.05, 0.25]}
    })");
}

}  // namespace

TEST(Io, ParsesRunConfig) {
    const RunConfig rc = parse_run_config(base_config());
    EXPECT_EQ(rc.game.num_states(), 31);
    EXPECT_EQ(rc.alphas, (std::vector<double>{0.1, 0.0}));
    EXPECT_EQ(rc.neutral, (std::vector<bool>{false, true}));
    EXPECT_EQ(rc.learner.outer_iters, 100);
    EXPECT_EQ(rc.learner.beta, 0.7);
    EXPECT_EQ(rc.learner.clock, SaspClock::per_outer);
    EXPECT_EQ(rc.simulation.horizon, 50);
    EXPECT_EQ(rc.simulation.alphas, (std::vector<double>{0.05, 0.25}));
    const auto specs = learner_specs(rc);
    EXPECT_EQ(specs[0].y_domain.dim(), 1u);
    EXPECT_EQ(specs[1].y_domain.dim(), 0u);
}

TEST(Io, SchemaErrorsCarryKeyPaths) {
    json j = base_config();
    j.erase("schema_version");
    EXPECT_EQ(error_path(j), "/schema_version");
    j = base_config();
    j["schema_version"] = 7;
    EXPECT_EQ(error_path(j), "/schema_version");
    j = base_config();
    j["learner"]["epsilon"] = "big";
    EXPECT_EQ(error_path(j), "/learner/epsilon");
    j = base_config();
    j["risk"][0]["alpha"] = 1.0;
    EXPECT_EQ(error_path(j), "/risk/0/alpha");
    j = base_config();
    j["risk"][1]["type"] = "entropic";
    EXPECT_EQ(error_path(j), "/risk/1/type");
    j = base_config();
    j["simulation"]["samples"] = 0;
    EXPECT_EQ(error_path(j), "/simulation/samples");
    j = base_config();
    j["game"]["type"] = "grid";
    EXPECT_EQ(error_path(j), "/game/type");
    j = base_config();
    j["game"]["theta"] = json::array({json::array({1, 2})});
    EXPECT_EQ(error_path(j), "/game/theta");
    j = base_config();
    j["learner"]["beta"] = 1.5;
    EXPECT_EQ(error_path(j), "/learner");
}

TEST(Io, ExplicitGameRoundTrip) {
    GameSpec g(2, {2, 1}, 0.5);
    g.P(0, 0, 1) = 1.0;
    g.P(0, 1, 0) = 0.25;
    g.P(0, 1, 1) = 0.75;
    g.P(1, 0, 0) = 1.0;
    g.P(1, 1, 1) = 1.0;
    g.cost(0, 1, 1) = 3.5;
    g.cost(1, 0, 0) = -2.0;
    const GameSpec back = parse_game(game_to_json(g));
    EXPECT_EQ(back.kernel_data(), g.kernel_data());
    EXPECT_EQ(back.cost_data(), g.cost_data());
    EXPECT_EQ(back.actions(), g.actions());
    EXPECT_EQ(back.discount(), g.discount());
}

TEST(Io, ExplicitGameValidation) {
    json j = game_to_json(build_queue_game(default_params(0.1)));
    j["kernel"][3][2][0] = 0.5;
    try {
        parse_game(j);
        FAIL() << "expected a ConfigError";
    } catch (const ConfigError& e) {
        EXPECT_EQ(e.path(), "/game");
        EXPECT_NE(std::string(e.what()).find("s=3, a=2"), std::string::npos);
    }
    j = game_to_json(build_queue_game(default_params(0.1)));
    j["costs"][1][4] = json::array({1, 2});
    try {
        parse_game(j);
        FAIL() << "expected a ConfigError";
    } catch (const ConfigError& e) {
        EXPECT_EQ(e.path(), "/game/costs/1/4");
    }
}

TEST(Io, StrategyAndQTableRoundTrip) {
    const GameSpec g = build_queue_game(default_params(0.1));
    MultiStrategy x = MultiStrategy::uniform(g);
    x.probs[0][3] = {0.1, 0.9};
    const MultiStrategy xb = strategy_from_json(json::parse(strategy_to_json(x).dump()));
    EXPECT_EQ(xb.probs, x.probs);

    QTable q(2, 3, 4);
    for (int i = 0; i < 2; ++i)
        for (int s = 0; s < 3; ++s)
            for (int a = 0; a < 4; ++a) q.at(i, s, a) = 0.1 * i - 1.0 / (1 + s + a);
    std::vector<long long> visits(12, 5);
    const QTable qb = qtable_from_json(json::parse(qtable_to_json(q, visits).dump()));
    EXPECT_EQ(qb.q, q.q);
    EXPECT_THROW(strategy_from_json(qtable_to_json(q, visits)), ConfigError);
}

TEST(Io, MissingFile) {
    EXPECT_THROW(read_json_file("/nonexistent/config.json"), FileError);
}

TEST(Io, CsvFormats) {
    EXPECT_EQ(cvar_column(0.05), "cvar05");
    EXPECT_EQ(cvar_column(0.10), "cvar10");
    EXPECT_EQ(cvar_column(0.125), "cvar12.5");
    std::vector<PlayerStats> rows(1);
    rows[0].player = 0;
    rows[0].mean = -22.2222222;
    rows[0].variance = 0.0;
    rows[0].cvar = {1.0, 2.5};
    EXPECT_EQ(stats_csv(rows, {0.05, 0.1}), "player,mean,variance,cvar05,cvar10\n0,-22.2222,0,1,2.5\n");
    std::vector<TraceRow> tr(1);
    tr[0].n = 10;
    tr[0].q_delta = {0.5, 0.25};
    tr[0].min_visits = 3;
    tr[0].wall_seconds = 1.5;
    EXPECT_EQ(trace_csv(tr, 2, false), "n,q_delta_p0,q_delta_p1,min_visits\n10,0.5,0.25,3\n");
    EXPECT_EQ(trace_csv(tr, 2, true), "n,q_delta_p0,q_delta_p1,min_visits,wall_seconds\n10,0.5,0.25,3,1.5\n");
}
