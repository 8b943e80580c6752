#pragma once

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "riskgame/game_model.hpp"
#include "riskgame/queueing.hpp"
#include "riskgame/ranashql.hpp"
#include "riskgame/risk.hpp"
#include "riskgame/simulation.hpp"
#include "riskgame/stage_game.hpp"

namespace riskgame {

using json = nlohmann::json;

constexpr int kSchemaVersion = 1;

/// Schema violation; `path` is a JSON pointer to the offending key.
class ConfigError : public std::runtime_error {
public:
    ConfigError(std::string path, const std::string& what)
        : std::runtime_error(path + ": " + what), path_(std::move(path)) {}
    const std::string& path() const { return path_; }

private:
    std::string path_;
};

/// Missing or unreadable file.
class FileError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Six significant digits.
inline std::string fmt_num(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return buf;
}

namespace detail {

inline const json& require(const json& j, const std::string& key, const std::string& path) {
    if (!j.is_object()) throw ConfigError(path, "expected an object");
    auto it = j.find(key);
    if (it == j.end()) throw ConfigError(path + "/" + key, "missing required key");
    return *it;
}

inline double get_number(const json& j, const std::string& path) {
    if (!j.is_number()) throw ConfigError(path, "expected a number");
    return j.get<double>();
}

inline long long get_integer(const json& j, const std::string& path) {
    if (!j.is_number_integer()) throw ConfigError(path, "expected an integer");
    return j.get<long long>();
}

inline double opt_number(const json& j, const std::string& key, const std::string& path, double dflt) {
    auto it = j.find(key);
    return it == j.end() ? dflt : get_number(*it, path + "/" + key);
}

inline long long opt_integer(const json& j, const std::string& key, const std::string& path, long long dflt) {
    auto it = j.find(key);
    return it == j.end() ? dflt : get_integer(*it, path + "/" + key);
}

inline bool opt_bool(const json& j, const std::string& key, const std::string& path, bool dflt) {
    auto it = j.find(key);
    if (it == j.end()) return dflt;
    if (!it->is_boolean()) throw ConfigError(path + "/" + key, "expected a boolean");
    return it->get<bool>();
}

inline std::string opt_string(const json& j, const std::string& key, const std::string& path, std::string dflt) {
    auto it = j.find(key);
    if (it == j.end()) return dflt;
    if (!it->is_string()) throw ConfigError(path + "/" + key, "expected a string");
    return it->get<std::string>();
}

inline const json& require_array(const json& j, std::size_t n, const std::string& path) {
    if (!j.is_array()) throw ConfigError(path, "expected an array");
    if (j.size() != n) throw ConfigError(path, "expected " + std::to_string(n) + " entries, got " + std::to_string(j.size()));
    return j;
}

inline std::array<double, 2> pair_of(const json& j, const std::string& path) {
    require_array(j, 2, path);
    return {get_number(j[0], path + "/0"), get_number(j[1], path + "/1")};
}

}  // namespace detail

inline json read_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw FileError("cannot open file '" + path + "'");
    try {
        return json::parse(in);
    } catch (const json::parse_error& e) {
        throw ConfigError("", "malformed JSON in '" + path + "': " + e.what());
    }
}

inline void write_text_file(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw FileError("cannot write file '" + path + "'");
    out << text;
}

/// Queue parameters with optional overrides from a "game" object.
inline QueueParams parse_queue_params(const json& j, const std::string& path) {
    QueueParams p = default_params(detail::opt_number(j, "discount", path, 0.1));
    p.max_packets = static_cast<int>(detail::opt_integer(j, "max_packets", path, p.max_packets));
    if (j.contains("service_rates")) p.service_rates = detail::pair_of(j["service_rates"], path + "/service_rates");
    if (j.contains("admission_rates"))
        p.admission_rates = detail::pair_of(j["admission_rates"], path + "/admission_rates");
    for (const char* key : {"theta", "beta"}) {
        if (!j.contains(key)) continue;
        const std::string kp = path + "/" + key;
        detail::require_array(j[key], 2, kp);
        auto& dst = std::string(key) == "theta" ? p.theta : p.beta;
        for (int m = 0; m < 2; ++m) dst[m] = detail::pair_of(j[key][m], kp + "/" + std::to_string(m));
    }
    p.holding_a = detail::opt_number(j, "holding_a", path, p.holding_a);
    p.holding_b = detail::opt_number(j, "holding_b", path, p.holding_b);
    p.holding_rate = detail::opt_number(j, "holding_rate", path, p.holding_rate);
    return p;
}

/// Parses a game object: {"type": "queue", ...overrides} or
/// {"type": "explicit", "states", "actions", "discount", "kernel"[s][a][k], "costs"[i][s][a]}.
inline GameSpec parse_game(const json& j, const std::string& path = "/game") {
    const std::string type = detail::opt_string(j, "type", path, "queue");
    if (type == "queue") {
        try {
            return build_queue_game(parse_queue_params(j, path));
        } catch (const std::invalid_argument& e) {
            throw ConfigError(path, e.what());
        }
    }
    if (type != "explicit") throw ConfigError(path + "/type", "unknown game type '" + type + "'");
    const int S = static_cast<int>(detail::get_integer(detail::require(j, "states", path), path + "/states"));
    if (S <= 0) throw ConfigError(path + "/states", "must be positive");
    const json& ja = detail::require(j, "actions", path);
    if (!ja.is_array() || ja.empty()) throw ConfigError(path + "/actions", "expected a nonempty array");
    std::vector<int> actions;
    for (std::size_t i = 0; i < ja.size(); ++i) {
        const auto n = detail::get_integer(ja[i], path + "/actions/" + std::to_string(i));
        if (n <= 0) throw ConfigError(path + "/actions/" + std::to_string(i), "must be positive");
        actions.push_back(static_cast<int>(n));
    }
    const double gamma = detail::get_number(detail::require(j, "discount", path), path + "/discount");
    GameSpec g(S, actions, gamma);
    const int J = g.num_joint();
    const json& jk = detail::require_array(detail::require(j, "kernel", path), S, path + "/kernel");
    for (int s = 0; s < S; ++s) {
        const std::string ps = path + "/kernel/" + std::to_string(s);
        detail::require_array(jk[s], J, ps);
        for (int a = 0; a < J; ++a) {
            const std::string pa = ps + "/" + std::to_string(a);
            detail::require_array(jk[s][a], S, pa);
            for (int k = 0; k < S; ++k) g.P(s, a, k) = detail::get_number(jk[s][a][k], pa + "/" + std::to_string(k));
        }
    }
    const int I = g.num_players();
    const json& jc = detail::require_array(detail::require(j, "costs", path), I, path + "/costs");
    for (int i = 0; i < I; ++i) {
        const std::string pi = path + "/costs/" + std::to_string(i);
        detail::require_array(jc[i], S, pi);
        for (int s = 0; s < S; ++s) {
            const std::string ps = pi + "/" + std::to_string(s);
            detail::require_array(jc[i][s], J, ps);
            for (int a = 0; a < J; ++a) g.cost(i, s, a) = detail::get_number(jc[i][s][a], ps + "/" + std::to_string(a));
        }
    }
    if (auto v = validate(g); !v.empty()) throw ConfigError(path, v.front().message);
    return g;
}

inline json game_to_json(const GameSpec& g) {
    json j;
    j["type"] = "explicit";
    j["states"] = g.num_states();
    j["actions"] = g.actions();
    j["discount"] = g.discount();
    json k = json::array();
    for (int s = 0; s < g.num_states(); ++s) {
        json rows = json::array();
        for (int a = 0; a < g.num_joint(); ++a) {
            auto r = g.row(s, a);
            rows.push_back(std::vector<double>(r.begin(), r.end()));
        }
        k.push_back(rows);
    }
    j["kernel"] = k;
    json c = json::array();
    for (int i = 0; i < g.num_players(); ++i) {
        json per = json::array();
        for (int s = 0; s < g.num_states(); ++s) {
            std::vector<double> row(g.num_joint());
            for (int a = 0; a < g.num_joint(); ++a) row[a] = g.cost(i, s, a);
            per.push_back(row);
        }
        c.push_back(per);
    }
    j["costs"] = c;
    return j;
}

struct SimulationConfig {
    int horizon = 0;  ///< <= 0 selects default_horizon
    int samples = 1000;
    int initial_state = 0;
    std::uint64_t seed = 0;
    std::vector<double> alphas{0.05, 0.10};
};

struct RunConfig {
    GameSpec game;
    std::vector<double> alphas;  ///< per player; 0 for risk-neutral
    std::vector<bool> neutral;   ///< per player; true when declared "neutral"
    LearnerConfig learner;
    SimulationConfig simulation;
};

inline EquilibriumPolicy parse_policy(const std::string& s, const std::string& path) {
    if (s == "first_lemke_howson") return EquilibriumPolicy::first_lemke_howson;
    if (s == "lowest_total_cost") return EquilibriumPolicy::lowest_total_cost;
    throw ConfigError(path, "unknown equilibrium policy '" + s + "'");
}

inline LearnerConfig parse_learner(const json& j, const std::string& path) {
    LearnerConfig c;
    if (!j.is_object()) throw ConfigError(path, "expected an object");
    c.outer_iters = detail::opt_integer(j, "outer_iters", path, c.outer_iters);
    c.inner_iters = static_cast<int>(detail::opt_integer(j, "inner_iters", path, c.inner_iters));
    c.epsilon = detail::opt_number(j, "epsilon", path, c.epsilon);
    c.beta = detail::opt_number(j, "beta", path, c.beta);
    c.sasp_constant = detail::opt_number(j, "sasp_constant", path, c.sasp_constant);
    c.sasp_exponent = detail::opt_number(j, "sasp_exponent", path, c.sasp_exponent);
    c.h_y = detail::opt_number(j, "h_y", path, c.h_y);
    c.h_z = detail::opt_number(j, "h_z", path, c.h_z);
    c.window_fraction = detail::opt_number(j, "window_fraction", path, c.window_fraction);
    const std::string clock = detail::opt_string(j, "sasp_clock", path, "per_pair");
    if (clock == "per_pair") c.clock = SaspClock::per_pair;
    else if (clock == "per_outer") c.clock = SaspClock::per_outer;
    else throw ConfigError(path + "/sasp_clock", "unknown clock '" + clock + "'");
    c.policy = parse_policy(detail::opt_string(j, "equilibrium_policy", path, "first_lemke_howson"),
                            path + "/equilibrium_policy");
    c.seed = static_cast<std::uint64_t>(detail::opt_integer(j, "seed", path, 0));
    c.initial_state = static_cast<int>(detail::opt_integer(j, "initial_state", path, 0));
    c.trace_every = detail::opt_integer(j, "trace_every", path, 0);
    c.trace_wallclock = detail::opt_bool(j, "trace_wallclock", path, false);
    try {
        c.validate();
    } catch (const std::invalid_argument& e) {
        throw ConfigError(path, e.what());
    }
    return c;
}

inline RunConfig parse_run_config(const json& j) {
    if (!j.is_object()) throw ConfigError("", "expected a JSON object at the top level");
    const json& ver = detail::require(j, "schema_version", "");
    if (detail::get_integer(ver, "/schema_version") != kSchemaVersion)
        throw ConfigError("/schema_version", "unsupported schema version (expected " + std::to_string(kSchemaVersion) + ")");
    RunConfig rc;
    rc.game = parse_game(detail::require(j, "game", ""), "/game");
    const int I = rc.game.num_players();
    rc.alphas.assign(I, 0.0);
    rc.neutral.assign(I, true);
    if (j.contains("risk")) {
        const json& jr = detail::require_array(j["risk"], I, "/risk");
        for (int i = 0; i < I; ++i) {
            const std::string p = "/risk/" + std::to_string(i);
            const std::string type = detail::opt_string(jr[i], "type", p, "neutral");
            if (type == "neutral") continue;
            if (type != "cvar") throw ConfigError(p + "/type", "unknown risk type '" + type + "'");
            const double a = detail::get_number(detail::require(jr[i], "alpha", p), p + "/alpha");
            if (!(a >= 0.0 && a < 1.0)) throw ConfigError(p + "/alpha", "alpha must lie in [0,1)");
            rc.alphas[i] = a;
            rc.neutral[i] = false;
        }
    }
    if (j.contains("learner")) rc.learner = parse_learner(j["learner"], "/learner");
    if (j.contains("simulation")) {
        const json& js = j["simulation"];
        const std::string p = "/simulation";
        if (!js.is_object()) throw ConfigError(p, "expected an object");
        rc.simulation.horizon = static_cast<int>(detail::opt_integer(js, "horizon", p, 0));
        rc.simulation.samples = static_cast<int>(detail::opt_integer(js, "samples", p, 1000));
        if (rc.simulation.samples < 1) throw ConfigError(p + "/samples", "must be >= 1");
        rc.simulation.initial_state = static_cast<int>(detail::opt_integer(js, "initial_state", p, 0));
        rc.simulation.seed = static_cast<std::uint64_t>(detail::opt_integer(js, "seed", p, 0));
        if (js.contains("alphas")) {
            if (!js["alphas"].is_array()) throw ConfigError(p + "/alphas", "expected an array");
            rc.simulation.alphas.clear();
            for (std::size_t k = 0; k < js["alphas"].size(); ++k)
                rc.simulation.alphas.push_back(detail::get_number(js["alphas"][k], p + "/alphas/" + std::to_string(k)));
        }
    }
    return rc;
}

/// Risk specs for the learner: expectation for "neutral", CVaR otherwise.
inline std::vector<SaddleRiskSpec> learner_specs(const RunConfig& rc) {
    auto specs = make_learner_specs(rc.game, rc.alphas);
    for (int i = 0; i < rc.game.num_players(); ++i)
        if (rc.neutral[i]) specs[i] = make_neutral_spec();
    return specs;
}

// Checkpoints -----------------------------------------------------------

inline json strategy_to_json(const MultiStrategy& x) {
    json j;
    j["kind"] = "strategy";
    j["schema_version"] = kSchemaVersion;
    j["players"] = x.probs.size();
    j["states"] = x.probs.empty() ? 0 : x.probs[0].size();
    j["probs"] = x.probs;
    return j;
}

inline MultiStrategy strategy_from_json(const json& j) {
    if (detail::opt_string(j, "kind", "", "") != "strategy") throw ConfigError("/kind", "expected kind 'strategy'");
    const json& jp = detail::require(j, "probs", "");
    if (!jp.is_array()) throw ConfigError("/probs", "expected an array");
    MultiStrategy x;
    try {
        x.probs = jp.get<std::vector<std::vector<std::vector<double>>>>();
    } catch (const json::exception& e) {
        throw ConfigError("/probs", std::string("expected [player][state][action] numbers: ") + e.what());
    }
    return x;
}

inline json qtable_to_json(const QTable& q, const std::vector<long long>& visits) {
    json j;
    j["kind"] = "qtable";
    j["schema_version"] = kSchemaVersion;
    j["players"] = q.num_players();
    j["states"] = q.num_states;
    j["num_joint"] = q.num_joint;
    json jq = json::array();
    for (int i = 0; i < q.num_players(); ++i) {
        json per = json::array();
        for (int s = 0; s < q.num_states; ++s) {
            std::vector<double> row(q.num_joint);
            for (int a = 0; a < q.num_joint; ++a) row[a] = q.at(i, s, a);
            per.push_back(row);
        }
        jq.push_back(per);
    }
    j["q"] = jq;
    json jv = json::array();
    for (int s = 0; s < q.num_states; ++s)
        jv.push_back(std::vector<long long>(visits.begin() + static_cast<std::ptrdiff_t>(s) * q.num_joint,
                                            visits.begin() + static_cast<std::ptrdiff_t>(s + 1) * q.num_joint));
    j["visits"] = jv;
    return j;
}

inline QTable qtable_from_json(const json& j) {
    if (detail::opt_string(j, "kind", "", "") != "qtable") throw ConfigError("/kind", "expected kind 'qtable'");
    const int I = static_cast<int>(detail::get_integer(detail::require(j, "players", ""), "/players"));
    const int S = static_cast<int>(detail::get_integer(detail::require(j, "states", ""), "/states"));
    const int J = static_cast<int>(detail::get_integer(detail::require(j, "num_joint", ""), "/num_joint"));
    QTable q(I, S, J);
    const json& jq = detail::require_array(detail::require(j, "q", ""), I, "/q");
    for (int i = 0; i < I; ++i) {
        detail::require_array(jq[i], S, "/q/" + std::to_string(i));
        for (int s = 0; s < S; ++s) {
            const std::string p = "/q/" + std::to_string(i) + "/" + std::to_string(s);
            detail::require_array(jq[i][s], J, p);
            for (int a = 0; a < J; ++a) q.at(i, s, a) = detail::get_number(jq[i][s][a], p + "/" + std::to_string(a));
        }
    }
    return q;
}

// CSV -------------------------------------------------------------------

inline std::string trace_csv(const std::vector<TraceRow>& trace, int players, bool wallclock) {
    std::ostringstream os;
    os << "n";
    for (int i = 0; i < players; ++i) os << ",q_delta_p" << i;
    os << ",min_visits";
    if (wallclock) os << ",wall_seconds";
    os << "\n";
    for (const auto& r : trace) {
        os << r.n;
        for (double d : r.q_delta) os << "," << fmt_num(d);
        os << "," << r.min_visits;
        if (wallclock) os << "," << fmt_num(r.wall_seconds);
        os << "\n";
    }
    return os.str();
}

/// Column name for a CVaR level: 0.05 -> cvar05, 0.1 -> cvar10.
inline std::string cvar_column(double alpha) {
    const double pct = alpha * 100.0;
    if (std::abs(pct - std::round(pct)) < 1e-9) {
        char buf[32];
        std::snprintf(buf, sizeof buf, "cvar%02d", static_cast<int>(std::round(pct)));
        return buf;
    }
    return "cvar" + fmt_num(pct);
}

inline std::string stats_csv(const std::vector<PlayerStats>& rows, const std::vector<double>& alphas) {
    std::ostringstream os;
    os << "player,mean,variance";
    for (double a : alphas) os << "," << cvar_column(a);
    os << "\n";
    for (const auto& r : rows) {
        os << r.player << "," << fmt_num(r.mean) << "," << fmt_num(r.variance);
        for (double c : r.cvar) os << "," << fmt_num(c);
        os << "\n";
    }
    return os.str();
}

}  // namespace riskgame
