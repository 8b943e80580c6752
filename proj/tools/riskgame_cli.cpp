// riskgame_cli: learn, evaluate, simulate, multilinear, bench-queue, complexity.
// Errors go to stderr as one JSON line and exit with a nonzero code.

#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "riskgame/dp_oracle.hpp"
#include "riskgame/io.hpp"
#include "riskgame/multilinear.hpp"
#include "riskgame/queueing.hpp"
#include "riskgame/ranashql.hpp"
#include "riskgame/simulation.hpp"

namespace fs = std::filesystem;
using namespace riskgame;

namespace {

enum Exit { kOk = 0, kFailure = 1, kUsage = 2, kConfig = 3, kFile = 4 };

int report_error(const std::string& kind, const std::string& message, const std::string& path = {}) {
    json j;
    j["error"] = kind;
    j["message"] = message;
    if (!path.empty()) j["path"] = path;
    std::cerr << j.dump() << "\n";
    return kind == "usage" ? kUsage : kind == "config" ? kConfig : kind == "file" ? kFile : kFailure;
}

RiskScope parse_scope(const std::string& s) {
    if (s == "joint") return RiskScope::joint;
    if (s == "per_action") return RiskScope::per_action;
    throw ConfigError("--scope", "expected joint or per_action");
}

/// A game file is either a run config (with "game" and optional "risk") or a
/// bare game object.
struct LoadedGame {
    GameSpec game;
    std::vector<double> alphas;
    std::optional<RunConfig> config;
};

LoadedGame load_game(const std::string& path) {
    const json j = read_json_file(path);
    if (j.is_object() && j.contains("schema_version") && j.contains("game")) {
        RunConfig rc = parse_run_config(j);
        LoadedGame out{rc.game, rc.alphas, std::nullopt};
        out.config = std::move(rc);
        return out;
    }
    LoadedGame out{parse_game(j, ""), {}, std::nullopt};
    out.alphas.assign(out.game.num_players(), 0.0);
    return out;
}

void check_alphas_arg(const std::vector<double>& alphas, const GameSpec& g, const std::string& flag) {
    if (static_cast<int>(alphas.size()) != g.num_players())
        throw ConfigError(flag, "expected one alpha per player (" + std::to_string(g.num_players()) + ")");
    for (double a : alphas)
        if (!(a >= 0.0 && a < 1.0)) throw ConfigError(flag, "alpha must lie in [0,1)");
}

MultiStrategy load_strategy(const std::string& path, const GameSpec& g) {
    MultiStrategy x = strategy_from_json(read_json_file(path));
    try {
        check_strategy(g, x, 1e-9);
    } catch (const std::exception& e) {
        throw ConfigError("/probs", e.what());
    }
    return x;
}

json report_to_json(const VerifyReport& r) {
    json j;
    j["gaps"] = r.gaps;
    j["tol"] = r.tol;
    j["pass"] = r.pass;
    return j;
}

// learn ---------------------------------------------------------------------

struct LearnArgs {
    std::string config, out;
    std::optional<std::uint64_t> seed;
};

int cmd_learn(const LearnArgs& a) {
    RunConfig rc = parse_run_config(read_json_file(a.config));
    if (a.seed) rc.learner.seed = *a.seed;
    LearnerResult res = run_ranashql(rc.game, learner_specs(rc), rc.learner);
    fs::create_directories(a.out);
    const fs::path dir(a.out);
    write_text_file((dir / "qtable.json").string(), qtable_to_json(res.q, res.visits).dump(1) + "\n");
    write_text_file((dir / "strategy.json").string(), strategy_to_json(res.strategy).dump(1) + "\n");
    write_text_file((dir / "trace.csv").string(),
                    trace_csv(res.trace, rc.game.num_players(), rc.learner.trace_wallclock));
    json summary;
    summary["outer_iters"] = rc.learner.outer_iters;
    summary["seed"] = rc.learner.seed;
    summary["out"] = a.out;
    std::cout << summary.dump() << "\n";
    return kOk;
}

// evaluate ------------------------------------------------------------------

struct EvaluateArgs {
    std::string game, strategy, scope = "per_action";
    double tol = 1e-2;
    std::vector<double> alphas;
};

int cmd_evaluate(const EvaluateArgs& a) {
    LoadedGame lg = load_game(a.game);
    if (!a.alphas.empty()) {
        check_alphas_arg(a.alphas, lg.game, "--alphas");
        lg.alphas = a.alphas;
    }
    if (!(a.tol > 0.0)) throw ConfigError("--tol", "must be positive");
    const MultiStrategy x = load_strategy(a.strategy, lg.game);
    DpOptions opt;
    opt.scope = parse_scope(a.scope);
    const VerifyReport rep = verify_equilibrium(lg.game, lg.alphas, x, a.tol, opt);
    std::cout << report_to_json(rep).dump() << "\n";
    return rep.pass ? kOk : kFailure;
}

// simulate ------------------------------------------------------------------

struct SimulateArgs {
    std::string strategy, game, out, dump;
    int samples = 1000;
    int horizon = 0;
    int initial_state = 0;
    std::uint64_t seed = 0;
    std::vector<double> alphas{0.05, 0.10};
};

std::string samples_csv(const CostSampleSet& set) {
    std::ostringstream os;
    os << "path";
    for (std::size_t i = 0; i < set.samples.size(); ++i) os << ",cost_p" << i;
    os << "\n";
    for (std::size_t k = 0; k < set.samples[0].size(); ++k) {
        os << k;
        for (const auto& per : set.samples) os << "," << fmt_num(per[k]);
        os << "\n";
    }
    return os.str();
}

int cmd_simulate(const SimulateArgs& a) {
    const LoadedGame lg = load_game(a.game);
    const MultiStrategy x = load_strategy(a.strategy, lg.game);
    for (double al : a.alphas)
        if (!(al >= 0.0 && al < 1.0)) throw ConfigError("--alphas", "alpha must lie in [0,1)");
    if (a.samples < 1) throw ConfigError("--samples", "must be >= 1");
    const int H = a.horizon > 0 ? a.horizon : default_horizon(lg.game);
    const CostSampleSet set = simulate_costs(lg.game, x, H, a.samples, a.initial_state, a.seed);
    const std::string csv = stats_csv(stats(set, a.alphas), a.alphas);
    if (a.out.empty()) std::cout << csv;
    else write_text_file(a.out, csv);
    if (!a.dump.empty()) write_text_file(a.dump, samples_csv(set));
    return kOk;
}

// multilinear ---------------------------------------------------------------

struct MultilinearArgs {
    std::string game, out = "multilinear_point.json", init = "random";
    double alpha1 = 0.0, alpha2 = 0.0;
    int restarts = 4;
    std::uint64_t seed = 0;
    double verify_tol = 1e-4;
};

int cmd_multilinear(const MultilinearArgs& a) {
    const LoadedGame lg = load_game(a.game);
    const std::vector<double> alphas{a.alpha1, a.alpha2};
    check_alphas_arg(alphas, lg.game, "--alpha1/--alpha2");
    if (a.restarts < 1) throw ConfigError("--restarts", "must be >= 1");
    MultilinearSystem sys(lg.game, alphas);
    std::optional<Eigen::VectorXd> init;
    if (a.init == "model") {
        const auto ne = stage_nash_iteration(lg.game, alphas, EquilibriumPolicy::first_lemke_howson, 1e-12);
        Eigen::VectorXd p = sys.make_point(ne.x, ne.v);
        recover_auxiliaries(sys, p);
        init = std::move(p);
    } else if (a.init != "random") {
        throw ConfigError("--init", "expected random or model");
    }
    LocalSolveConfig cfg;
    cfg.restarts = a.restarts;
    cfg.seed = a.seed;
    const LocalSolveResult res = solve_local(sys, cfg, init);

    json point;
    point["kind"] = "multilinear_point";
    point["schema_version"] = kSchemaVersion;
    point["alphas"] = alphas;
    point["strategy"] = strategy_to_json(sys.strategy(res.point));
    point["values"] = sys.values(res.point);
    point["vector"] = std::vector<double>(res.point.data(), res.point.data() + res.point.size());
    write_text_file(a.out, point.dump(1) + "\n");

    DpOptions opt;
    opt.scope = RiskScope::per_action;
    const VerifyReport rep = verify_equilibrium(lg.game, alphas, sys.strategy(res.point), a.verify_tol, opt);
    json j;
    j["residual"] = res.report.aggregate;
    json fam;
    for (int f = 0; f < kNumFamilies; ++f) fam[family_name(f)] = res.report.family_max[f];
    j["families"] = fam;
    j["restart"] = res.restart;
    j["point"] = a.out;
    j["verify"] = report_to_json(rep);
    std::cout << j.dump() << "\n";
    return kOk;
}

// bench-queue ---------------------------------------------------------------

struct BenchArgs {
    std::string mode = "neutral", out;
    double alpha1 = 0.1, alpha2 = 0.1, gamma = 0.1;
    long long outer_iters = 0;  ///< <= 0 selects the mode default
    double beta = 0.0;          ///< <= 0 selects the mode default
    std::uint64_t seed = 1;
    int samples = 1000;
    int horizon = 200;
    std::uint64_t sim_seed = 7;
};

int cmd_bench(const BenchArgs& a) {
    if (a.mode != "neutral" && a.mode != "cvar") throw ConfigError("--mode", "expected neutral or cvar");
    if (!(a.gamma > 0.0 && a.gamma < 1.0)) throw ConfigError("--gamma", "must lie in (0,1)");
    const GameSpec g = build_queue_game(default_params(a.gamma));
    std::vector<double> alphas{0.0, 0.0};
    if (a.mode == "cvar") {
        alphas = {a.alpha1, a.alpha2};
        check_alphas_arg(alphas, g, "--alpha1/--alpha2");
    }
    LearnerConfig lc;
    lc.outer_iters = a.outer_iters > 0 ? a.outer_iters : (a.mode == "neutral" ? 1000000 : 50000000);
    lc.inner_iters = 1;
    lc.epsilon = 0.2;
    lc.beta = a.beta > 0.0 ? a.beta : (a.mode == "neutral" ? 0.5 : 0.85);
    lc.seed = a.seed;
    try {
        lc.validate();
    } catch (const std::invalid_argument& e) {
        throw ConfigError("--beta", e.what());
    }
    std::vector<SaddleRiskSpec> specs = make_learner_specs(g, alphas);
    if (a.mode == "neutral") specs = {make_neutral_spec(), make_neutral_spec()};
    const LearnerResult learned = run_ranashql(g, std::move(specs), lc);
    const auto model = stage_nash_iteration(g, alphas, EquilibriumPolicy::first_lemke_howson, 1e-12);

    DpOptions opt;
    opt.scope = RiskScope::per_action;
    const std::vector<double> cols{0.05, 0.10};
    std::ostringstream os;
    os << "source,player,mean,variance";
    for (double c : cols) os << "," << cvar_column(c);
    os << ",verify_gap\n";
    json certs;
    for (const auto& [name, x] : {std::pair<std::string, const MultiStrategy*>{"learned", &learned.strategy},
                                  std::pair<std::string, const MultiStrategy*>{"model", &model.x}}) {
        const VerifyReport rep = verify_equilibrium(g, alphas, *x, 1e-2, opt);
        const auto rows = stats(simulate_costs(g, *x, a.horizon, a.samples, 0, a.sim_seed), cols);
        for (const auto& r : rows) {
            os << name << "," << r.player << "," << fmt_num(r.mean) << "," << fmt_num(r.variance);
            for (double c : r.cvar) os << "," << fmt_num(c);
            os << "," << fmt_num(rep.gaps[r.player]) << "\n";
        }
        certs[name] = report_to_json(rep);
    }
    std::cout << os.str();
    if (!a.out.empty()) {
        fs::create_directories(a.out);
        const fs::path dir(a.out);
        write_text_file((dir / "bench.csv").string(), os.str());
        write_text_file((dir / "strategy.json").string(), strategy_to_json(learned.strategy).dump(1) + "\n");
        write_text_file((dir / "verify.json").string(), certs.dump(1) + "\n");
    }
    return kOk;
}

// complexity ----------------------------------------------------------------

struct ComplexityArgs {
    double states = 0, actions = 0, delta = 0, epsilon = 0, beta = 0;
};

int cmd_complexity(const ComplexityArgs& a) {
    try {
        std::cout << fmt_num(complexity_bound(a.states, a.actions, a.delta, a.epsilon, a.beta)) << "\n";
    } catch (const std::domain_error& e) {
        return report_error("domain", e.what());
    }
    return kOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Risk-aware stochastic games: learning, verification, simulation"};
    app.require_subcommand(1);

    LearnArgs la;
    auto* learn = app.add_subcommand("learn", "Run the risk-aware Nash Q-learner");
    learn->add_option("--config", la.config, "Run config (JSON)")->required();
    learn->add_option("--seed", la.seed, "Override the learner seed");
    learn->add_option("--out", la.out, "Output directory")->required();

    EvaluateArgs ea;
    auto* evaluate = app.add_subcommand("evaluate", "Verify a strategy against best responses");
    evaluate->add_option("--game", ea.game, "Game or run config (JSON)")->required();
    evaluate->add_option("--strategy", ea.strategy, "Strategy file (JSON)")->required();
    evaluate->add_option("--tol", ea.tol, "Gap tolerance");
    evaluate->add_option("--alphas", ea.alphas, "Per-player CVaR levels (overrides the config)")->delimiter(',');
    evaluate->add_option("--scope", ea.scope, "Risk scope: per_action or joint");

    SimulateArgs sa;
    auto* simulate = app.add_subcommand("simulate", "Monte-Carlo cost table for a strategy");
    simulate->add_option("--strategy", sa.strategy, "Strategy file (JSON)")->required();
    auto* sim_game = simulate->add_option("--game", sa.game, "Game or run config (JSON)");
    simulate->add_option("--config", sa.game, "Alias of --game")->excludes(sim_game);
    simulate->add_option("--samples", sa.samples, "Number of sample paths");
    simulate->add_option("--alphas", sa.alphas, "CVaR levels for the table")->delimiter(',');
    simulate->add_option("--horizon", sa.horizon, "Path length (default: truncation error < 1e-6)");
    simulate->add_option("--initial-state", sa.initial_state, "Start state");
    simulate->add_option("--seed", sa.seed, "Simulation seed");
    simulate->add_option("--out", sa.out, "CSV output path (default stdout)");
    simulate->add_option("--dump", sa.dump, "Write raw per-path costs to this CSV");

    MultilinearArgs ma;
    auto* multi = app.add_subcommand("multilinear", "Solve the multilinear equilibrium system locally");
    multi->add_option("--game", ma.game, "Game or run config (JSON)")->required();
    multi->add_option("--alpha1", ma.alpha1, "CVaR level of player 0");
    multi->add_option("--alpha2", ma.alpha2, "CVaR level of player 1");
    multi->add_option("--restarts", ma.restarts, "Random restarts");
    multi->add_option("--seed", ma.seed, "Restart seed");
    multi->add_option("--init", ma.init, "First start point: random or model");
    multi->add_option("--out", ma.out, "Point output path (JSON)");
    multi->add_option("--verify-tol", ma.verify_tol, "Tolerance of the attached certificate");

    BenchArgs ba;
    auto* bench = app.add_subcommand("bench-queue", "Learn, verify and simulate on the queue game");
    bench->add_option("--mode", ba.mode, "neutral or cvar");
    bench->add_option("--alpha1", ba.alpha1, "CVaR level of the service provider (cvar mode)");
    bench->add_option("--alpha2", ba.alpha2, "CVaR level of the router (cvar mode)");
    bench->add_option("--gamma", ba.gamma, "Discount factor");
    bench->add_option("--outer-iters", ba.outer_iters, "Learner iterations (default 1e6 neutral, 5e7 cvar)");
    bench->add_option("--beta", ba.beta, "Learning-rate exponent (default 0.5 neutral, 0.85 cvar)");
    bench->add_option("--seed", ba.seed, "Learner seed");
    bench->add_option("--samples", ba.samples, "Simulated paths");
    bench->add_option("--horizon", ba.horizon, "Path length");
    bench->add_option("--sim-seed", ba.sim_seed, "Simulation seed");
    bench->add_option("--out", ba.out, "Directory for bench.csv, strategy.json, verify.json");

    ComplexityArgs ca;
    auto* complexity = app.add_subcommand("complexity", "Iteration-count bound of the learner");
    complexity->add_option("--states", ca.states, "Number of states")->required();
    complexity->add_option("--actions", ca.actions, "Number of joint actions")->required();
    complexity->add_option("--delta", ca.delta, "Failure probability")->required();
    complexity->add_option("--epsilon", ca.epsilon, "Accuracy")->required();
    complexity->add_option("--beta", ca.beta, "Learning-rate exponent")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        return report_error("usage", e.what());
    }

    try {
        if (*learn) return cmd_learn(la);
        if (*evaluate) return cmd_evaluate(ea);
        if (*simulate) {
            if (sa.game.empty()) throw ConfigError("--game", "a game or run config is required");
            return cmd_simulate(sa);
        }
        if (*multi) return cmd_multilinear(ma);
        if (*bench) return cmd_bench(ba);
        if (*complexity) return cmd_complexity(ca);
    } catch (const ConfigError& e) {
        return report_error("config", e.what(), e.path().empty() ? "/" : e.path());
    } catch (const FileError& e) {
        return report_error("file", e.what());
    } catch (const std::exception& e) {
        return report_error("runtime", e.what());
    }
    return kUsage;
}
