// Queue game walk-through: model equilibrium, a short learning run, and the
// certificate and simulated costs of both.

#include <cstdio>
#include <vector>

#include "riskgame/dp_oracle.hpp"
#include "riskgame/queueing.hpp"
#include "riskgame/ranashql.hpp"
#include "riskgame/simulation.hpp"

using namespace riskgame;

namespace {

void show(const char* label, const GameSpec& g, const std::vector<double>& alphas, const MultiStrategy& x) {
    DpOptions opt;
    opt.scope = RiskScope::per_action;
    const VerifyReport rep = verify_equilibrium(g, alphas, x, 1e-2, opt);
    const auto rows = stats(simulate_costs(g, x, 200, 1000, 0, 7), {0.05, 0.10});
    std::printf("%-8s gaps %.2e %.2e  %s\n", label, rep.gaps[0], rep.gaps[1], rep.pass ? "pass" : "fail");
    for (const auto& r : rows)
        std::printf("         player %d  mean %9.3f  var %8.3f  cvar05 %9.3f\n", r.player, r.mean, r.variance, r.cvar[0]);
    std::printf("         s=0: P(fast service) %.3f  P(high admission) %.3f\n", x.probs[0][0][0], x.probs[1][0][0]);
}

}  // namespace

int main() {
    const GameSpec g = build_queue_game(default_params(0.1));
    for (double alpha : {0.0, 0.1}) {
        const std::vector<double> alphas{alpha, alpha};
        std::printf("alpha = %.2f\n", alpha);
        const auto model = stage_nash_iteration(g, alphas, EquilibriumPolicy::first_lemke_howson, 1e-12);
        show("model", g, alphas, model.x);

        LearnerConfig cfg;
        cfg.outer_iters = 1000000;
        cfg.inner_iters = 1;
        cfg.beta = alpha == 0.0 ? 0.5 : 0.85;
        cfg.seed = 1;
        auto specs = make_learner_specs(g, alphas);
        const LearnerResult learned = run_ranashql(g, std::move(specs), cfg);
        show("learned", g, alphas, learned.strategy);
    }
    return 0;
}
