#pragma once

#include <array>
#include <cmath>
#include <stdexcept>

#include "riskgame/game_model.hpp"

namespace riskgame {

/// Single-server queue played by a service provider (player 0, chooses the
/// service rate) and a router (player 1, chooses the admission rate).
/// Joint action index = service_idx * 2 + admission_idx.
struct QueueParams {
    int max_packets = 30;
    std::array<double, 2> service_rates{1.0 / 11.0, 1.0 / 20.0};
    std::array<double, 2> admission_rates{1.0 / 10.0, 1.0 / 25.0};
    /// Service cost theta and payment beta, indexed [service][admission].
    std::array<std::array<double, 2>, 2> theta{{{110.0, 110.0}, {90.0, 90.0}}};
    std::array<std::array<double, 2>, 2> beta{{{60.0, 30.0}, {20.0, 70.0}}};
    /// Holding cost h(s) = a * b^(rate * s) for s >= 1, h(0) = 0.
    double holding_a = 1.2;
    double holding_b = std::exp(1.0);
    double holding_rate = 0.2;
    double discount = 0.1;

    double holding(int s) const {
        return s == 0 ? 0.0 : holding_a * std::pow(holding_b, holding_rate * s);
    }
};

inline QueueParams default_params(double discount = 0.1) {
    if (!(discount > 0.0 && discount < 1.0)) throw std::invalid_argument("default_params: discount must lie in (0,1)");
    QueueParams p;
    p.discount = discount;
    return p;
}

/// States 0..S. Birth-death kernel on 1..S-1; s=0 moves to 1 and s=S to S-1.
inline GameSpec build_queue_game(const QueueParams& p) {
    if (p.max_packets < 2) throw std::invalid_argument("queue: max_packets must be >= 2");
    for (double r : p.service_rates)
        if (!(r > 0.0)) throw std::invalid_argument("queue: service rates must be positive");
    for (double r : p.admission_rates)
        if (!(r > 0.0)) throw std::invalid_argument("queue: admission rates must be positive");
    if (!(p.discount > 0.0 && p.discount < 1.0)) throw std::invalid_argument("queue: discount must lie in (0,1)");

    const int S = p.max_packets;
    GameSpec g(S + 1, {2, 2}, p.discount);
    for (int s = 0; s <= S; ++s) {
        const double h = p.holding(s);
        for (int m = 0; m < 2; ++m) {
            for (int l = 0; l < 2; ++l) {
                const int a = m * 2 + l;
                const double mu = p.service_rates[m], lam = p.admission_rates[l];
                if (s == 0) {
                    g.P(s, a, 1) = 1.0;
                } else if (s == S) {
                    g.P(s, a, S - 1) = 1.0;
                } else {
                    g.P(s, a, s - 1) = mu / (lam + mu);
                    g.P(s, a, s + 1) = lam / (lam + mu);
                }
                g.cost(0, s, a) = p.beta[m][l] - p.theta[m][l];
                g.cost(1, s, a) = h + p.theta[m][l] - p.beta[m][l];
            }
        }
    }
    return g;
}

}  // namespace riskgame
