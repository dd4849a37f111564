#include "cvarseq/envs.hpp"

#include <algorithm>
#include <stdexcept>

namespace cvarseq {

int gridworld_state(const GridworldConfig& config, Cell cell) {
    return cell.second * config.width + cell.first;
}

Cell gridworld_cell(const GridworldConfig& config, int state) {
    return {state % config.width, state / config.width};
}

FiniteHorizonMDP make_gridworld(const GridworldConfig& config) {
    if (config.width < 2 || config.height < 1)
        throw std::domain_error("gridworld needs width >= 2 and height >= 1");
    if (!(config.slip >= 0.0) || config.slip * 2.0 >= 1.0)
        throw std::domain_error("slip must satisfy 0 <= 2*slip < 1");
    auto in_bounds = [&](Cell c) {
        return c.first >= 0 && c.first < config.width && c.second >= 0 &&
               c.second < config.height;
    };
    if (!in_bounds(config.start) || !in_bounds(config.goal))
        throw std::domain_error("start/goal outside the grid");
    if (config.start == config.goal || config.lava.count(config.start) ||
        config.lava.count(config.goal))
        throw std::domain_error("start, goal and lava cells must be disjoint");
    for (Cell c : config.lava)
        if (!in_bounds(c)) throw std::domain_error("lava cell outside the grid");

    FiniteHorizonMDP mdp;
    mdp.n_states = config.width * config.height;
    mdp.n_actions = 4;
    mdp.horizon = config.horizon;
    mdp.gamma = config.gamma;
    mdp.initial_state = gridworld_state(config, config.start);
    mdp.terminal.assign(mdp.n_states, false);
    mdp.terminal[gridworld_state(config, config.goal)] = true;
    for (Cell c : config.lava) mdp.terminal[gridworld_state(config, c)] = true;
    mdp.transitions.assign(mdp.n_states,
                           std::vector<std::vector<Transition>>(mdp.n_actions));

    // left first: an argmax tie at an all-zero state (a policy that refuses
    // the trip) walks into the wall and stays put instead of drifting
    const int dx[4] = {-1, 1, 0, 0}; // left, right, up, down
    const int dy[4] = {0, 0, 1, -1};
    auto move = [&](Cell c, int dir) {
        Cell n{c.first + dx[dir], c.second + dy[dir]};
        return in_bounds(n) ? n : c; // walls absorb
    };
    auto entry_reward = [&](Cell c) {
        if (c == config.goal) return 1.0;
        if (config.lava.count(c)) return -1.0;
        return 0.0;
    };
    // perpendicular directions per action
    const int perp[4][2] = {{2, 3}, {2, 3}, {0, 1}, {0, 1}};

    for (int s = 0; s < mdp.n_states; ++s) {
        const Cell c = gridworld_cell(config, s);
        for (int a = 0; a < 4; ++a) {
            auto& row = mdp.transitions[s][a];
            if (mdp.terminal[s]) {
                row.push_back({s, 1.0, 0.0});
                continue;
            }
            auto add = [&](int dir, double p) {
                const Cell n = move(c, dir);
                const int ns = gridworld_state(config, n);
                // merge outcomes landing on the same cell
                for (Transition& t : row)
                    if (t.next_state == ns) {
                        t.probability += p;
                        return;
                    }
                row.push_back({ns, p, entry_reward(n)});
            };
            add(a, 1.0 - 2.0 * config.slip);
            if (config.slip > 0.0) {
                add(perp[a][0], config.slip);
                add(perp[a][1], config.slip);
            }
        }
    }
    return mdp;
}

FiniteHorizonMDP make_hazard_chain(const HazardChainConfig& config) {
    if (config.n_states < 1)
        throw std::domain_error("hazard chain needs at least one state");
    if (!(config.hazard > 0.0) || !(config.hazard < 1.0))
        throw std::domain_error("hazard must lie in (0, 1)");
    FiniteHorizonMDP mdp;
    const int n = config.n_states;
    const int death = n + 1;
    mdp.n_states = n + 2; // distances 0..n plus the death state
    mdp.n_actions = 1;
    mdp.horizon = n;
    mdp.gamma = 1.0;
    mdp.initial_state = n;
    mdp.terminal.assign(mdp.n_states, false);
    mdp.terminal[0] = true;
    mdp.terminal[death] = true;
    mdp.transitions.assign(mdp.n_states, std::vector<std::vector<Transition>>(1));
    mdp.transitions[0][0].push_back({0, 1.0, 0.0});
    mdp.transitions[death][0].push_back({death, 1.0, 0.0});
    for (int d = 1; d <= n; ++d) {
        const double reward = d == 1 ? config.terminal_reward : 0.0;
        mdp.transitions[d][0].push_back({d - 1, 1.0 - config.hazard, reward});
        mdp.transitions[d][0].push_back({death, config.hazard, 0.0});
    }
    return mdp;
}

FiniteHorizonMDP make_reward_chain(const RewardChainConfig& config) {
    if (config.n_states < 0)
        throw std::domain_error("reward chain length must be non-negative");
    if (!(config.loss_probability > 0.0) || !(config.loss_probability < 1.0))
        throw std::domain_error("loss probability must lie in (0, 1)");
    FiniteHorizonMDP mdp;
    const int n = config.n_states;
    mdp.n_states = n + 1;
    mdp.n_actions = 1;
    mdp.horizon = n > 0 ? n : 1;
    mdp.gamma = 1.0;
    mdp.initial_state = n;
    mdp.terminal.assign(mdp.n_states, false);
    mdp.terminal[0] = true;
    mdp.transitions.assign(mdp.n_states, std::vector<std::vector<Transition>>(1));
    mdp.transitions[0][0].push_back({0, 1.0, 0.0});
    for (int d = 1; d <= n; ++d) {
        mdp.transitions[d][0].push_back(
            {d - 1, config.loss_probability, config.loss_value});
        mdp.transitions[d][0].push_back(
            {d - 1, 1.0 - config.loss_probability, config.gain_value});
    }
    return mdp;
}

double implied_gamma(double alpha, double hazard) {
    RiskLevel check(alpha);
    (void)check;
    return std::max(0.0, 1.0 - hazard / alpha);
}

std::vector<double> pcvar_alpha_sequence(double alpha0, double hazard, int n_steps) {
    std::vector<double> out;
    double alpha = alpha0;
    for (int t = 0; t < n_steps; ++t) {
        out.push_back(alpha);
        if (alpha <= hazard) break; // worst case: the whole tail is death
        alpha = alpha * (1.0 - hazard / alpha) / (1.0 - hazard);
    }
    return out;
}

} // namespace cvarseq
