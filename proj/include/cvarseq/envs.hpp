#pragma once

#include <set>
#include <utility>
#include <vector>

#include "cvarseq/mdp.hpp"

namespace cvarseq {

// Cell coordinates are (col, row) with row 0 at the bottom.
using Cell = std::pair<int, int>;

// Default geometry: lava spans the bottom row between start and goal, so
// direct routes skirt the lava and low-alpha routes detour above it.
struct GridworldConfig {
    int width = 10;
    int height = 7;
    Cell start{0, 0};
    Cell goal{9, 0};
    std::set<Cell> lava = {{1, 0}, {2, 0}, {3, 0}, {4, 0},
                           {5, 0}, {6, 0}, {7, 0}, {8, 0}};
    double slip = 0.05;
    double gamma = 0.95;
    int horizon = 40;
};

struct HazardChainConfig {
    int n_states = 3;       // start distance from the goal
    double hazard = 0.05;   // per-step termination probability
    double terminal_reward = 1.0;
};

struct RewardChainConfig {
    int n_states = 4;
    double loss_value = -1.0;
    double gain_value = 1.0;
    double loss_probability = 0.1;
};

// 4-action gridworld (0 left, 1 right, 2 up, 3 down). The intended move
// happens with probability 1 - 2*slip, each perpendicular slip with
// probability slip; walls absorb the move. Entering the goal pays +1,
// entering lava pays -1; both are terminal.
FiniteHorizonMDP make_gridworld(const GridworldConfig& config);

int gridworld_state(const GridworldConfig& config, Cell cell);
Cell gridworld_cell(const GridworldConfig& config, int state);

// Linear chain: from distance d the walker advances with probability
// 1 - hazard and dies (absorbing, reward 0) otherwise; the final advance
// pays terminal_reward. Discounting is 1: all discounting emerges from the
// hazard. State d is distance d; state n_states + 1 is the death state.
FiniteHorizonMDP make_hazard_chain(const HazardChainConfig& config);

// Evaluation-only chain (one action): each of the n_states steps pays
// gain_value with probability 1 - loss_probability and loss_value otherwise,
// independently. State d is distance d from the end.
FiniteHorizonMDP make_reward_chain(const RewardChainConfig& config);

// Implied geometric discount factor of nested CVaR on a constant-hazard
// chain: max(0, 1 - hazard / alpha).
double implied_gamma(double alpha, double hazard);

// Closed-form risk-level trace of the precommitted surviving branch:
// xi_survive = (1 - hazard/alpha_t) / (1 - hazard),
// alpha_{t+1} = alpha_t * xi_survive. Returns up to n_steps values starting
// with alpha0; stops early once alpha_t <= hazard (worst case reached).
std::vector<double> pcvar_alpha_sequence(double alpha0, double hazard, int n_steps);

} // namespace cvarseq
