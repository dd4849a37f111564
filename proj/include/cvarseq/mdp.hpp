#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "cvarseq/distribution.hpp"

namespace cvarseq {

// One stochastic outcome of taking an action: successor state, its
// probability and the reward collected on this transition.
struct Transition {
    int next_state;
    double probability;
    double reward;
};

// Finite-horizon tabular MDP. Rewards attach to transitions
// (state, action, next_state). Terminal states must carry only zero-reward
// self-loops. Immutable once handed to a solver.
struct FiniteHorizonMDP {
    int n_states = 0;
    int n_actions = 0;
    int horizon = 0;
    double gamma = 1.0;
    int initial_state = 0;
    std::vector<bool> terminal;                          // per state
    std::vector<std::vector<std::vector<Transition>>> transitions; // [s][a]

    const std::vector<Transition>& row(int state, int action) const {
        return transitions[state][action];
    }

    std::string to_json() const;
    static FiniteHorizonMDP from_json(const std::string& text);
};

// Returns every invariant violation with its location; empty means valid.
std::vector<std::string> validate(const FiniteHorizonMDP& mdp);

void require_valid(const FiniteHorizonMDP& mdp);

// Deterministic stage-indexed policy. Entries default to "undefined";
// querying an undefined entry for a reachable non-terminal state is an error.
class PolicyTable {
  public:
    PolicyTable() = default;
    PolicyTable(int horizon, int n_states)
        : choice_(static_cast<std::size_t>(horizon),
                  std::vector<int>(static_cast<std::size_t>(n_states), -1)) {}

    void set(int stage, int state, int action) { choice_[stage][state] = action; }

    bool defined(int stage, int state) const {
        return choice_[stage][state] >= 0;
    }

    // Throws std::runtime_error naming the hole if undefined.
    int action(int stage, int state) const;

    int horizon() const { return static_cast<int>(choice_.size()); }
    int n_states() const {
        return choice_.empty() ? 0 : static_cast<int>(choice_[0].size());
    }

  private:
    std::vector<std::vector<int>> choice_;
};

struct TrajectoryStep {
    int stage;
    int state;
    int action;
    double reward;
    int next_state;
};

struct Trajectory {
    std::vector<TrajectoryStep> steps;
    double discounted_return = 0.0;
    std::vector<double> alpha_trace; // empty when risk is untracked

    std::string to_csv() const;
};

// Samples one trajectory from the initial state. Identical (mdp, policy,
// seed) inputs produce bit-identical trajectories; see rng.hpp for the
// generator contract.
Trajectory simulate(const FiniteHorizonMDP& mdp, const PolicyTable& policy,
                    std::uint64_t seed);

// First-visit action frequencies over n_rollouts trajectories. Rollout i
// uses seed split_seed(seed, i). Only the first visit to a state within a
// trajectory is counted; states never visited are absent.
std::map<int, std::map<int, double>>
visit_frequencies(const FiniteHorizonMDP& mdp, const PolicyTable& policy,
                  int n_rollouts, std::uint64_t seed);

// Exact distributions of the discounted return-to-go under the policy, for
// every (stage, state), by backward distributional recursion. Throws a
// resource error if any distribution would exceed max_atoms.
std::vector<std::vector<DiscreteDistribution>>
policy_return_distributions(const FiniteHorizonMDP& mdp,
                            const PolicyTable& policy,
                            std::size_t max_atoms = 1000000);

DiscreteDistribution
return_distribution_exact(const FiniteHorizonMDP& mdp, const PolicyTable& policy,
                          int from_state, int from_stage,
                          std::size_t max_atoms = 1000000);

// Classical expected-value policy evaluation, values[t][s].
std::vector<std::vector<double>>
policy_expected_values(const FiniteHorizonMDP& mdp, const PolicyTable& policy);

} // namespace cvarseq
