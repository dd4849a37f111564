#pragma once

#include <cstdint>

#include "cvarseq/distribution.hpp"
#include "cvarseq/mdp.hpp"
#include "cvarseq/solvers.hpp"

namespace cvarseq {

// Deliberately naive brute-force references. They share no numerical kernels
// with the solvers beyond the CVaR primitive.

struct EnumerationBudget {
    std::size_t max_trajectories = 1000000;
    int max_depth = 64;
};

// Exact return distribution by exhaustive forward tree walk.
DiscreteDistribution enumerate_returns(const FiniteHorizonMDP& mdp,
                                       const PolicyTable& policy, int from_state,
                                       int from_stage = 0,
                                       EnumerationBudget budget = {});

// Literal transcription of the nested recursion: maximize at each stage by
// recomputing subtrees, no memoization.
double ncvar_reference(const FiniteHorizonMDP& mdp, RiskLevel alpha,
                       int from_state, int from_stage = 0, int max_depth = 8);

// Enumerates the return distribution of the extracted augmented policy
// (risk level updated through the solution's xi weights at each branch) and
// returns its CVaR at alpha0.
double pcvar_policy_check(const FiniteHorizonMDP& mdp, const PCvarSolution& solution,
                          double alpha0, EnumerationBudget budget = {});

// Seeded garnet-style random MDP for cross-implementation checks.
struct RandomMdpParams {
    int n_states = 4;
    int n_actions = 3;
    int horizon = 3;
    int branching = 2;
    double gamma = 1.0;
    double reward_scale = 1.0;
    double terminal_fraction = 0.0;
    // When set, every action a > 0 of a non-initial state reuses action 0's
    // successors and probabilities with rewards shifted down by a positive
    // constant. The actions are then stochastically ordered, so the best
    // continuation is the same at every risk level; on such instances the
    // enumerated augmented-policy return distribution is an exact oracle for
    // the precommitted solver (the exchange of max over continuations and min
    // over distortions is tight only when the continuation ranking does not
    // depend on the risk level).
    bool ordered_continuations = false;
};

FiniteHorizonMDP random_mdp(std::uint64_t seed, const RandomMdpParams& params = {});

} // namespace cvarseq
