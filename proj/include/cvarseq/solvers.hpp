#pragma once

#include <cstdint>
#include <vector>

#include "cvarseq/distribution.hpp"
#include "cvarseq/mdp.hpp"

namespace cvarseq {

// Classical expected-value backward induction (the alpha = 1 reference for
// all three risk solvers). Argmax ties break to the lowest action index, as
// everywhere else.
struct ExpectedSolution {
    std::vector<std::vector<double>> values; // [t][s], t in 0..T
    PolicyTable policy;
};

ExpectedSolution solve_expected(const FiniteHorizonMDP& mdp);

// Nested CVaR: V_t(x) = max_a CVaR_alpha over the joint successor
// distribution of r + gamma * V_{t+1}(x').
struct NCvarSolution {
    double alpha = 1.0;
    std::vector<std::vector<double>> values; // [t][s]
    PolicyTable policy;

    std::string to_json() const;
};

NCvarSolution solve_ncvar(const FiniteHorizonMDP& mdp, RiskLevel alpha);

// Fixed CVaR: backward induction on whole return distributions; each stage
// picks the action whose induced return distribution (given its own future
// behavior) has the best CVaR_alpha.
struct FCvarSolution {
    double alpha = 1.0;
    std::vector<std::vector<DiscreteDistribution>> return_dists; // [t][s]
    std::vector<std::vector<double>> cvar_values;                // [t][s]
    PolicyTable policy;

    std::string to_json() const;
};

FCvarSolution solve_fcvar(const FiniteHorizonMDP& mdp, RiskLevel alpha,
                          std::size_t max_atoms = 1000000);

// Precommitted CVaR on the risk-augmented state (x, y). The inner adversary
// problem over xi (0 <= xi <= 1/y, sum p*xi = 1) is solved exactly as a
// separable convex program over the piecewise-linear interpolation of
// u -> u * V_{t+1}(x', u); this is the epigraph LP reduced to its greedy
// breakpoint solution.
struct PCvarSolution {
    std::vector<double> alpha_grid; // sorted, last entry 1.0
    // values[t][s][g], policy[t][s][g], xi[t][s][g][a] aligned with
    // the transition row of (s, a)
    std::vector<std::vector<std::vector<double>>> values;
    std::vector<std::vector<std::vector<int>>> policy;
    std::vector<std::vector<std::vector<std::vector<std::vector<double>>>>> xi;

    int grid_index(double alpha, double tol = 1e-12) const;
    std::string to_json() const;
};

// Geometric grid from alpha_min to 1.0 with n_points entries; extra values
// are inserted exactly (deduplicated).
std::vector<double> make_alpha_grid(int n_points = 33, double alpha_min = 0.01,
                                    const std::vector<double>& insert = {});

PCvarSolution solve_pcvar(const FiniteHorizonMDP& mdp,
                          const std::vector<double>& alpha_grid);

// Exact best response at an arbitrary risk level y, using the stored
// next-stage value tables. Used by rollouts and the consistency probe.
struct PCvarDecision {
    int action = -1;
    double value = 0.0;
    std::vector<double> xi; // aligned with the chosen action's transition row
};

PCvarDecision pcvar_decide(const FiniteHorizonMDP& mdp, const PCvarSolution& sol,
                           int stage, int state, double y);

// Exact adversarial weights for one action at an arbitrary risk level y.
std::vector<double> pcvar_xi_at(const FiniteHorizonMDP& mdp,
                                const PCvarSolution& sol, int stage, int state,
                                int action, double y);

// Action selection rule for off-grid risk levels: if the stored actions at
// the two bracketing grid points agree, use that action; otherwise use the
// lower (more risk-averse) grid point.
int pcvar_bracket_action(const PCvarSolution& sol, int stage, int state, double y);

// Simulates the augmented policy, updating alpha_{t+1} = alpha_t * xi(x')
// with xi recomputed exactly at the current alpha_t; records alpha_trace.
// alpha stays in [grid_min, 1]: a zero xi clamps to the lowest grid level.
Trajectory pcvar_rollout(const FiniteHorizonMDP& mdp, const PCvarSolution& sol,
                         double alpha0, std::uint64_t seed);

// --- time-consistency probes ---------------------------------------------

enum class CvarMethod { Nested, Fixed, Precommitted };

struct Divergence {
    int stage;
    int state;
    int planned;   // action preferred by the initial-state evaluation
    int replanned; // action the method takes when re-solving at (stage, state)
    double gap;    // initial-state value lost by the replanned action
};

struct ConsistencyReport {
    std::vector<Divergence> divergences;
    int states_checked = 0;
};

// For each first-visited (t, x) of each rollout, compares the action the
// method takes there (fresh re-solve) against the action the initial-state
// objective prefers for that deviation point. A divergence is recorded only
// when the executed action is strictly worse for the initial-state objective
// (beyond tol).
ConsistencyReport consistency_probe(const FiniteHorizonMDP& mdp,
                                    CvarMethod method, double alpha,
                                    int n_seeds, std::uint64_t seed,
                                    double tol = 1e-9);

} // namespace cvarseq
