#include <cmath>
#include <stdexcept>

#include "cvarseq/envs.hpp"
#include "cvarseq/oracle.hpp"
#include "cvarseq/rng.hpp"
#include "cvarseq/solvers.hpp"
#include "doctest.h"

using namespace cvarseq;

namespace {

const FiniteHorizonMDP& small_grid() {
    static const FiniteHorizonMDP mdp = make_gridworld(
        {.width = 5, .height = 3, .goal = {4, 0},
         .lava = {{1, 0}, {2, 0}, {3, 0}}, .slip = 0.08, .horizon = 10});
    return mdp;
}

} // namespace

TEST_CASE("all solvers equal classical value iteration at alpha = 1") {
    const FiniteHorizonMDP& mdp = small_grid();
    const ExpectedSolution ev = solve_expected(mdp);
    const NCvarSolution n = solve_ncvar(mdp, RiskLevel(1.0));
    const FCvarSolution f = solve_fcvar(mdp, RiskLevel(1.0));
    const PCvarSolution p = solve_pcvar(mdp, make_alpha_grid(17));
    const int g1 = p.grid_index(1.0);
    for (int t = 0; t < mdp.horizon; ++t)
        for (int s = 0; s < mdp.n_states; ++s) {
            CHECK(n.values[t][s] == doctest::Approx(ev.values[t][s]).epsilon(1e-9));
            CHECK(f.cvar_values[t][s] ==
                  doctest::Approx(ev.values[t][s]).epsilon(1e-9));
            CHECK(p.values[t][s][g1] ==
                  doctest::Approx(ev.values[t][s]).epsilon(1e-9));
            if (!mdp.terminal[s]) {
                CHECK(n.policy.action(t, s) == ev.policy.action(t, s));
                CHECK(f.policy.action(t, s) == ev.policy.action(t, s));
            }
        }
}

TEST_CASE("terminal-stage values are zero") {
    const FiniteHorizonMDP& mdp = small_grid();
    const NCvarSolution n = solve_ncvar(mdp, RiskLevel(0.3));
    for (int s = 0; s < mdp.n_states; ++s) CHECK(n.values[mdp.horizon][s] == 0.0);
}

TEST_CASE("nested values are monotone in alpha") {
    const FiniteHorizonMDP& mdp = small_grid();
    double prev = -1e300;
    for (double a : {0.02, 0.05, 0.11, 0.3, 0.5, 1.0}) {
        const double v = solve_ncvar(mdp, RiskLevel(a)).values[0][mdp.initial_state];
        CHECK(v >= prev - 1e-12);
        prev = v;
    }
}

TEST_CASE("fixed CVaR values equal the CVaR of their own return distribution") {
    const FiniteHorizonMDP& mdp = small_grid();
    for (double a : {0.05, 0.11, 0.5}) {
        const FCvarSolution f = solve_fcvar(mdp, RiskLevel(a));
        for (int s = 0; s < mdp.n_states; ++s) {
            // stored distribution is consistent with the stored value
            CHECK(f.cvar_values[0][s] ==
                  doctest::Approx(cvar_tail(f.return_dists[0][s], RiskLevel(a)))
                      .epsilon(1e-10));
            // and with an independent evaluation of the policy
            const DiscreteDistribution d =
                return_distribution_exact(mdp, f.policy, s, 0);
            CHECK(f.cvar_values[0][s] ==
                  doctest::Approx(cvar_tail(d, RiskLevel(a))).epsilon(1e-10));
        }
    }
}

TEST_CASE("precommitted solution invariants") {
    const FiniteHorizonMDP& mdp = small_grid();
    const PCvarSolution p = solve_pcvar(mdp, make_alpha_grid(17, 0.01, {0.11}));
    const int G = static_cast<int>(p.alpha_grid.size());
    CHECK(p.alpha_grid.back() == 1.0);
    for (int t = 0; t <= mdp.horizon; ++t)
        for (int s = 0; s < mdp.n_states; ++s) {
            // V(x, y) and y * V(x, y) non-decreasing, y * V convex
            double prev_w_slope = -1e300;
            for (int g = 0; g < G; ++g) {
                if (g > 0) {
                    CHECK(p.values[t][s][g] >= p.values[t][s][g - 1] - 1e-9);
                    const double dy = p.alpha_grid[g] - p.alpha_grid[g - 1];
                    const double slope = (p.alpha_grid[g] * p.values[t][s][g] -
                                          p.alpha_grid[g - 1] * p.values[t][s][g - 1]) /
                                         dy;
                    CHECK(slope >= prev_w_slope - 1e-9);
                    prev_w_slope = slope;
                }
                if (t == mdp.horizon || mdp.terminal[s]) continue;
                // stored xi weights are a feasible adversarial reweighting
                const int a = p.policy[t][s][g];
                const auto& row = mdp.row(s, a);
                const auto& xi = p.xi[t][s][g][a];
                REQUIRE(xi.size() == row.size());
                const double y = p.alpha_grid[g];
                double mass = 0.0;
                for (std::size_t k = 0; k < row.size(); ++k) {
                    CHECK(xi[k] >= -1e-9);
                    CHECK(xi[k] <= 1.0 / y + 1e-9);
                    mass += row[k].probability * xi[k];
                }
                CHECK(mass == doctest::Approx(1.0).epsilon(1e-9));
            }
        }
    CHECK(p.grid_index(0.123456) == -1); // off-grid levels are not indexed
}

TEST_CASE("precommitted is at least as high as nested at the same level") {
    const FiniteHorizonMDP& mdp = small_grid();
    for (double a : {0.05, 0.11, 0.5}) {
        const PCvarSolution p = solve_pcvar(mdp, make_alpha_grid(17, 0.01, {a}));
        const NCvarSolution n = solve_ncvar(mdp, RiskLevel(a));
        const int g = p.grid_index(a);
        for (int s = 0; s < mdp.n_states; ++s)
            CHECK(p.values[0][s][g] >= n.values[0][s] - 1e-9);
    }
}

TEST_CASE("alpha grid construction") {
    const auto grid = make_alpha_grid(33, 0.01, {0.11, 0.5});
    CHECK(grid.front() == 0.01);
    CHECK(grid.back() == 1.0);
    CHECK(std::is_sorted(grid.begin(), grid.end()));
    int hits = 0;
    for (double g : grid)
        if (g == 0.11 || g == 0.5) ++hits;
    CHECK(hits == 2);
    CHECK_THROWS_AS(solve_pcvar(small_grid(), std::vector<double>{0.5, 0.2, 1.0}),
                    std::domain_error);
    CHECK_THROWS_AS(solve_pcvar(small_grid(), std::vector<double>{0.2, 0.5}),
                    std::domain_error);
}

TEST_CASE("pcvar rollout tracks the hazard-chain risk-level sequence") {
    const HazardChainConfig hc{};
    const FiniteHorizonMDP mdp = make_hazard_chain(hc);
    const PCvarSolution sol = solve_pcvar(mdp, make_alpha_grid(33, 0.01, {0.3}));
    const auto closed = pcvar_alpha_sequence(0.3, hc.hazard, 3);
    bool found_survivor = false;
    for (std::uint64_t seed = 0; seed < 64 && !found_survivor; ++seed) {
        const Trajectory t = pcvar_rollout(mdp, sol, 0.3, seed);
        if (t.discounted_return < 0.5) continue; // died; survivors only
        found_survivor = true;
        REQUIRE(t.alpha_trace.size() == 3);
        for (int k = 0; k < 3; ++k) {
            CHECK(t.alpha_trace[k] == doctest::Approx(closed[k]).epsilon(1e-6));
            CHECK(t.alpha_trace[k] > 0.0);
            CHECK(t.alpha_trace[k] <= 1.0);
        }
    }
    CHECK(found_survivor);

    // risk-neutral start: xi is identically 1, the trace stays at 1
    const Trajectory t1 = pcvar_rollout(mdp, sol, 1.0, 0);
    for (double a : t1.alpha_trace) CHECK(a == 1.0);
}

TEST_CASE("consistency probes") {
    // nested: no divergences anywhere
    const ConsistencyReport n =
        consistency_probe(small_grid(), CvarMethod::Nested, 0.11, 30, 5);
    CHECK(n.states_checked > 0);
    CHECK(n.divergences.empty());

    // precommitted with tracked risk levels: no divergences
    const ConsistencyReport p =
        consistency_probe(small_grid(), CvarMethod::Precommitted, 0.11, 30, 5);
    CHECK(p.divergences.empty());

    // fixed: at least one divergence across a batch of random instances
    int found = 0;
    RandomMdpParams params;
    for (int i = 0; i < 40 && found == 0; ++i) {
        const FiniteHorizonMDP mdp = random_mdp(split_seed(31, i), params);
        found += static_cast<int>(
            consistency_probe(mdp, CvarMethod::Fixed, 0.2, 20, 7).divergences.size());
    }
    CHECK(found > 0);
}
