#include <algorithm>
#include <cmath>
#include <vector>

#include "cvarseq/envs.hpp"
#include "cvarseq/oracle.hpp"
#include "cvarseq/rng.hpp"
#include "cvarseq/solvers.hpp"
#include "doctest.h"

using namespace cvarseq;

namespace {

PolicyTable only_action(const FiniteHorizonMDP& mdp) {
    PolicyTable p(mdp.horizon, mdp.n_states);
    for (int t = 0; t < mdp.horizon; ++t)
        for (int s = 0; s < mdp.n_states; ++s) p.set(t, s, 0);
    return p;
}

} // namespace

TEST_CASE("enumerate_returns agrees with the iid convolution") {
    const FiniteHorizonMDP rc = make_reward_chain({.n_states = 3});
    const DiscreteDistribution enumerated =
        enumerate_returns(rc, only_action(rc), rc.initial_state);
    const DiscreteDistribution conv =
        convolve_iid(DiscreteDistribution({{-1.0, 0.1}, {1.0, 0.9}}), 3);
    REQUIRE(enumerated.size() == conv.size());
    for (std::size_t i = 0; i < conv.size(); ++i) {
        CHECK(enumerated.atoms()[i].value ==
              doctest::Approx(conv.atoms()[i].value).epsilon(1e-12));
        CHECK(enumerated.atoms()[i].probability ==
              doctest::Approx(conv.atoms()[i].probability).epsilon(1e-12));
    }
}

TEST_CASE("enumerate_returns hand values on the hazard chain") {
    const FiniteHorizonMDP hz = make_hazard_chain({.n_states = 2});
    const DiscreteDistribution d =
        enumerate_returns(hz, only_action(hz), hz.initial_state);
    REQUIRE(d.size() == 2);
    CHECK(d.atoms()[0].value == 0.0);
    CHECK(d.atoms()[0].probability == doctest::Approx(0.0975).epsilon(1e-12));
    CHECK(d.atoms()[1].value == 1.0);
    CHECK(d.atoms()[1].probability == doctest::Approx(0.9025).epsilon(1e-12));

    // deterministic instance: a single atom
    const FiniteHorizonMDP det = make_reward_chain({.n_states = 0});
    CHECK(enumerate_returns(det, only_action(det), det.initial_state).size() == 1);
}

TEST_CASE("enumerate_returns mean matches expected-value evaluation") {
    for (int i = 0; i < 20; ++i) {
        const FiniteHorizonMDP mdp = random_mdp(split_seed(100, i));
        const ExpectedSolution sol = solve_expected(mdp);
        const DiscreteDistribution d =
            enumerate_returns(mdp, sol.policy, mdp.initial_state);
        CHECK(cvar_tail(d, RiskLevel(1.0)) ==
              doctest::Approx(sol.values[0][mdp.initial_state]).epsilon(1e-10));
    }
}

TEST_CASE("enumerate_returns budget guard") {
    RandomMdpParams params;
    params.n_states = 8;
    params.horizon = 8;
    params.branching = 4;
    const FiniteHorizonMDP mdp = random_mdp(1, params);
    const PolicyTable p = only_action(mdp);
    EnumerationBudget tiny;
    tiny.max_trajectories = 10;
    CHECK_THROWS(enumerate_returns(mdp, p, mdp.initial_state, 0, tiny));
}

TEST_CASE("ncvar_reference matches solve_ncvar on random instances") {
    double worst = 0.0;
    for (int i = 0; i < 40; ++i) {
        const FiniteHorizonMDP mdp = random_mdp(split_seed(200, i));
        for (double a : {0.1, 0.3, 1.0}) {
            const double solver =
                solve_ncvar(mdp, RiskLevel(a)).values[0][mdp.initial_state];
            const double ref = ncvar_reference(mdp, RiskLevel(a), mdp.initial_state);
            worst = std::max(worst, std::abs(solver - ref));
        }
    }
    CHECK(worst < 1e-10);
}

TEST_CASE("ncvar_reference hand value on the hazard chain") {
    const FiniteHorizonMDP hz = make_hazard_chain({.n_states = 2});
    CHECK(ncvar_reference(hz, RiskLevel(0.1), hz.initial_state) ==
          doctest::Approx(0.25).epsilon(1e-12));
}

TEST_CASE("pcvar_policy_check matches the hazard-chain closed form") {
    const HazardChainConfig hc{};
    const FiniteHorizonMDP mdp = make_hazard_chain(hc);
    const double a0 = 0.3;
    const PCvarSolution sol = solve_pcvar(
        mdp, make_alpha_grid(33, 0.01,
                             pcvar_alpha_sequence(a0, hc.hazard, hc.n_states)));
    double closed = 1.0;
    for (double at : pcvar_alpha_sequence(a0, hc.hazard, hc.n_states))
        closed *= implied_gamma(at, hc.hazard);
    const double checked = pcvar_policy_check(mdp, sol, a0);
    CHECK(checked == doctest::Approx(closed).epsilon(1e-9));
    CHECK(sol.values[0][mdp.initial_state][sol.grid_index(a0)] ==
          doctest::Approx(closed).epsilon(1e-9));

    // alpha0 = 1: expected return of the greedy policy
    CHECK(pcvar_policy_check(mdp, sol, 1.0) ==
          doctest::Approx(std::pow(0.95, 3)).epsilon(1e-10));
}

TEST_CASE("pcvar_policy_check matches the solver on ordered 2-stage instances") {
    RandomMdpParams params;
    params.n_states = 3;
    params.n_actions = 2;
    params.horizon = 2;
    params.ordered_continuations = true;
    // dense grid: the enumeration oracle's tolerance is set by interpolation
    // of the continuation value between grid levels
    std::vector<double> grid;
    for (int k = 10; k <= 1000; ++k) grid.push_back(k / 1000.0);
    grid.push_back(0.25);
    std::sort(grid.begin(), grid.end());
    grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
    double worst = 0.0;
    for (int i = 0; i < 25; ++i) {
        const FiniteHorizonMDP mdp = random_mdp(split_seed(9, i), params);
        const PCvarSolution sol = solve_pcvar(mdp, grid);
        const double dp = sol.values[0][mdp.initial_state][sol.grid_index(0.25)];
        worst = std::max(worst, std::abs(dp - pcvar_policy_check(mdp, sol, 0.25)));
    }
    CHECK(worst < 1e-3);
}

TEST_CASE("oracle results do not depend on successor order") {
    for (int i = 0; i < 10; ++i) {
        FiniteHorizonMDP mdp = random_mdp(split_seed(300, i));
        const double before = ncvar_reference(mdp, RiskLevel(0.2), mdp.initial_state);
        for (auto& per_state : mdp.transitions)
            for (auto& row : per_state) std::reverse(row.begin(), row.end());
        CHECK(ncvar_reference(mdp, RiskLevel(0.2), mdp.initial_state) ==
              doctest::Approx(before).epsilon(1e-12));
    }
}
