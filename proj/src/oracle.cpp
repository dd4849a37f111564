#include "cvarseq/oracle.hpp"

#include <algorithm>
#include <functional>
#include <stdexcept>

#include "cvarseq/rng.hpp"

namespace cvarseq {

DiscreteDistribution enumerate_returns(const FiniteHorizonMDP& mdp,
                                       const PolicyTable& policy, int from_state,
                                       int from_stage, EnumerationBudget budget) {
    require_valid(mdp);
    std::vector<Atom> leaves;
    std::size_t count = 0;

    std::function<void(int, int, double, double, double)> walk =
        [&](int t, int state, double prob, double ret, double disc) {
            if (t >= mdp.horizon || mdp.terminal[state]) {
                if (++count > budget.max_trajectories)
                    throw std::runtime_error(
                        "enumeration budget exceeded; shrink the instance");
                leaves.push_back({ret, prob});
                return;
            }
            if (t - from_stage > budget.max_depth)
                throw std::runtime_error("enumeration depth bound exceeded");
            const auto& row = mdp.row(state, policy.action(t, state));
            for (const Transition& tr : row)
                walk(t + 1, tr.next_state, prob * tr.probability,
                     ret + disc * tr.reward, disc * mdp.gamma);
        };
    walk(from_stage, from_state, 1.0, 0.0, 1.0);
    return DiscreteDistribution(std::move(leaves));
}

double ncvar_reference(const FiniteHorizonMDP& mdp, RiskLevel alpha,
                       int from_state, int from_stage, int max_depth) {
    require_valid(mdp);
    if (mdp.horizon - from_stage > max_depth)
        throw std::runtime_error("nested reference depth bound exceeded");

    std::function<double(int, int)> eval = [&](int t, int state) -> double {
        if (t >= mdp.horizon || mdp.terminal[state]) return 0.0;
        double best = 0.0;
        bool have = false;
        for (int a = 0; a < mdp.n_actions; ++a) {
            std::vector<Atom> atoms;
            for (const Transition& tr : mdp.row(state, a))
                atoms.push_back({tr.reward + mdp.gamma * eval(t + 1, tr.next_state),
                                 tr.probability});
            const double q = cvar_tail(DiscreteDistribution(std::move(atoms)), alpha);
            if (!have || q > best) {
                best = q;
                have = true;
            }
        }
        return best;
    };
    return eval(from_stage, from_state);
}

double pcvar_policy_check(const FiniteHorizonMDP& mdp, const PCvarSolution& solution,
                          double alpha0, EnumerationBudget budget) {
    require_valid(mdp);
    if (solution.grid_index(alpha0, 1e-9) < 0)
        throw std::domain_error("alpha0 is not on the solved grid");
    const double alpha_min = solution.alpha_grid.front();
    std::vector<Atom> leaves;
    std::size_t count = 0;

    std::function<void(int, int, double, double, double, double)> walk =
        [&](int t, int state, double alpha, double prob, double ret, double disc) {
            if (t >= mdp.horizon || mdp.terminal[state]) {
                if (++count > budget.max_trajectories)
                    throw std::runtime_error(
                        "enumeration budget exceeded; shrink the instance");
                leaves.push_back({ret, prob});
                return;
            }
            const int a = pcvar_bracket_action(solution, t, state, alpha);
            const std::vector<double> xi = pcvar_xi_at(mdp, solution, t, state, a, alpha);
            const auto& row = mdp.row(state, a);
            for (std::size_t j = 0; j < row.size(); ++j) {
                const double next_alpha =
                    std::clamp(alpha * xi[j], alpha_min, 1.0);
                walk(t + 1, row[j].next_state, next_alpha,
                     prob * row[j].probability, ret + disc * row[j].reward,
                     disc * mdp.gamma);
            }
        };
    walk(0, mdp.initial_state, alpha0, 1.0, 0.0, 1.0);
    return cvar_tail(DiscreteDistribution(std::move(leaves)), RiskLevel(alpha0));
}

FiniteHorizonMDP random_mdp(std::uint64_t seed, const RandomMdpParams& params) {
    Rng rng(seed);
    FiniteHorizonMDP mdp;
    mdp.n_states = params.n_states;
    mdp.n_actions = params.n_actions;
    mdp.horizon = params.horizon;
    mdp.gamma = params.gamma;
    mdp.initial_state = 0;
    mdp.terminal.assign(mdp.n_states, false);
    for (int s = 1; s < mdp.n_states; ++s)
        if (rng.uniform() < params.terminal_fraction) mdp.terminal[s] = true;
    mdp.transitions.assign(mdp.n_states,
                           std::vector<std::vector<Transition>>(mdp.n_actions));
    for (int s = 0; s < mdp.n_states; ++s)
        for (int a = 0; a < mdp.n_actions; ++a) {
            auto& row = mdp.transitions[s][a];
            if (mdp.terminal[s]) {
                row.push_back({s, 1.0, 0.0});
                continue;
            }
            if (params.ordered_continuations && s != mdp.initial_state && a > 0) {
                row = mdp.transitions[s][0];
                const double drop = 0.1 + 0.5 * rng.uniform();
                for (Transition& t : row) t.reward -= a * drop;
                continue;
            }
            // with ordered continuations, the initial state must not reappear
            // as a successor: its own action curves are unconstrained
            const int lowest = params.ordered_continuations ? 1 : 0;
            std::vector<int> succ;
            while (static_cast<int>(succ.size()) <
                   std::min(params.branching, mdp.n_states - lowest)) {
                const int cand =
                    lowest + static_cast<int>(rng.uniform() *
                                              (mdp.n_states - lowest)) %
                                 (mdp.n_states - lowest);
                if (std::find(succ.begin(), succ.end(), cand) == succ.end())
                    succ.push_back(cand);
            }
            std::vector<double> w;
            double wsum = 0.0;
            for (std::size_t i = 0; i < succ.size(); ++i) {
                w.push_back(0.1 + rng.uniform());
                wsum += w.back();
            }
            double psum = 0.0;
            for (std::size_t i = 0; i < succ.size(); ++i) {
                double p = w[i] / wsum;
                if (i + 1 == succ.size()) p = 1.0 - psum; // exact row sum
                psum += p;
                const double reward =
                    params.reward_scale * (2.0 * rng.uniform() - 1.0);
                row.push_back({succ[i], p, reward});
            }
        }
    return mdp;
}

} // namespace cvarseq
