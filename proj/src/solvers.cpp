#include "cvarseq/solvers.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "cvarseq/rng.hpp"

namespace cvarseq {

namespace {

constexpr double kGridTol = 1e-12;

// Candidate one-step distribution of r + gamma * v(x') for an action row.
DiscreteDistribution successor_value_dist(const std::vector<Transition>& row,
                                          double gamma,
                                          const std::vector<double>& next_values) {
    std::vector<Atom> atoms;
    atoms.reserve(row.size());
    for (const Transition& tr : row)
        atoms.push_back({tr.reward + gamma * next_values[tr.next_state],
                         tr.probability});
    return DiscreteDistribution(std::move(atoms));
}

} // namespace

ExpectedSolution solve_expected(const FiniteHorizonMDP& mdp) {
    require_valid(mdp);
    ExpectedSolution sol;
    sol.values.assign(mdp.horizon + 1, std::vector<double>(mdp.n_states, 0.0));
    sol.policy = PolicyTable(mdp.horizon, mdp.n_states);
    for (int t = mdp.horizon - 1; t >= 0; --t)
        for (int s = 0; s < mdp.n_states; ++s) {
            if (mdp.terminal[s]) continue;
            double best = 0.0;
            int best_a = -1;
            for (int a = 0; a < mdp.n_actions; ++a) {
                double q = 0.0;
                for (const Transition& tr : mdp.row(s, a))
                    q += tr.probability *
                         (tr.reward + mdp.gamma * sol.values[t + 1][tr.next_state]);
                if (best_a < 0 || q > best) {
                    best = q;
                    best_a = a;
                }
            }
            sol.values[t][s] = best;
            sol.policy.set(t, s, best_a);
        }
    return sol;
}

NCvarSolution solve_ncvar(const FiniteHorizonMDP& mdp, RiskLevel alpha) {
    require_valid(mdp);
    NCvarSolution sol;
    sol.alpha = alpha.alpha();
    sol.values.assign(mdp.horizon + 1, std::vector<double>(mdp.n_states, 0.0));
    sol.policy = PolicyTable(mdp.horizon, mdp.n_states);
    for (int t = mdp.horizon - 1; t >= 0; --t)
        for (int s = 0; s < mdp.n_states; ++s) {
            if (mdp.terminal[s]) continue;
            double best = 0.0;
            int best_a = -1;
            for (int a = 0; a < mdp.n_actions; ++a) {
                const double q = cvar_tail(
                    successor_value_dist(mdp.row(s, a), mdp.gamma, sol.values[t + 1]),
                    alpha);
                if (best_a < 0 || q > best) {
                    best = q;
                    best_a = a;
                }
            }
            sol.values[t][s] = best;
            sol.policy.set(t, s, best_a);
        }
    return sol;
}

FCvarSolution solve_fcvar(const FiniteHorizonMDP& mdp, RiskLevel alpha,
                          std::size_t max_atoms) {
    require_valid(mdp);
    FCvarSolution sol;
    sol.alpha = alpha.alpha();
    const DiscreteDistribution zero = DiscreteDistribution::delta(0.0);
    sol.return_dists.assign(mdp.horizon + 1,
                            std::vector<DiscreteDistribution>(mdp.n_states, zero));
    sol.cvar_values.assign(mdp.horizon + 1,
                           std::vector<double>(mdp.n_states, 0.0));
    sol.policy = PolicyTable(mdp.horizon, mdp.n_states);
    for (int t = mdp.horizon - 1; t >= 0; --t)
        for (int s = 0; s < mdp.n_states; ++s) {
            if (mdp.terminal[s]) continue;
            double best = 0.0;
            int best_a = -1;
            for (int a = 0; a < mdp.n_actions; ++a) {
                std::vector<std::pair<double, DiscreteDistribution>> parts;
                for (const Transition& tr : mdp.row(s, a))
                    parts.emplace_back(tr.probability,
                                       shift_scale(sol.return_dists[t + 1][tr.next_state],
                                                   tr.reward, mdp.gamma));
                DiscreteDistribution cand = mixture(parts);
                if (cand.size() > max_atoms)
                    throw std::runtime_error(
                        "fixed-CVaR distribution exceeds the atom budget");
                const double q = cvar_tail(cand, alpha);
                if (best_a < 0 || q > best) {
                    best = q;
                    best_a = a;
                    sol.return_dists[t][s] = std::move(cand);
                }
            }
            sol.cvar_values[t][s] = best;
            sol.policy.set(t, s, best_a);
        }
    return sol;
}

// --- precommitted CVaR ----------------------------------------------------

std::vector<double> make_alpha_grid(int n_points, double alpha_min,
                                    const std::vector<double>& insert) {
    if (n_points < 2 || !(alpha_min > 0.0) || alpha_min >= 1.0)
        throw std::domain_error("alpha grid needs n_points >= 2 and alpha_min in (0,1)");
    std::vector<double> grid;
    const double ratio = std::pow(1.0 / alpha_min, 1.0 / (n_points - 1));
    for (int i = 0; i < n_points; ++i)
        grid.push_back(alpha_min * std::pow(ratio, i));
    grid.back() = 1.0;
    for (double v : insert) {
        if (!(v > 0.0) || v > 1.0)
            throw std::domain_error("inserted alpha must lie in (0, 1]");
        grid.push_back(v);
    }
    std::sort(grid.begin(), grid.end());
    std::vector<double> out;
    for (double v : grid)
        if (out.empty() || v - out.back() > kGridTol) out.push_back(v);
    return out;
}

int PCvarSolution::grid_index(double alpha, double tol) const {
    for (std::size_t g = 0; g < alpha_grid.size(); ++g)
        if (std::abs(alpha_grid[g] - alpha) <= tol) return static_cast<int>(g);
    return -1;
}

namespace {

// Minimizes (1/y) * sum_j p_j * (u_j r_j + gamma * w_j(u_j)) subject to
// sum_j p_j u_j = y, 0 <= u_j <= 1, where w_j is the piecewise-linear
// interpolation of u -> u * V_next(x_j, u) over {0} + grid. Each w_j is
// convex, so its segment slopes are already sorted; the greedy fill over a
// heap-merge of the per-successor segment streams is the exact solution of
// the epigraph LP. Ties break to the lowest entry index.
struct InnerResult {
    double value;
    std::vector<double> xi;
};

InnerResult inner_minimize(const std::vector<Transition>& row, double y,
                           double gamma, const std::vector<double>& grid,
                           const std::vector<std::vector<double>>& next_values) {
    const int n = static_cast<int>(row.size());
    const int G = static_cast<int>(grid.size());
    std::vector<int> seg(n, 0);          // next segment index per entry
    std::vector<double> last_slope(n, -1e300);

    auto slope_of = [&](int j, int k) {
        const std::vector<double>& v = next_values[row[j].next_state];
        const double u_prev = k == 0 ? 0.0 : grid[k - 1];
        const double w_prev = k == 0 ? 0.0 : grid[k - 1] * v[k - 1];
        const double u = grid[k];
        const double w = u * v[k];
        double s = row[j].reward + gamma * (w - w_prev) / (u - u_prev);
        return std::max(s, last_slope[j]); // guard against fp non-convexity
    };

    using HeapItem = std::pair<double, int>; // (slope, entry)
    auto cmp = [](const HeapItem& a, const HeapItem& b) {
        return a.first > b.first || (a.first == b.first && a.second > b.second);
    };
    std::vector<HeapItem> heap;
    heap.reserve(n);
    for (int j = 0; j < n; ++j) heap.emplace_back(slope_of(j, 0), j);
    std::make_heap(heap.begin(), heap.end(), cmp);

    double remaining = y;
    double cost = 0.0;
    std::vector<double> mass(n, 0.0);
    while (remaining > 0.0 && !heap.empty()) {
        std::pop_heap(heap.begin(), heap.end(), cmp);
        const auto [slope, j] = heap.back();
        heap.pop_back();
        const int k = seg[j];
        const double u_prev = k == 0 ? 0.0 : grid[k - 1];
        const double cap = row[j].probability * (grid[k] - u_prev);
        const double take = std::min(cap, remaining);
        mass[j] += take;
        cost += take * slope;
        remaining -= take;
        last_slope[j] = slope;
        if (++seg[j] < G) {
            heap.emplace_back(slope_of(j, seg[j]), j);
            std::push_heap(heap.begin(), heap.end(), cmp);
        }
    }
    InnerResult res;
    res.value = cost / y;
    res.xi.resize(n);
    for (int j = 0; j < n; ++j) res.xi[j] = mass[j] / (row[j].probability * y);
    return res;
}

} // namespace

PCvarSolution solve_pcvar(const FiniteHorizonMDP& mdp,
                          const std::vector<double>& alpha_grid) {
    require_valid(mdp);
    if (alpha_grid.size() < 2 || !std::is_sorted(alpha_grid.begin(), alpha_grid.end()) ||
        !(alpha_grid.front() > 0.0) ||
        std::abs(alpha_grid.back() - 1.0) > kGridTol)
        throw std::domain_error("alpha grid must be sorted within (0, 1] and contain 1.0");
    const int G = static_cast<int>(alpha_grid.size());
    PCvarSolution sol;
    sol.alpha_grid = alpha_grid;
    sol.values.assign(mdp.horizon + 1,
                      std::vector<std::vector<double>>(
                          mdp.n_states, std::vector<double>(G, 0.0)));
    sol.policy.assign(mdp.horizon,
                      std::vector<std::vector<int>>(mdp.n_states,
                                                    std::vector<int>(G, -1)));
    sol.xi.assign(mdp.horizon,
                  std::vector<std::vector<std::vector<std::vector<double>>>>(
                      mdp.n_states,
                      std::vector<std::vector<std::vector<double>>>(
                          G, std::vector<std::vector<double>>(mdp.n_actions))));
    for (int t = mdp.horizon - 1; t >= 0; --t)
        for (int s = 0; s < mdp.n_states; ++s) {
            if (mdp.terminal[s]) continue;
            for (int g = 0; g < G; ++g) {
                const double y = alpha_grid[g];
                double best = 0.0;
                int best_a = -1;
                for (int a = 0; a < mdp.n_actions; ++a) {
                    InnerResult r = inner_minimize(mdp.row(s, a), y, mdp.gamma,
                                                   alpha_grid, sol.values[t + 1]);
                    sol.xi[t][s][g][a] = std::move(r.xi);
                    if (best_a < 0 || r.value > best) {
                        best = r.value;
                        best_a = a;
                    }
                }
                sol.values[t][s][g] = best;
                sol.policy[t][s][g] = best_a;
            }
        }
    return sol;
}

PCvarDecision pcvar_decide(const FiniteHorizonMDP& mdp, const PCvarSolution& sol,
                           int stage, int state, double y) {
    if (y < sol.alpha_grid.front() - kGridTol || y > 1.0 + kGridTol)
        throw std::domain_error(
            "risk level outside the solved grid; extend the alpha grid");
    y = std::clamp(y, sol.alpha_grid.front(), 1.0);
    PCvarDecision best;
    for (int a = 0; a < mdp.n_actions; ++a) {
        InnerResult r = inner_minimize(mdp.row(state, a), y, mdp.gamma,
                                       sol.alpha_grid, sol.values[stage + 1]);
        if (best.action < 0 || r.value > best.value) {
            best.action = a;
            best.value = r.value;
            best.xi = std::move(r.xi);
        }
    }
    return best;
}

std::vector<double> pcvar_xi_at(const FiniteHorizonMDP& mdp,
                                const PCvarSolution& sol, int stage, int state,
                                int action, double y) {
    return inner_minimize(mdp.row(state, action), y, mdp.gamma, sol.alpha_grid,
                          sol.values[stage + 1])
        .xi;
}

int pcvar_bracket_action(const PCvarSolution& sol, int stage, int state, double y) {
    const auto& grid = sol.alpha_grid;
    auto it = std::lower_bound(grid.begin(), grid.end(), y - kGridTol);
    int hi = static_cast<int>(it - grid.begin());
    hi = std::min(hi, static_cast<int>(grid.size()) - 1);
    if (std::abs(grid[hi] - y) <= kGridTol)
        return sol.policy[stage][state][hi];
    // bracketing grid points; when they disagree, the lower (more
    // risk-averse) one wins, so the lower action is the answer either way
    const int lo = std::max(hi - 1, 0);
    return sol.policy[stage][state][lo];
}

Trajectory pcvar_rollout(const FiniteHorizonMDP& mdp, const PCvarSolution& sol,
                         double alpha0, std::uint64_t seed) {
    if (alpha0 < sol.alpha_grid.front() - kGridTol || alpha0 > 1.0 + kGridTol)
        throw std::domain_error(
            "alpha0 outside the solved grid; extend the alpha grid");
    Rng rng(seed);
    Trajectory traj;
    int state = mdp.initial_state;
    double alpha = std::clamp(alpha0, sol.alpha_grid.front(), 1.0);
    double disc = 1.0;
    for (int t = 0; t < mdp.horizon && !mdp.terminal[state]; ++t) {
        const int a = pcvar_bracket_action(sol, t, state, alpha);
        // xi recomputed exactly at the current alpha so the risk-level trace
        // carries no grid-lookup error
        InnerResult r = inner_minimize(mdp.row(state, a), alpha, mdp.gamma,
                                       sol.alpha_grid, sol.values[t + 1]);
        const auto& row = mdp.row(state, a);
        const double u = rng.uniform();
        double cum = 0.0;
        int pick = static_cast<int>(row.size()) - 1;
        for (std::size_t j = 0; j < row.size(); ++j) {
            cum += row[j].probability;
            if (u < cum) {
                pick = static_cast<int>(j);
                break;
            }
        }
        traj.steps.push_back({t, state, a, row[pick].reward, row[pick].next_state});
        traj.alpha_trace.push_back(alpha);
        traj.discounted_return += disc * row[pick].reward;
        disc *= mdp.gamma;
        alpha = std::clamp(alpha * r.xi[pick], sol.alpha_grid.front(), 1.0);
        state = row[pick].next_state;
    }
    return traj;
}

// --- consistency probe ----------------------------------------------------

namespace {

// Nested policy evaluation with a single action deviation at (dev_t, dev_s).
double ncvar_deviation_value(const FiniteHorizonMDP& mdp, const PolicyTable& policy,
                             RiskLevel alpha, int dev_t, int dev_s, int dev_a) {
    std::vector<std::vector<double>> v(mdp.horizon + 1,
                                       std::vector<double>(mdp.n_states, 0.0));
    for (int t = mdp.horizon - 1; t >= 0; --t)
        for (int s = 0; s < mdp.n_states; ++s) {
            if (mdp.terminal[s]) continue;
            const int a = (t == dev_t && s == dev_s) ? dev_a : policy.action(t, s);
            v[t][s] = cvar_tail(successor_value_dist(mdp.row(s, a), mdp.gamma, v[t + 1]),
                                alpha);
        }
    return v[0][mdp.initial_state];
}

// CVaR (at the initial state) of the return distribution under the fixed-CVaR
// policy with a single action deviation at (dev_t, dev_s).
double fcvar_deviation_value(const FiniteHorizonMDP& mdp, const FCvarSolution& sol,
                             RiskLevel alpha, int dev_t, int dev_s, int dev_a) {
    std::vector<std::vector<DiscreteDistribution>> dists = sol.return_dists;
    for (int t = dev_t; t >= 0; --t)
        for (int s = 0; s < mdp.n_states; ++s) {
            if (mdp.terminal[s]) continue;
            const int a = (t == dev_t && s == dev_s) ? dev_a : sol.policy.action(t, s);
            std::vector<std::pair<double, DiscreteDistribution>> parts;
            for (const Transition& tr : mdp.row(s, a))
                parts.emplace_back(tr.probability,
                                   shift_scale(dists[t + 1][tr.next_state], tr.reward,
                                               mdp.gamma));
            dists[t][s] = mixture(parts);
        }
    return cvar_tail(dists[0][mdp.initial_state], alpha);
}

} // namespace

ConsistencyReport consistency_probe(const FiniteHorizonMDP& mdp, CvarMethod method,
                                    double alpha, int n_seeds, std::uint64_t seed,
                                    double tol) {
    require_valid(mdp);
    const RiskLevel level(alpha);
    ConsistencyReport report;

    if (method == CvarMethod::Precommitted) {
        PCvarSolution sol = solve_pcvar(mdp, make_alpha_grid(33, 0.01, {alpha}));
        std::vector<std::vector<char>> checked(
            mdp.horizon, std::vector<char>(mdp.n_states, 0));
        for (int i = 0; i < n_seeds; ++i) {
            Trajectory traj = pcvar_rollout(mdp, sol, alpha, split_seed(seed, i));
            for (std::size_t k = 0; k < traj.steps.size(); ++k) {
                const TrajectoryStep& st = traj.steps[k];
                if (checked[st.stage][st.state]) continue;
                checked[st.stage][st.state] = 1;
                ++report.states_checked;
                const double alpha_t = traj.alpha_trace[k];
                const int planned = st.action; // plan made at stage 0 via the grid
                PCvarDecision fresh = pcvar_decide(mdp, sol, st.stage, st.state, alpha_t);
                if (fresh.action == planned) continue;
                const double pv =
                    inner_minimize(mdp.row(st.state, planned), alpha_t, mdp.gamma,
                                   sol.alpha_grid, sol.values[st.stage + 1])
                        .value;
                const double gap = fresh.value - pv;
                if (gap > tol)
                    report.divergences.push_back(
                        {st.stage, st.state, planned, fresh.action, gap});
            }
        }
        return report;
    }

    PolicyTable policy;
    FCvarSolution fsol;
    if (method == CvarMethod::Nested) {
        policy = solve_ncvar(mdp, level).policy;
    } else {
        fsol = solve_fcvar(mdp, level);
        policy = fsol.policy;
    }
    std::vector<std::vector<char>> checked(mdp.horizon,
                                           std::vector<char>(mdp.n_states, 0));
    for (int i = 0; i < n_seeds; ++i) {
        Trajectory traj = simulate(mdp, policy, split_seed(seed, i));
        for (const TrajectoryStep& st : traj.steps) {
            if (checked[st.stage][st.state]) continue;
            checked[st.stage][st.state] = 1;
            ++report.states_checked;
            const int executed = st.action;
            double best_val = -1e300, executed_val = 0.0;
            int best_a = -1;
            for (int a = 0; a < mdp.n_actions; ++a) {
                const double v =
                    method == CvarMethod::Nested
                        ? ncvar_deviation_value(mdp, policy, level, st.stage, st.state, a)
                        : fcvar_deviation_value(mdp, fsol, level, st.stage, st.state, a);
                if (a == executed) executed_val = v;
                if (v > best_val + kGridTol) {
                    best_val = v;
                    best_a = a;
                }
            }
            const double gap = best_val - executed_val;
            if (gap > tol)
                report.divergences.push_back(
                    {st.stage, st.state, best_a, executed, gap});
        }
    }
    return report;
}

// --- serialization --------------------------------------------------------

namespace {

nlohmann::ordered_json policy_to_json(const PolicyTable& policy) {
    nlohmann::ordered_json rows = nlohmann::ordered_json::array();
    for (int t = 0; t < policy.horizon(); ++t) {
        nlohmann::ordered_json row = nlohmann::ordered_json::array();
        for (int s = 0; s < policy.n_states(); ++s)
            row.push_back(policy.defined(t, s) ? policy.action(t, s) : -1);
        rows.push_back(row);
    }
    return rows;
}

} // namespace

std::string NCvarSolution::to_json() const {
    nlohmann::ordered_json j;
    j["method"] = "nested";
    j["alpha"] = alpha;
    j["values"] = values;
    j["policy"] = policy_to_json(policy);
    return j.dump(2);
}

std::string FCvarSolution::to_json() const {
    nlohmann::ordered_json j;
    j["method"] = "fixed";
    j["alpha"] = alpha;
    j["cvar_values"] = cvar_values;
    nlohmann::ordered_json dists = nlohmann::ordered_json::array();
    for (const auto& row : return_dists) {
        nlohmann::ordered_json drow = nlohmann::ordered_json::array();
        for (const auto& d : row)
            drow.push_back(nlohmann::ordered_json::parse(d.to_json()));
        dists.push_back(drow);
    }
    j["return_dists"] = dists;
    j["policy"] = policy_to_json(policy);
    return j.dump(2);
}

std::string PCvarSolution::to_json() const {
    nlohmann::ordered_json j;
    j["method"] = "precommitted";
    j["alpha_grid"] = alpha_grid;
    j["values"] = values;
    j["policy"] = policy;
    j["xi"] = xi;
    return j.dump(2);
}

} // namespace cvarseq
