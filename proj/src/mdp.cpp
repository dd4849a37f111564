#include "cvarseq/mdp.hpp"

#include <cmath>
#include <cstdio>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "cvarseq/rng.hpp"

namespace cvarseq {

std::string FiniteHorizonMDP::to_json() const {
    nlohmann::ordered_json j;
    j["n_states"] = n_states;
    j["n_actions"] = n_actions;
    j["horizon"] = horizon;
    j["gamma"] = gamma;
    j["initial_state"] = initial_state;
    j["terminal"] = terminal;
    nlohmann::ordered_json rows = nlohmann::ordered_json::array();
    for (int s = 0; s < n_states; ++s)
        for (int a = 0; a < n_actions; ++a)
            for (const Transition& t : transitions[s][a])
                rows.push_back({s, a, t.next_state, t.probability, t.reward});
    j["transitions"] = rows;
    return j.dump(2);
}

FiniteHorizonMDP FiniteHorizonMDP::from_json(const std::string& text) {
    nlohmann::json j = nlohmann::json::parse(text);
    FiniteHorizonMDP mdp;
    mdp.n_states = j.at("n_states").get<int>();
    mdp.n_actions = j.at("n_actions").get<int>();
    mdp.horizon = j.at("horizon").get<int>();
    mdp.gamma = j.at("gamma").get<double>();
    mdp.initial_state = j.at("initial_state").get<int>();
    mdp.terminal = j.at("terminal").get<std::vector<bool>>();
    mdp.transitions.assign(mdp.n_states,
                           std::vector<std::vector<Transition>>(mdp.n_actions));
    for (const auto& row : j.at("transitions")) {
        int s = row.at(0).get<int>();
        int a = row.at(1).get<int>();
        mdp.transitions.at(s).at(a).push_back({row.at(2).get<int>(),
                                               row.at(3).get<double>(),
                                               row.at(4).get<double>()});
    }
    return mdp;
}

std::vector<std::string> validate(const FiniteHorizonMDP& mdp) {
    std::vector<std::string> out;
    auto loc = [](int s, int a) {
        return "(state " + std::to_string(s) + ", action " + std::to_string(a) + ")";
    };
    if (mdp.n_states <= 0) out.push_back("n_states must be positive");
    if (mdp.n_actions <= 0) out.push_back("n_actions must be positive");
    if (mdp.horizon <= 0) out.push_back("horizon must be positive");
    if (!(mdp.gamma > 0.0) || mdp.gamma > 1.0)
        out.push_back("gamma must lie in (0, 1]");
    if (mdp.initial_state < 0 || mdp.initial_state >= mdp.n_states)
        out.push_back("initial state out of range");
    if (static_cast<int>(mdp.terminal.size()) != mdp.n_states)
        out.push_back("terminal flag vector has wrong length");
    if (static_cast<int>(mdp.transitions.size()) != mdp.n_states) {
        out.push_back("transition table has wrong number of states");
        return out;
    }
    for (int s = 0; s < mdp.n_states; ++s) {
        if (static_cast<int>(mdp.transitions[s].size()) != mdp.n_actions) {
            out.push_back("state " + std::to_string(s) +
                          " has wrong number of action rows");
            continue;
        }
        for (int a = 0; a < mdp.n_actions; ++a) {
            const auto& row = mdp.transitions[s][a];
            if (row.empty()) {
                out.push_back("empty transition row at " + loc(s, a));
                continue;
            }
            double sum = 0.0;
            for (const Transition& t : row) {
                sum += t.probability;
                if (t.probability <= 0.0)
                    out.push_back("non-positive probability at " + loc(s, a));
                if (t.next_state < 0 || t.next_state >= mdp.n_states)
                    out.push_back("successor out of range at " + loc(s, a));
                else if (s < static_cast<int>(mdp.terminal.size()) &&
                         mdp.terminal[s] && (t.next_state != s || t.reward != 0.0))
                    out.push_back("terminal state " + std::to_string(s) +
                                  " must have only zero-reward self-loops");
            }
            if (std::abs(sum - 1.0) > 1e-12)
                out.push_back("probabilities sum to " + std::to_string(sum) +
                              " at " + loc(s, a));
        }
    }
    return out;
}

void require_valid(const FiniteHorizonMDP& mdp) {
    auto violations = validate(mdp);
    if (!violations.empty())
        throw std::invalid_argument("invalid MDP: " + violations.front() +
                                    (violations.size() > 1
                                         ? " (+" + std::to_string(violations.size() - 1) +
                                               " more)"
                                         : ""));
}

int PolicyTable::action(int stage, int state) const {
    if (stage < 0 || stage >= horizon() || state < 0 || state >= n_states() ||
        choice_[stage][state] < 0)
        throw std::runtime_error("policy has no action for stage " +
                                 std::to_string(stage) + ", state " +
                                 std::to_string(state));
    return choice_[stage][state];
}

std::string Trajectory::to_csv() const {
    std::string out = "stage,state,action,reward,alpha_t\n";
    char buf[128];
    for (std::size_t i = 0; i < steps.size(); ++i) {
        const TrajectoryStep& s = steps[i];
        std::snprintf(buf, sizeof(buf), "%d,%d,%d,%.12g,", s.stage, s.state,
                      s.action, s.reward);
        out += buf;
        if (i < alpha_trace.size()) {
            std::snprintf(buf, sizeof(buf), "%.12g", alpha_trace[i]);
            out += buf;
        }
        out += '\n';
    }
    return out;
}

namespace {

int sample_transition(const std::vector<Transition>& row, Rng& rng) {
    const double u = rng.uniform();
    double cum = 0.0;
    for (std::size_t i = 0; i < row.size(); ++i) {
        cum += row[i].probability;
        if (u < cum) return static_cast<int>(i);
    }
    return static_cast<int>(row.size()) - 1;
}

} // namespace

Trajectory simulate(const FiniteHorizonMDP& mdp, const PolicyTable& policy,
                    std::uint64_t seed) {
    Rng rng(seed);
    Trajectory traj;
    int state = mdp.initial_state;
    double disc = 1.0;
    for (int t = 0; t < mdp.horizon && !mdp.terminal[state]; ++t) {
        const int a = policy.action(t, state);
        const auto& row = mdp.row(state, a);
        const Transition& tr = row[sample_transition(row, rng)];
        traj.steps.push_back({t, state, a, tr.reward, tr.next_state});
        traj.discounted_return += disc * tr.reward;
        disc *= mdp.gamma;
        state = tr.next_state;
    }
    return traj;
}

std::map<int, std::map<int, double>>
visit_frequencies(const FiniteHorizonMDP& mdp, const PolicyTable& policy,
                  int n_rollouts, std::uint64_t seed) {
    if (n_rollouts < 1)
        throw std::domain_error("visit_frequencies requires n_rollouts >= 1");
    std::map<int, std::map<int, double>> counts;
    std::vector<int> seen(mdp.n_states);
    for (int i = 0; i < n_rollouts; ++i) {
        Trajectory traj = simulate(mdp, policy, split_seed(seed, i));
        seen.assign(mdp.n_states, 0);
        for (const TrajectoryStep& s : traj.steps) {
            if (seen[s.state]) continue; // first visit only
            seen[s.state] = 1;
            counts[s.state][s.action] += 1.0;
        }
    }
    for (auto& [state, by_action] : counts)
        for (auto& [action, c] : by_action) c /= n_rollouts;
    return counts;
}

std::vector<std::vector<DiscreteDistribution>>
policy_return_distributions(const FiniteHorizonMDP& mdp,
                            const PolicyTable& policy, std::size_t max_atoms) {
    const DiscreteDistribution zero = DiscreteDistribution::delta(0.0);
    std::vector<std::vector<DiscreteDistribution>> dists(
        mdp.horizon + 1, std::vector<DiscreteDistribution>(mdp.n_states, zero));
    for (int t = mdp.horizon - 1; t >= 0; --t) {
        for (int s = 0; s < mdp.n_states; ++s) {
            if (mdp.terminal[s]) continue;
            const auto& row = mdp.row(s, policy.action(t, s));
            std::vector<std::pair<double, DiscreteDistribution>> parts;
            parts.reserve(row.size());
            for (const Transition& tr : row)
                parts.emplace_back(tr.probability,
                                   shift_scale(dists[t + 1][tr.next_state],
                                               tr.reward, mdp.gamma));
            dists[t][s] = mixture(parts);
            if (dists[t][s].size() > max_atoms)
                throw std::runtime_error(
                    "return distribution exceeds the atom budget (" +
                    std::to_string(max_atoms) +
                    "); use an enumeration oracle at smaller scale");
        }
    }
    return dists;
}

DiscreteDistribution
return_distribution_exact(const FiniteHorizonMDP& mdp, const PolicyTable& policy,
                          int from_state, int from_stage, std::size_t max_atoms) {
    return policy_return_distributions(mdp, policy, max_atoms)[from_stage][from_state];
}

std::vector<std::vector<double>>
policy_expected_values(const FiniteHorizonMDP& mdp, const PolicyTable& policy) {
    std::vector<std::vector<double>> v(mdp.horizon + 1,
                                       std::vector<double>(mdp.n_states, 0.0));
    for (int t = mdp.horizon - 1; t >= 0; --t)
        for (int s = 0; s < mdp.n_states; ++s) {
            if (mdp.terminal[s]) continue;
            double acc = 0.0;
            for (const Transition& tr : mdp.row(s, policy.action(t, s)))
                acc += tr.probability * (tr.reward + mdp.gamma * v[t + 1][tr.next_state]);
            v[t][s] = acc;
        }
    return v;
}

} // namespace cvarseq
