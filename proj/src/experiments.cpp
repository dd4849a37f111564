#include "cvarseq/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "cvarseq/oracle.hpp"
#include "cvarseq/rng.hpp"
#include "cvarseq/solvers.hpp"

namespace cvarseq {

namespace {

using ordered_json = nlohmann::ordered_json;

std::string num(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.12g", v);
    return buf;
}

std::string alpha_tag(double a) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%g", a);
    return buf;
}

std::filesystem::path out_path(const ExperimentConfig& cfg, const std::string& name) {
    return std::filesystem::path(cfg.out_dir) / name;
}

void write_manifest(const ExperimentConfig& cfg) {
    ordered_json j = ordered_json::parse(cfg.to_json());
    j["engine_version"] = kEngineVersion;
    write_file_atomic(out_path(cfg, "manifest.json").string(), j.dump(2) + "\n");
}

double median(std::vector<double> v) {
    if (v.empty()) throw std::runtime_error("median of empty sample");
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

void require_seed(const ExperimentConfig& cfg) {
    if (!cfg.seed_set)
        throw std::invalid_argument(
            "--seed is mandatory for rollout-bearing experiments");
}

// --- navigation helpers ---------------------------------------------------

struct PathStats {
    std::vector<int> states;
    int min_lava_distance = 0; // over interior cells; 0 if the path enters lava
    int max_height = 0;
    bool reached_goal = false;
};

int lava_distance(const GridworldConfig& g, Cell c) {
    int best = g.width + g.height;
    for (Cell l : g.lava)
        best = std::min(best,
                        std::abs(c.first - l.first) + std::abs(c.second - l.second));
    return best;
}

// Follows the policy taking the most probable successor at every step.
// Interior cells (start and terminal excluded) define the lava distance.
template <typename ActionFn>
PathStats modal_path(const FiniteHorizonMDP& mdp, const GridworldConfig& g,
                     ActionFn&& action_at) {
    PathStats stats;
    int state = mdp.initial_state;
    stats.states.push_back(state);
    stats.min_lava_distance = g.width + g.height;
    for (int t = 0; t < mdp.horizon && !mdp.terminal[state]; ++t) {
        const int a = action_at(t, state);
        const auto& row = mdp.row(state, a);
        const Transition* best = &row.front();
        for (const Transition& tr : row)
            if (tr.probability > best->probability) best = &tr;
        state = best->next_state;
        stats.states.push_back(state);
        const Cell c = gridworld_cell(g, state);
        stats.max_height = std::max(stats.max_height, c.second);
        if (g.lava.count(c)) stats.min_lava_distance = 0;
        if (!mdp.terminal[state])
            stats.min_lava_distance =
                std::min(stats.min_lava_distance, lava_distance(g, c));
    }
    stats.reached_goal = state == gridworld_state(g, g.goal);
    return stats;
}

std::string freq_csv(const GridworldConfig& g,
                     const std::map<int, std::map<int, double>>& freqs) {
    std::string out = "col,row,action,frequency\n";
    for (const auto& [state, by_action] : freqs) {
        const Cell c = gridworld_cell(g, state);
        for (const auto& [action, f] : by_action)
            out += std::to_string(c.first) + "," + std::to_string(c.second) + "," +
                   std::to_string(action) + "," + num(f) + "\n";
    }
    return out;
}

std::string value_csv(const GridworldConfig& g, const std::vector<double>& values) {
    std::string out = "col,row,value\n";
    for (int s = 0; s < static_cast<int>(values.size()); ++s) {
        const Cell c = gridworld_cell(g, s);
        out += std::to_string(c.first) + "," + std::to_string(c.second) + "," +
               num(values[s]) + "\n";
    }
    return out;
}

} // namespace

void write_file_atomic(const std::string& path, const std::string& content) {
    const std::string tmp = path + ".tmp";
    {
        std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
        if (!f) throw std::runtime_error("cannot write " + tmp);
        f << content;
    }
    std::filesystem::rename(tmp, path);
}

// --- config ---------------------------------------------------------------

ExperimentConfig ExperimentConfig::from_json_file(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw std::invalid_argument("cannot open config file " + path);
    std::stringstream ss;
    ss << f.rdbuf();
    return from_json(ss.str());
}

ExperimentConfig ExperimentConfig::from_json(const std::string& text) {
    nlohmann::json j = nlohmann::json::parse(text);
    ExperimentConfig cfg;
    if (j.contains("experiment")) cfg.experiment = j["experiment"].get<std::string>();
    if (j.contains("alphas")) cfg.alphas = j["alphas"].get<std::vector<double>>();
    if (j.contains("methods"))
        cfg.methods = j["methods"].get<std::vector<std::string>>();
    if (j.contains("n_rollouts")) cfg.n_rollouts = j["n_rollouts"].get<int>();
    if (j.contains("seed")) {
        cfg.seed = j["seed"].get<std::uint64_t>();
        cfg.seed_set = true;
    }
    if (j.contains("out_dir")) cfg.out_dir = j["out_dir"].get<std::string>();
    if (j.contains("chain_max_distance"))
        cfg.chain_max_distance = j["chain_max_distance"].get<int>();
    if (j.contains("gridworld")) {
        const auto& g = j["gridworld"];
        GridworldConfig& gw = cfg.gridworld;
        if (g.contains("width")) gw.width = g["width"].get<int>();
        if (g.contains("height")) gw.height = g["height"].get<int>();
        if (g.contains("start"))
            gw.start = {g["start"][0].get<int>(), g["start"][1].get<int>()};
        if (g.contains("goal"))
            gw.goal = {g["goal"][0].get<int>(), g["goal"][1].get<int>()};
        if (g.contains("lava")) {
            gw.lava.clear();
            for (const auto& c : g["lava"])
                gw.lava.insert({c[0].get<int>(), c[1].get<int>()});
        }
        if (g.contains("slip")) gw.slip = g["slip"].get<double>();
        if (g.contains("gamma")) gw.gamma = g["gamma"].get<double>();
        if (g.contains("horizon")) gw.horizon = g["horizon"].get<int>();
    }
    if (j.contains("hazard_chain")) {
        const auto& h = j["hazard_chain"];
        if (h.contains("n_states")) cfg.hazard_chain.n_states = h["n_states"].get<int>();
        if (h.contains("hazard")) cfg.hazard_chain.hazard = h["hazard"].get<double>();
        if (h.contains("terminal_reward"))
            cfg.hazard_chain.terminal_reward = h["terminal_reward"].get<double>();
    }
    if (j.contains("reward_chain")) {
        const auto& r = j["reward_chain"];
        if (r.contains("n_states")) cfg.reward_chain.n_states = r["n_states"].get<int>();
        if (r.contains("loss_value"))
            cfg.reward_chain.loss_value = r["loss_value"].get<double>();
        if (r.contains("gain_value"))
            cfg.reward_chain.gain_value = r["gain_value"].get<double>();
        if (r.contains("loss_probability"))
            cfg.reward_chain.loss_probability = r["loss_probability"].get<double>();
    }
    for (double a : cfg.alphas)
        if (!(a > 0.0) || a > 1.0)
            throw std::invalid_argument("config alphas must lie in (0, 1]");
    for (const std::string& m : cfg.methods)
        if (m != "fixed" && m != "nested" && m != "precommitted")
            throw std::invalid_argument("unknown method '" + m + "'");
    return cfg;
}

std::string ExperimentConfig::to_json() const {
    ordered_json j;
    j["experiment"] = experiment;
    j["alphas"] = alphas;
    j["methods"] = methods;
    j["n_rollouts"] = n_rollouts;
    if (seed_set) j["seed"] = seed;
    j["out_dir"] = out_dir;
    j["chain_max_distance"] = chain_max_distance;
    ordered_json g;
    g["width"] = gridworld.width;
    g["height"] = gridworld.height;
    g["start"] = {gridworld.start.first, gridworld.start.second};
    g["goal"] = {gridworld.goal.first, gridworld.goal.second};
    ordered_json lava = ordered_json::array();
    for (Cell c : gridworld.lava) lava.push_back({c.first, c.second});
    g["lava"] = lava;
    g["slip"] = gridworld.slip;
    g["gamma"] = gridworld.gamma;
    g["horizon"] = gridworld.horizon;
    j["gridworld"] = g;
    j["hazard_chain"] = {{"n_states", hazard_chain.n_states},
                         {"hazard", hazard_chain.hazard},
                         {"terminal_reward", hazard_chain.terminal_reward}};
    j["reward_chain"] = {{"n_states", reward_chain.n_states},
                         {"loss_value", reward_chain.loss_value},
                         {"gain_value", reward_chain.gain_value},
                         {"loss_probability", reward_chain.loss_probability}};
    return j.dump(2);
}

// --- navigation -----------------------------------------------------------

int run_navigation(const ExperimentConfig& cfg) {
    require_seed(cfg);
    std::filesystem::create_directories(cfg.out_dir);
    const GridworldConfig& g = cfg.gridworld;
    const FiniteHorizonMDP mdp = make_gridworld(g);
    ordered_json summary;

    for (const std::string& method : cfg.methods)
        for (double a : cfg.alphas) {
            const std::string tag = method + "_alpha" + alpha_tag(a);
            ordered_json entry;
            if (method == "precommitted") {
                PCvarSolution sol = solve_pcvar(mdp, make_alpha_grid(33, 0.01, {a}));
                const int gi = sol.grid_index(a);
                std::vector<double> v0(mdp.n_states);
                for (int s = 0; s < mdp.n_states; ++s) v0[s] = sol.values[0][s][gi];
                write_file_atomic(out_path(cfg, "values_" + tag + ".csv").string(),
                                  value_csv(g, v0));
                entry["start_value"] = sol.values[0][mdp.initial_state][gi];

                // first-visit frequencies and per-cell alpha medians from
                // risk-tracked rollouts
                std::map<int, std::map<int, double>> counts;
                std::map<int, std::vector<double>> alpha_by_state;
                std::vector<double> last_quarter_alphas;
                int successes = 0;
                std::vector<int> seen(mdp.n_states);
                const int goal_state = gridworld_state(g, g.goal);
                for (int i = 0; i < cfg.n_rollouts; ++i) {
                    Trajectory traj =
                        pcvar_rollout(mdp, sol, a, split_seed(cfg.seed, i));
                    seen.assign(mdp.n_states, 0);
                    for (std::size_t k = 0; k < traj.steps.size(); ++k) {
                        const TrajectoryStep& st = traj.steps[k];
                        if (seen[st.state]) continue;
                        seen[st.state] = 1;
                        counts[st.state][st.action] += 1.0;
                        alpha_by_state[st.state].push_back(traj.alpha_trace[k]);
                    }
                    if (!traj.steps.empty() &&
                        traj.steps.back().next_state == goal_state) {
                        ++successes;
                        const std::size_t n = traj.alpha_trace.size();
                        for (std::size_t k = n - (n + 3) / 4; k < n; ++k)
                            last_quarter_alphas.push_back(traj.alpha_trace[k]);
                    }
                }
                for (auto& [s, by_a] : counts)
                    for (auto& [act, c] : by_a) c /= cfg.n_rollouts;
                write_file_atomic(out_path(cfg, "frequencies_" + tag + ".csv").string(),
                                  freq_csv(g, counts));
                std::string med_csv = "col,row,median_alpha_t\n";
                for (const auto& [s, alphas] : alpha_by_state) {
                    const Cell c = gridworld_cell(g, s);
                    med_csv += std::to_string(c.first) + "," +
                               std::to_string(c.second) + "," +
                               num(median(alphas)) + "\n";
                }
                write_file_atomic(out_path(cfg, "alpha_median_" + tag + ".csv").string(),
                                  med_csv);
                entry["n_successful"] = successes;
                if (!last_quarter_alphas.empty())
                    entry["median_alpha_last_quarter"] = median(last_quarter_alphas);

                PathStats stats = modal_path(mdp, g, [&](int t, int s) {
                    // modal path tracks alpha through the modal successor
                    return pcvar_bracket_action(sol, t, s, a);
                });
                // re-walk with alpha tracking for the modal path
                {
                    double alpha_t = a;
                    int state = mdp.initial_state;
                    PathStats tracked;
                    tracked.states.push_back(state);
                    tracked.min_lava_distance = g.width + g.height;
                    for (int t = 0; t < mdp.horizon && !mdp.terminal[state]; ++t) {
                        const int act = pcvar_bracket_action(sol, t, state, alpha_t);
                        const std::vector<double> xi =
                            pcvar_xi_at(mdp, sol, t, state, act, alpha_t);
                        const auto& row = mdp.row(state, act);
                        std::size_t best = 0;
                        for (std::size_t jj = 1; jj < row.size(); ++jj)
                            if (row[jj].probability > row[best].probability) best = jj;
                        alpha_t = std::clamp(alpha_t * xi[best],
                                             sol.alpha_grid.front(), 1.0);
                        state = row[best].next_state;
                        tracked.states.push_back(state);
                        const Cell c = gridworld_cell(g, state);
                        tracked.max_height = std::max(tracked.max_height, c.second);
                        if (g.lava.count(c)) tracked.min_lava_distance = 0;
                        if (!mdp.terminal[state])
                            tracked.min_lava_distance = std::min(
                                tracked.min_lava_distance, lava_distance(g, c));
                    }
                    tracked.reached_goal = state == gridworld_state(g, g.goal);
                    stats = tracked;
                }
                entry["min_lava_distance"] = stats.min_lava_distance;
                entry["max_height"] = stats.max_height;
                entry["modal_path_reaches_goal"] = stats.reached_goal;
                if (cfg.dump_solutions)
                    write_file_atomic(out_path(cfg, "solution_" + tag + ".json").string(),
                                      sol.to_json());
            } else {
                PolicyTable policy;
                std::vector<double> v0(mdp.n_states);
                if (method == "nested") {
                    NCvarSolution sol = solve_ncvar(mdp, RiskLevel(a));
                    policy = sol.policy;
                    v0 = sol.values[0];
                    if (cfg.dump_solutions)
                        write_file_atomic(
                            out_path(cfg, "solution_" + tag + ".json").string(),
                            sol.to_json());
                } else {
                    FCvarSolution sol = solve_fcvar(mdp, RiskLevel(a));
                    policy = sol.policy;
                    v0 = sol.cvar_values[0];
                    if (cfg.dump_solutions)
                        write_file_atomic(
                            out_path(cfg, "solution_" + tag + ".json").string(),
                            sol.to_json());
                }
                write_file_atomic(out_path(cfg, "values_" + tag + ".csv").string(),
                                  value_csv(g, v0));
                auto freqs = visit_frequencies(mdp, policy, cfg.n_rollouts, cfg.seed);
                write_file_atomic(out_path(cfg, "frequencies_" + tag + ".csv").string(),
                                  freq_csv(g, freqs));
                entry["start_value"] = v0[mdp.initial_state];
                PathStats stats = modal_path(
                    mdp, g, [&](int t, int s) { return policy.action(t, s); });
                entry["min_lava_distance"] = stats.min_lava_distance;
                entry["max_height"] = stats.max_height;
                entry["modal_path_reaches_goal"] = stats.reached_goal;
            }
            summary[tag] = entry;
        }
    write_file_atomic(out_path(cfg, "summary.json").string(), summary.dump(2) + "\n");
    write_manifest(cfg);
    return 0;
}

// --- chain stages ---------------------------------------------------------

int run_chain_stages(const ExperimentConfig& cfg) {
    std::filesystem::create_directories(cfg.out_dir);
    RewardChainConfig rc = cfg.reward_chain;
    rc.n_states = std::max(rc.n_states, cfg.chain_max_distance);
    const FiniteHorizonMDP mdp = make_reward_chain(rc);
    const DiscreteDistribution stage_dist({{rc.loss_value, rc.loss_probability},
                                           {rc.gain_value, 1.0 - rc.loss_probability}});
    std::string csv = "method,alpha,distance,value\n";
    for (const std::string& method : cfg.methods) {
        if (method == "precommitted") continue; // evaluation-only experiment
        for (double a : cfg.alphas) {
            std::vector<double> v0;
            if (method == "nested")
                v0 = solve_ncvar(mdp, RiskLevel(a)).values[0];
            else
                v0 = solve_fcvar(mdp, RiskLevel(a)).cvar_values[0];
            for (int n = 1; n <= cfg.chain_max_distance; ++n)
                csv += method + "," + alpha_tag(a) + "," + std::to_string(n) + "," +
                       num(v0[n]) + "\n";
        }
    }
    for (double a : cfg.alphas) {
        const double c = cvar_tail(stage_dist, RiskLevel(a));
        for (int n = 1; n <= cfg.chain_max_distance; ++n)
            csv += "nested_closed_form," + alpha_tag(a) + "," + std::to_string(n) +
                   "," + num(n * c) + "\n";
    }
    write_file_atomic(out_path(cfg, "chain_values.csv").string(), csv);
    write_manifest(cfg);
    return 0;
}

// --- risk as discounting --------------------------------------------------

int run_risk_discounting(const ExperimentConfig& cfg) {
    std::filesystem::create_directories(cfg.out_dir);
    const HazardChainConfig& hc = cfg.hazard_chain;
    const FiniteHorizonMDP mdp = make_hazard_chain(hc);
    const int n = hc.n_states;

    std::vector<double> insert = cfg.alphas;
    for (double a : cfg.alphas)
        for (double at : pcvar_alpha_sequence(a, hc.hazard, n))
            if (at > 0.01) insert.push_back(at);
    PCvarSolution psol = solve_pcvar(mdp, make_alpha_grid(33, 0.01, insert));

    std::string csv = "method,alpha,distance,value\n";
    for (const std::string& method : cfg.methods)
        for (double a : cfg.alphas) {
            std::vector<double> vals(n + 1, 0.0);
            if (method == "nested") {
                vals = solve_ncvar(mdp, RiskLevel(a)).values[0];
            } else if (method == "fixed") {
                vals = solve_fcvar(mdp, RiskLevel(a)).cvar_values[0];
            } else {
                const int gi = psol.grid_index(a);
                for (int d = 1; d <= n; ++d) vals[d] = psol.values[0][d][gi];
            }
            for (int d = 1; d <= n; ++d)
                csv += method + "," + alpha_tag(a) + "," + std::to_string(d) + "," +
                       num(vals[d]) + "\n";
        }
    write_file_atomic(out_path(cfg, "discount_values.csv").string(), csv);

    std::string geo = "gamma,distance,value\n";
    std::vector<double> gammas = {1.0 - hc.hazard};
    for (double a : cfg.alphas) gammas.push_back(implied_gamma(a, hc.hazard));
    for (double gm : gammas)
        for (int d = 1; d <= n; ++d)
            geo += num(gm) + "," + std::to_string(d) + "," + num(std::pow(gm, d)) + "\n";
    write_file_atomic(out_path(cfg, "geometric_reference.csv").string(), geo);

    std::string ig = "alpha,implied_gamma\n";
    for (double a : cfg.alphas)
        ig += alpha_tag(a) + "," + num(implied_gamma(a, hc.hazard)) + "\n";
    write_file_atomic(out_path(cfg, "implied_gamma.csv").string(), ig);

    // risk-level trace of the surviving branch: closed form and as tracked
    // through the solver's xi weights
    std::string seq = "alpha0,step,alpha_closed_form,alpha_tracked,implied_gamma_t\n";
    for (double a : cfg.alphas) {
        const std::vector<double> closed = pcvar_alpha_sequence(a, hc.hazard, n);
        double alpha_t = a;
        int state = mdp.initial_state;
        for (int t = 0; t < static_cast<int>(closed.size()); ++t) {
            seq += alpha_tag(a) + "," + std::to_string(t) + "," + num(closed[t]) +
                   "," + num(alpha_t) + "," +
                   num(implied_gamma(closed[t], hc.hazard)) + "\n";
            const std::vector<double> xi =
                pcvar_xi_at(mdp, psol, t, state, 0, alpha_t);
            // entry 0 of the hazard-chain row is the surviving branch
            alpha_t = std::clamp(alpha_t * xi[0], psol.alpha_grid.front(), 1.0);
            state = mdp.row(state, 0)[0].next_state;
            if (mdp.terminal[state]) break;
        }
    }
    write_file_atomic(out_path(cfg, "pcvar_alpha_sequence.csv").string(), seq);

    if (cfg.dump_solutions)
        write_file_atomic(out_path(cfg, "solution_precommitted.json").string(),
                          psol.to_json());
    write_manifest(cfg);
    return 0;
}

// --- dump-solution --------------------------------------------------------

std::string dump_solution(const ExperimentConfig& cfg, const std::string& method,
                          double alpha) {
    FiniteHorizonMDP mdp;
    if (cfg.experiment == "navigation")
        mdp = make_gridworld(cfg.gridworld);
    else if (cfg.experiment == "chain-stages")
        mdp = make_reward_chain(cfg.reward_chain);
    else if (cfg.experiment == "risk-discounting")
        mdp = make_hazard_chain(cfg.hazard_chain);
    else
        throw std::invalid_argument("dump-solution needs experiment navigation, "
                                    "chain-stages or risk-discounting");
    if (method == "nested") return solve_ncvar(mdp, RiskLevel(alpha)).to_json();
    if (method == "fixed") return solve_fcvar(mdp, RiskLevel(alpha)).to_json();
    if (method == "precommitted")
        return solve_pcvar(mdp, make_alpha_grid(33, 0.01, {alpha})).to_json();
    throw std::invalid_argument("unknown method '" + method + "'");
}

} // namespace cvarseq
