#include <algorithm>
#include <cmath>
#include <filesystem>
#include <vector>

#include <nlohmann/json.hpp>

#include "cvarseq/experiments.hpp"
#include "cvarseq/oracle.hpp"
#include "cvarseq/rng.hpp"
#include "cvarseq/solvers.hpp"

namespace cvarseq {

namespace {

struct Check {
    std::string name;
    double max_error = 0.0;
    double tolerance;
    bool pass() const { return max_error <= tolerance; }
};

DiscreteDistribution random_distribution(Rng& rng, int max_atoms = 10) {
    const int n = 1 + static_cast<int>(rng.uniform() * max_atoms) % max_atoms;
    std::vector<Atom> atoms;
    std::vector<double> w;
    double wsum = 0.0;
    for (int i = 0; i < n; ++i) {
        w.push_back(0.05 + rng.uniform());
        wsum += w.back();
    }
    double psum = 0.0;
    for (int i = 0; i < n; ++i) {
        double p = w[i] / wsum;
        if (i + 1 == n) p = 1.0 - psum;
        psum += p;
        atoms.push_back({10.0 * rng.uniform() - 5.0, p});
    }
    return DiscreteDistribution(std::move(atoms));
}

std::vector<double> dense_grid(const std::vector<double>& insert) {
    std::vector<double> g;
    for (int k = 10; k <= 1000; ++k) g.push_back(k / 1000.0);
    for (double v : insert) g.push_back(v);
    std::sort(g.begin(), g.end());
    std::vector<double> out;
    for (double v : g)
        if (out.empty() || v - out.back() > 1e-12) out.push_back(v);
    return out;
}

} // namespace

int run_verify(const ExperimentConfig& cfg) {
    std::vector<Check> checks;

    // CVaR primitive: the two definitions agree; alpha = 1 is the mean;
    // monotone in alpha
    {
        Check cross{"cvar_cross_form", 0.0, 1e-12};
        Check at_one{"cvar_alpha1_mean", 0.0, 1e-12};
        Check mono{"cvar_monotone_in_alpha", 0.0, 1e-12};
        Rng rng(1234);
        for (int i = 0; i < 1000; ++i) {
            const DiscreteDistribution d = random_distribution(rng);
            double prev = -1e300;
            for (int k = 1; k <= 20; ++k) {
                const RiskLevel a(k / 20.0);
                const double tail = cvar_tail(d, a);
                cross.max_error =
                    std::max(cross.max_error, std::abs(tail - cvar_sup(d, a)));
                mono.max_error = std::max(mono.max_error, prev - tail);
                prev = tail;
            }
            at_one.max_error = std::max(
                at_one.max_error, std::abs(cvar_tail(d, RiskLevel(1.0)) - d.mean()));
        }
        checks.push_back(cross);
        checks.push_back(at_one);
        checks.push_back(mono);
    }

    // nested solver vs the literal tree recursion
    {
        Check c{"ncvar_vs_tree_reference", 0.0, 1e-10};
        for (int i = 0; i < 200; ++i) {
            const FiniteHorizonMDP mdp = random_mdp(split_seed(7, i));
            for (double a : {0.15, 0.5, 1.0}) {
                const double solver = solve_ncvar(mdp, RiskLevel(a)).values[0][0];
                const double ref = ncvar_reference(mdp, RiskLevel(a), 0);
                c.max_error = std::max(c.max_error, std::abs(solver - ref));
            }
        }
        checks.push_back(c);
    }

    // fixed solver values vs enumeration of its own policy
    {
        Check c{"fcvar_vs_enumeration", 0.0, 1e-10};
        for (int i = 0; i < 100; ++i) {
            const FiniteHorizonMDP mdp = random_mdp(split_seed(8, i));
            for (double a : {0.2, 0.7}) {
                const FCvarSolution sol = solve_fcvar(mdp, RiskLevel(a));
                const double oracle = cvar_tail(
                    enumerate_returns(mdp, sol.policy, mdp.initial_state),
                    RiskLevel(a));
                c.max_error =
                    std::max(c.max_error, std::abs(sol.cvar_values[0][0] - oracle));
            }
        }
        checks.push_back(c);
    }

    // precommitted solver vs enumeration of the extracted augmented policy
    {
        Check c{"pcvar_vs_enumeration_2stage", 0.0, 1e-3};
        RandomMdpParams params;
        params.horizon = 2;
        params.n_states = 3;
        params.n_actions = 2;
        params.ordered_continuations = true;
        for (int i = 0; i < 100; ++i) {
            const FiniteHorizonMDP mdp = random_mdp(split_seed(9, i), params);
            for (double a : {0.2, 0.55}) {
                const PCvarSolution sol = solve_pcvar(mdp, dense_grid({a}));
                const double oracle = pcvar_policy_check(mdp, sol, a);
                const int gi = sol.grid_index(a);
                c.max_error = std::max(
                    c.max_error, std::abs(sol.values[0][0][gi] - oracle));
            }
        }
        checks.push_back(c);
    }

    // hazard chain closed forms
    {
        const double lam = 0.05;
        HazardChainConfig hc;
        hc.n_states = 3;
        hc.hazard = lam;
        const FiniteHorizonMDP mdp = make_hazard_chain(hc);

        Check geo{"ncvar_hazard_geometric", 0.0, 1e-9};
        Check fix{"fcvar_hazard_closed_form", 0.0, 1e-9};
        for (double a : {0.06, 0.1, 0.11, 0.2, 0.5, 1.0}) {
            const auto nsol = solve_ncvar(mdp, RiskLevel(a));
            const auto fsol = solve_fcvar(mdp, RiskLevel(a));
            const double g = implied_gamma(a, lam);
            for (int d = 1; d <= 3; ++d) {
                geo.max_error = std::max(
                    geo.max_error, std::abs(nsol.values[0][d] - std::pow(g, d)));
                const double expect =
                    std::max(0.0, 1.0 - (1.0 - std::pow(1.0 - lam, d)) / a);
                fix.max_error = std::max(
                    fix.max_error, std::abs(fsol.cvar_values[0][d] - expect));
            }
        }
        checks.push_back(geo);
        checks.push_back(fix);

        Check pc{"pcvar_hazard_closed_form", 0.0, 1e-9};
        Check seq{"pcvar_alpha_sequence_tracked", 0.0, 1e-9};
        for (double a0 : {0.3, 0.5}) {
            const std::vector<double> alphas = pcvar_alpha_sequence(a0, lam, 3);
            std::vector<double> grid_insert = alphas;
            const PCvarSolution sol =
                solve_pcvar(mdp, make_alpha_grid(33, 0.01, grid_insert));
            double product = 1.0;
            for (double at : alphas) product *= implied_gamma(at, lam);
            const int gi = sol.grid_index(a0);
            pc.max_error = std::max(
                pc.max_error, std::abs(sol.values[0][3][gi] - product));
            pc.max_error = std::max(
                pc.max_error, std::abs(pcvar_policy_check(mdp, sol, a0) - product));

            double alpha_t = a0;
            for (int t = 0; t < 3; ++t) {
                seq.max_error = std::max(seq.max_error, std::abs(alpha_t - alphas[t]));
                const std::vector<double> xi =
                    pcvar_xi_at(mdp, sol, t, 3 - t, 0, alpha_t);
                alpha_t = std::clamp(alpha_t * xi[0], sol.alpha_grid.front(), 1.0);
            }
        }
        checks.push_back(pc);
        checks.push_back(seq);
    }

    // reward chain closed forms
    {
        RewardChainConfig rc;
        const FiniteHorizonMDP mdp = make_reward_chain(rc);
        const DiscreteDistribution stage({{-1.0, 0.1}, {1.0, 0.9}});
        Check nested{"reward_chain_ncvar_linear", 0.0, 1e-9};
        Check fixed{"reward_chain_fcvar_convolution", 0.0, 1e-10};
        for (double a : {0.05, 0.11, 0.15, 0.2, 0.3, 1.0}) {
            const auto nsol = solve_ncvar(mdp, RiskLevel(a));
            const auto fsol = solve_fcvar(mdp, RiskLevel(a));
            const double c = cvar_tail(stage, RiskLevel(a));
            for (int n = 1; n <= 4; ++n) {
                nested.max_error = std::max(nested.max_error,
                                            std::abs(nsol.values[0][n] - n * c));
                const double conv =
                    cvar_tail(convolve_iid(stage, n), RiskLevel(a));
                fixed.max_error = std::max(fixed.max_error,
                                           std::abs(fsol.cvar_values[0][n] - conv));
            }
        }
        checks.push_back(nested);
        checks.push_back(fixed);
    }

    // oracle output independent of successor iteration order
    {
        Check c{"oracle_permutation_invariance", 0.0, 1e-12};
        FiniteHorizonMDP mdp = random_mdp(split_seed(11, 0));
        const PolicyTable policy = solve_expected(mdp).policy;
        const DiscreteDistribution base = enumerate_returns(mdp, policy, 0);
        FiniteHorizonMDP permuted = mdp;
        for (auto& state_rows : permuted.transitions)
            for (auto& row : state_rows) std::reverse(row.begin(), row.end());
        const DiscreteDistribution redo = enumerate_returns(permuted, policy, 0);
        for (double a : {0.1, 0.4, 1.0})
            c.max_error = std::max(c.max_error,
                                   std::abs(cvar_tail(base, RiskLevel(a)) -
                                            cvar_tail(redo, RiskLevel(a))));
        checks.push_back(c);
    }

    nlohmann::ordered_json report;
    report["engine_version"] = kEngineVersion;
    nlohmann::ordered_json arr = nlohmann::ordered_json::array();
    int failed = 0;
    for (const Check& c : checks) {
        arr.push_back({{"name", c.name},
                       {"max_error", c.max_error},
                       {"tolerance", c.tolerance},
                       {"pass", c.pass()}});
        if (!c.pass()) ++failed;
    }
    report["checks"] = arr;
    report["all_pass"] = failed == 0;
    std::filesystem::create_directories(cfg.out_dir);
    write_file_atomic((std::filesystem::path(cfg.out_dir) / "verify_report.json").string(),
                      report.dump(2) + "\n");
    return failed;
}

} // namespace cvarseq
