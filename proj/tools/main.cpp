#include <cstdio>
#include <exception>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "cvarseq/experiments.hpp"

namespace {

struct Overrides {
    std::string config_path;
    std::string out_dir;
    std::vector<double> alphas;
    std::vector<std::string> methods;
    std::uint64_t seed = 0;
    bool seed_set = false;
    int n_rollouts = -1;
    bool dump_solutions = false;
};

void add_common(CLI::App* cmd, Overrides& ov) {
    cmd->add_option("--config", ov.config_path, "experiment config JSON file");
    cmd->add_option("--out", ov.out_dir, "output directory");
    cmd->add_option("--alpha", ov.alphas, "risk levels (overrides config)");
    cmd->add_option("--method", ov.methods,
                    "methods: fixed, nested, precommitted (overrides config)");
    cmd->add_option("--rollouts", ov.n_rollouts, "number of rollouts");
    cmd->add_flag("--dump-solution", ov.dump_solutions,
                  "also write solver solution JSON files");
    auto* seed = cmd->add_option("--seed", ov.seed, "rollout base seed");
    seed->each([&ov](const std::string&) { ov.seed_set = true; });
}

cvarseq::ExperimentConfig resolve(const Overrides& ov, const std::string& experiment) {
    cvarseq::ExperimentConfig cfg;
    if (!ov.config_path.empty())
        cfg = cvarseq::ExperimentConfig::from_json_file(ov.config_path);
    cfg.experiment = experiment;
    if (!ov.out_dir.empty()) cfg.out_dir = ov.out_dir;
    if (!ov.alphas.empty()) cfg.alphas = ov.alphas;
    if (!ov.methods.empty()) cfg.methods = ov.methods;
    if (ov.n_rollouts > 0) cfg.n_rollouts = ov.n_rollouts;
    if (ov.seed_set) {
        cfg.seed = ov.seed;
        cfg.seed_set = true;
    }
    if (ov.dump_solutions) cfg.dump_solutions = true;
    for (double a : cfg.alphas)
        if (!(a > 0.0) || a > 1.0)
            throw std::invalid_argument("alpha values must lie in (0, 1]");
    return cfg;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Sequential CVaR engine: nested, fixed and precommitted "
                 "conditional value-at-risk on finite-horizon tabular MDPs"};
    app.require_subcommand(1);

    Overrides ov;
    std::string dump_method = "nested";
    std::string dump_experiment = "risk-discounting";
    double dump_alpha = 0.11;
    std::string dump_out = "solution.json";

    auto* nav = app.add_subcommand("navigation",
                                   "gridworld navigation experiment (value "
                                   "tables, action frequencies, alpha traces)");
    add_common(nav, ov);
    auto* chain = app.add_subcommand("chain-stages",
                                     "reward-chain horizon sweep");
    add_common(chain, ov);
    auto* disc = app.add_subcommand("risk-discounting",
                                    "hazard-chain risk-as-discounting experiment");
    add_common(disc, ov);
    auto* verify = app.add_subcommand("verify",
                                      "run the brute-force oracle and invariant "
                                      "suite; nonzero exit on any failure");
    add_common(verify, ov);
    auto* dump = app.add_subcommand("dump-solution", "solve one instance and "
                                                     "write the solution JSON");
    dump->add_option("--config", ov.config_path, "experiment config JSON file");
    dump->add_option("--experiment", dump_experiment,
                     "navigation | chain-stages | risk-discounting");
    dump->add_option("--method", dump_method, "fixed | nested | precommitted");
    dump->add_option("--alpha", dump_alpha, "risk level");
    dump->add_option("--out", dump_out, "output file");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) ? 2 : 0;
    }

    try {
        if (nav->parsed()) return cvarseq::run_navigation(resolve(ov, "navigation"));
        if (chain->parsed())
            return cvarseq::run_chain_stages(resolve(ov, "chain-stages"));
        if (disc->parsed())
            return cvarseq::run_risk_discounting(resolve(ov, "risk-discounting"));
        if (verify->parsed()) {
            const int failed = cvarseq::run_verify(resolve(ov, "verify"));
            if (failed > 0) {
                std::fprintf(stderr, "verify: %d check(s) failed\n", failed);
                return 1;
            }
            return 0;
        }
        if (dump->parsed()) {
            cvarseq::ExperimentConfig cfg = resolve(ov, dump_experiment);
            cvarseq::write_file_atomic(
                dump_out, cvarseq::dump_solution(cfg, dump_method, dump_alpha));
            return 0;
        }
    } catch (const std::invalid_argument& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return 2;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 2;
}
