#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "cvarseq/envs.hpp"

namespace cvarseq {

inline constexpr const char* kEngineVersion = "0.1.0";

// Declarative description of one experiment run. Loaded from JSON; CLI flags
// override individual fields.
struct ExperimentConfig {
    std::string experiment; // navigation | chain-stages | risk-discounting | verify
    std::vector<double> alphas = {0.02, 0.11, 0.5};
    std::vector<std::string> methods = {"fixed", "nested", "precommitted"};
    int n_rollouts = 2000;
    std::uint64_t seed = 0;
    bool seed_set = false;
    std::string out_dir = "out";
    bool dump_solutions = false;

    // Navigation default: a low grid whose only crossing row is the top row,
    // with lava bumps beneath it. The bumps split the route's tail risk into
    // several small local gambles; at alpha = 0.11 the nested policy accepts
    // each gamble against its local continuation value and crosses along the
    // top, while the fixed policy pools the combined tail mass once at the
    // start and judges the trip not worth taking.
    GridworldConfig gridworld{.width = 10,
                              .height = 3,
                              .start = {0, 0},
                              .goal = {9, 0},
                              .lava = {{2, 0}, {3, 0}, {4, 0}, {5, 0}, {6, 0},
                                       {7, 0}, {8, 0}, {3, 1}, {5, 1}, {7, 1}},
                              .slip = 0.0118,
                              .gamma = 0.95,
                              .horizon = 40};
    HazardChainConfig hazard_chain;
    RewardChainConfig reward_chain;
    int chain_max_distance = 4;

    static ExperimentConfig from_json_file(const std::string& path);
    static ExperimentConfig from_json(const std::string& text);
    std::string to_json() const;
};

// Atomic file write: write to <path>.tmp, then rename.
void write_file_atomic(const std::string& path, const std::string& content);

// Each runner writes its CSV/JSON outputs plus a manifest echoing the fully
// resolved config and engine version. Returns 0 on success.
int run_navigation(const ExperimentConfig& config);
int run_chain_stages(const ExperimentConfig& config);
int run_risk_discounting(const ExperimentConfig& config);

// Runs the oracle and invariant suite; writes verify_report.json; returns
// the number of failed checks.
int run_verify(const ExperimentConfig& config);

// Solves the configured environment with one method/alpha and returns the
// solution as JSON (the CLI dump-solution path).
std::string dump_solution(const ExperimentConfig& config, const std::string& method,
                          double alpha);

} // namespace cvarseq
