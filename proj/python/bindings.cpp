#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "cvarseq/distribution.hpp"
#include "cvarseq/envs.hpp"
#include "cvarseq/mdp.hpp"
#include "cvarseq/oracle.hpp"
#include "cvarseq/solvers.hpp"

namespace py = pybind11;
using namespace cvarseq;

namespace {

DiscreteDistribution dist_from_pairs(const std::vector<std::pair<double, double>>& pairs) {
    std::vector<Atom> atoms;
    for (auto [v, p] : pairs) atoms.push_back({v, p});
    return DiscreteDistribution(std::move(atoms));
}

std::vector<std::pair<double, double>> dist_to_pairs(const DiscreteDistribution& d) {
    std::vector<std::pair<double, double>> out;
    for (const Atom& a : d.atoms()) out.emplace_back(a.value, a.probability);
    return out;
}

} // namespace

PYBIND11_MODULE(_cvarseq, m) {
    m.doc() = "Nested, fixed and precommitted CVaR on finite-horizon tabular MDPs";

    py::class_<DiscreteDistribution>(m, "DiscreteDistribution")
        .def(py::init(&dist_from_pairs), py::arg("atoms"))
        .def_static("delta", &DiscreteDistribution::delta)
        .def("atoms", &dist_to_pairs)
        .def("mean", &DiscreteDistribution::mean)
        .def("min_value", &DiscreteDistribution::min_value)
        .def("max_value", &DiscreteDistribution::max_value)
        .def("to_json", &DiscreteDistribution::to_json)
        .def_static("from_json", &DiscreteDistribution::from_json)
        .def("__len__", &DiscreteDistribution::size)
        .def("__repr__", [](const DiscreteDistribution& d) {
            return "DiscreteDistribution(" + d.to_json() + ")";
        });

    m.def("cvar_tail",
          [](const DiscreteDistribution& d, double a) {
              return cvar_tail(d, RiskLevel(a));
          },
          py::arg("dist"), py::arg("alpha"));
    m.def("cvar_sup",
          [](const DiscreteDistribution& d, double a) {
              return cvar_sup(d, RiskLevel(a));
          },
          py::arg("dist"), py::arg("alpha"));
    m.def("shift_scale", &shift_scale, py::arg("dist"), py::arg("shift"),
          py::arg("scale"));
    m.def("mixture", &mixture, py::arg("components"));
    m.def("convolve_iid", &convolve_iid, py::arg("dist"), py::arg("n"));

    py::class_<Transition>(m, "Transition")
        .def(py::init([](int next, double prob, double reward) {
                 return Transition{next, prob, reward};
             }),
             py::arg("next_state"), py::arg("probability"), py::arg("reward"))
        .def_readwrite("next_state", &Transition::next_state)
        .def_readwrite("probability", &Transition::probability)
        .def_readwrite("reward", &Transition::reward);

    py::class_<FiniteHorizonMDP>(m, "FiniteHorizonMDP")
        .def(py::init<>())
        .def_readwrite("n_states", &FiniteHorizonMDP::n_states)
        .def_readwrite("n_actions", &FiniteHorizonMDP::n_actions)
        .def_readwrite("horizon", &FiniteHorizonMDP::horizon)
        .def_readwrite("gamma", &FiniteHorizonMDP::gamma)
        .def_readwrite("initial_state", &FiniteHorizonMDP::initial_state)
        .def_readwrite("terminal", &FiniteHorizonMDP::terminal)
        .def_readwrite("transitions", &FiniteHorizonMDP::transitions)
        .def("to_json", &FiniteHorizonMDP::to_json)
        .def_static("from_json", &FiniteHorizonMDP::from_json);

    m.def("validate", &validate, py::arg("mdp"));

    py::class_<PolicyTable>(m, "PolicyTable")
        .def(py::init<int, int>(), py::arg("horizon"), py::arg("n_states"))
        .def("set", &PolicyTable::set)
        .def("action", &PolicyTable::action)
        .def("defined", &PolicyTable::defined);

    py::class_<TrajectoryStep>(m, "TrajectoryStep")
        .def_readonly("stage", &TrajectoryStep::stage)
        .def_readonly("state", &TrajectoryStep::state)
        .def_readonly("action", &TrajectoryStep::action)
        .def_readonly("reward", &TrajectoryStep::reward)
        .def_readonly("next_state", &TrajectoryStep::next_state);

    py::class_<Trajectory>(m, "Trajectory")
        .def_readonly("steps", &Trajectory::steps)
        .def_readonly("discounted_return", &Trajectory::discounted_return)
        .def_readonly("alpha_trace", &Trajectory::alpha_trace)
        .def("to_csv", &Trajectory::to_csv);

    m.def("simulate", &simulate, py::arg("mdp"), py::arg("policy"), py::arg("seed"));
    m.def("visit_frequencies", &visit_frequencies, py::arg("mdp"), py::arg("policy"),
          py::arg("n_rollouts"), py::arg("seed"));
    m.def("return_distribution_exact", &return_distribution_exact, py::arg("mdp"),
          py::arg("policy"), py::arg("from_state"), py::arg("from_stage") = 0,
          py::arg("max_atoms") = 1000000);

    py::class_<ExpectedSolution>(m, "ExpectedSolution")
        .def_readonly("values", &ExpectedSolution::values)
        .def_readonly("policy", &ExpectedSolution::policy);
    m.def("solve_expected", &solve_expected, py::arg("mdp"));

    py::class_<NCvarSolution>(m, "NCvarSolution")
        .def_readonly("alpha", &NCvarSolution::alpha)
        .def_readonly("values", &NCvarSolution::values)
        .def_readonly("policy", &NCvarSolution::policy)
        .def("to_json", &NCvarSolution::to_json);
    m.def("solve_ncvar",
          [](const FiniteHorizonMDP& mdp, double a) {
              return solve_ncvar(mdp, RiskLevel(a));
          },
          py::arg("mdp"), py::arg("alpha"));

    py::class_<FCvarSolution>(m, "FCvarSolution")
        .def_readonly("alpha", &FCvarSolution::alpha)
        .def_readonly("return_dists", &FCvarSolution::return_dists)
        .def_readonly("cvar_values", &FCvarSolution::cvar_values)
        .def_readonly("policy", &FCvarSolution::policy)
        .def("to_json", &FCvarSolution::to_json);
    m.def("solve_fcvar",
          [](const FiniteHorizonMDP& mdp, double a) {
              return solve_fcvar(mdp, RiskLevel(a));
          },
          py::arg("mdp"), py::arg("alpha"));

    py::class_<PCvarSolution>(m, "PCvarSolution")
        .def_readonly("alpha_grid", &PCvarSolution::alpha_grid)
        .def_readonly("values", &PCvarSolution::values)
        .def_readonly("policy", &PCvarSolution::policy)
        .def_readonly("xi", &PCvarSolution::xi)
        .def("grid_index", &PCvarSolution::grid_index, py::arg("alpha"),
             py::arg("tol") = 1e-12)
        .def("to_json", &PCvarSolution::to_json);
    m.def("make_alpha_grid", &make_alpha_grid, py::arg("n_points") = 33,
          py::arg("alpha_min") = 0.01,
          py::arg("insert") = std::vector<double>{});
    m.def("solve_pcvar", &solve_pcvar, py::arg("mdp"), py::arg("alpha_grid"));
    m.def("pcvar_rollout", &pcvar_rollout, py::arg("mdp"), py::arg("solution"),
          py::arg("alpha0"), py::arg("seed"));

    py::enum_<CvarMethod>(m, "CvarMethod")
        .value("nested", CvarMethod::Nested)
        .value("fixed", CvarMethod::Fixed)
        .value("precommitted", CvarMethod::Precommitted);

    py::class_<Divergence>(m, "Divergence")
        .def_readonly("stage", &Divergence::stage)
        .def_readonly("state", &Divergence::state)
        .def_readonly("planned", &Divergence::planned)
        .def_readonly("replanned", &Divergence::replanned)
        .def_readonly("gap", &Divergence::gap);
    py::class_<ConsistencyReport>(m, "ConsistencyReport")
        .def_readonly("divergences", &ConsistencyReport::divergences)
        .def_readonly("states_checked", &ConsistencyReport::states_checked);
    m.def("consistency_probe", &consistency_probe, py::arg("mdp"), py::arg("method"),
          py::arg("alpha"), py::arg("n_seeds"), py::arg("seed"),
          py::arg("tol") = 1e-9);

    py::class_<GridworldConfig>(m, "GridworldConfig")
        .def(py::init<>())
        .def_readwrite("width", &GridworldConfig::width)
        .def_readwrite("height", &GridworldConfig::height)
        .def_readwrite("start", &GridworldConfig::start)
        .def_readwrite("goal", &GridworldConfig::goal)
        .def_readwrite("lava", &GridworldConfig::lava)
        .def_readwrite("slip", &GridworldConfig::slip)
        .def_readwrite("gamma", &GridworldConfig::gamma)
        .def_readwrite("horizon", &GridworldConfig::horizon);
    py::class_<HazardChainConfig>(m, "HazardChainConfig")
        .def(py::init<>())
        .def_readwrite("n_states", &HazardChainConfig::n_states)
        .def_readwrite("hazard", &HazardChainConfig::hazard)
        .def_readwrite("terminal_reward", &HazardChainConfig::terminal_reward);
    py::class_<RewardChainConfig>(m, "RewardChainConfig")
        .def(py::init<>())
        .def_readwrite("n_states", &RewardChainConfig::n_states)
        .def_readwrite("loss_value", &RewardChainConfig::loss_value)
        .def_readwrite("gain_value", &RewardChainConfig::gain_value)
        .def_readwrite("loss_probability", &RewardChainConfig::loss_probability);

    m.def("make_gridworld", &make_gridworld);
    m.def("make_hazard_chain", &make_hazard_chain);
    m.def("make_reward_chain", &make_reward_chain);
    m.def("implied_gamma", &implied_gamma, py::arg("alpha"), py::arg("hazard"));
    m.def("pcvar_alpha_sequence", &pcvar_alpha_sequence, py::arg("alpha0"),
          py::arg("hazard"), py::arg("n_steps"));

    py::class_<EnumerationBudget>(m, "EnumerationBudget")
        .def(py::init<>())
        .def_readwrite("max_trajectories", &EnumerationBudget::max_trajectories)
        .def_readwrite("max_depth", &EnumerationBudget::max_depth);
    m.def("enumerate_returns", &enumerate_returns, py::arg("mdp"), py::arg("policy"),
          py::arg("from_state"), py::arg("from_stage") = 0,
          py::arg("budget") = EnumerationBudget{});
    m.def("ncvar_reference",
          [](const FiniteHorizonMDP& mdp, double a, int from_state, int from_stage,
             int max_depth) {
              return ncvar_reference(mdp, RiskLevel(a), from_state, from_stage,
                                     max_depth);
          },
          py::arg("mdp"), py::arg("alpha"), py::arg("from_state"),
          py::arg("from_stage") = 0, py::arg("max_depth") = 8);
    m.def("pcvar_policy_check", &pcvar_policy_check, py::arg("mdp"),
          py::arg("solution"), py::arg("alpha0"),
          py::arg("budget") = EnumerationBudget{});
}
