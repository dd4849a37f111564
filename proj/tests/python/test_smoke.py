import math

import pytest

import cvarseq as cq


def test_cvar_primitive():
    d = cq.DiscreteDistribution([(-1.0, 0.1), (1.0, 0.9)])
    assert cq.cvar_tail(d, 0.11) == pytest.approx(-0.09 / 0.11, abs=1e-12)
    assert cq.cvar_tail(d, 1.0) == pytest.approx(d.mean(), abs=1e-12)
    assert cq.cvar_tail(d, 0.3) == pytest.approx(cq.cvar_sup(d, 0.3), abs=1e-12)
    assert len(cq.convolve_iid(d, 3)) == 4


def test_hazard_chain_solvers():
    cfg = cq.HazardChainConfig()
    mdp = cq.make_hazard_chain(cfg)
    assert cq.validate(mdp) == []

    nsol = cq.solve_ncvar(mdp, 0.1)
    assert nsol.values[2][1] == pytest.approx(0.5, abs=1e-9)
    assert nsol.values[1][2] == pytest.approx(0.25, abs=1e-9)
    assert cq.implied_gamma(0.1, cfg.hazard) == pytest.approx(0.5)

    fsol = cq.solve_fcvar(mdp, 0.11)
    assert fsol.cvar_values[2][1] == pytest.approx(
        max(0.0, 1.0 - (1.0 - 0.95) / 0.11), abs=1e-9)

    grid = cq.make_alpha_grid(33, 0.01, [0.3])
    psol = cq.solve_pcvar(mdp, grid)
    assert psol.values[0][3][psol.grid_index(1.0)] == pytest.approx(
        0.95 ** 3, abs=1e-9)
    seq = cq.pcvar_alpha_sequence(0.3, cfg.hazard, 3)
    assert seq[1] == pytest.approx(0.2632, abs=1e-3)


def test_gridworld_and_determinism():
    cfg = cq.GridworldConfig()
    cfg.width = 5
    cfg.height = 3
    cfg.goal = (4, 0)
    cfg.lava = {(1, 0), (2, 0), (3, 0)}
    cfg.slip = 0.05
    cfg.horizon = 10
    mdp = cq.make_gridworld(cfg)
    assert cq.validate(mdp) == []

    sol = cq.solve_expected(mdp)
    assert sol.values[0][mdp.initial_state] > 0.0

    a = cq.simulate(mdp, sol.policy, 42)
    b = cq.simulate(mdp, sol.policy, 42)
    assert a.to_csv() == b.to_csv()
    assert a.discounted_return == b.discounted_return

    d = cq.return_distribution_exact(mdp, sol.policy, mdp.initial_state, 0)
    assert d.mean() == pytest.approx(sol.values[0][mdp.initial_state], abs=1e-10)


def test_invalid_inputs_raise():
    with pytest.raises(Exception):
        cq.DiscreteDistribution([(0.0, 0.5)])
    d = cq.DiscreteDistribution([(0.0, 1.0)])
    with pytest.raises(Exception):
        cq.cvar_tail(d, 0.0)
