import numpy as np
import pytest

from zpinch import GridSpec, UniformCurrentProfile, build_equilibrium
from zpinch.dynamics import (CondensedSystem, evolve_mode, fit_growth_rate, integrate_back, project)
from zpinch.energy import random_field
from zpinch.errors import InsufficientGrowth, StabilityViolation
from zpinch.spectrum import assemble_operators, dense_smallest, solve_mode


@pytest.fixture(scope="module")
def eq():
    return build_equilibrium(UniformCurrentProfile(2.0), GridSpec(64))


@pytest.fixture(scope="module")
def sausage(eq):
    return solve_mode(eq, (0, 2), GridSpec(32), residuals=False)


def test_zero_initial_stays_zero(eq, sausage):
    traj = evolve_mode(eq, (0, 2), np.zeros(sausage.operators.size), 1.0, ops=sausage.operators)
    assert not np.any(traj.states) and not np.any(traj.kinetic)


def test_eigenmode_grows_like_cosh(eq, sausage):
    mu = sausage.mu
    traj = evolve_mode(eq, (0, 2), sausage, 5.0 / mu)
    ratio = traj.amplitude / (traj.amplitude[0] * np.cosh(mu * traj.times))
    assert np.max(np.abs(ratio - 1.0)) < 1e-4
    assert traj.ledger_drift() < 1e-6
    fit = fit_growth_rate(traj)
    assert fit.mu == pytest.approx(mu, rel=1e-2)
    assert fit.interval[0] <= fit.mu <= fit.interval[1]
    assert fit.window[0] >= 0.6 * traj.times[-1] * (1 - 1e-12)


def test_random_initial_data_selects_fastest_mode(eq):
    ops = assemble_operators(eq, (1, 2), 32)
    fastest = np.sqrt(-dense_smallest(ops.K, ops.M)[0][0])
    initial = random_field(eq, (1, 2), np.random.default_rng(3))
    traj = evolve_mode(eq, (1, 2), initial, 8.0 / fastest, ops=ops)
    assert fit_growth_rate(traj).mu == pytest.approx(fastest, rel=1e-2)


def test_stable_spectrum_gives_no_growth(eq):
    ops = assemble_operators(eq, (3, 1), 32)
    x = project(ops, np.random.default_rng(5).standard_normal(ops.size))
    traj = evolve_mode(eq, (3, 1), x, 3.0, ops=ops)
    with pytest.raises(InsufficientGrowth):
        fit_growth_rate(traj)


def test_time_reversal_recovers_initial_state(eq, sausage):
    traj = evolve_mode(eq, (0, 2), sausage, 3.0 / sausage.mu)
    back = integrate_back(traj)
    a0 = traj.states[0]
    assert np.linalg.norm(back - a0) <= 1e-8 * np.linalg.norm(a0)


def test_collocated_energy_drift_is_second_order(eq, sausage):
    system = CondensedSystem(sausage.operators)
    base = 0.4 * 2.0 / np.sqrt(system.largest_frequency_squared())
    drifts = [evolve_mode(eq, (0, 2), sausage, 2.0 / sausage.mu, dt=base / 2**j).collocated_drift()
              for j in range(3)]
    ratios = np.array(drifts[:-1]) / np.array(drifts[1:])
    assert np.all((ratios > 3.0) & (ratios < 5.0))


def test_time_step_above_limit_is_rejected(eq, sausage):
    system = CondensedSystem(sausage.operators)
    limit = 2.0 / np.sqrt(system.largest_frequency_squared())
    with pytest.raises(StabilityViolation):
        evolve_mode(eq, (0, 2), sausage, 1.0, dt=1.5 * limit)


def test_projection_of_trial_field(eq, sausage):
    ops = sausage.operators
    back = project(ops, sausage.minimizer)
    # nodal xi is reproduced exactly, element eta up to its midpoint sample
    assert np.allclose(back, sausage.coefficients, rtol=0, atol=1e-12)
    with pytest.raises(ValueError):
        project(ops, np.zeros(3))


def test_ledger_rows(eq, sausage):
    traj = evolve_mode(eq, (0, 2), sausage, 1.0, samples=50)
    rows = traj.rows()
    assert set(rows[0]) == {"t", "kinetic", "potential", "total", "log_norm"}
    assert rows[0]["t"] == 0.0 and len(rows) >= 50
    assert traj.field(-1).xi(np.array([1.0]))[0] != 0.0
