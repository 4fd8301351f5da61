"""Acceptance checks at their stated tolerances; see the terminal summary for one line each."""

import time

import numpy as np
import pytest

from conftest import admissible_profiles
from zpinch import (CurrentProfile, ExponentialProfile, GridSpec, PowerLawProfile,
                    UniformCurrentProfile, build_equilibrium, interchange_criterion_scan,
                    taylor_axis_coefficients)
from zpinch.dynamics import evolve_mode, fit_growth_rate
from zpinch.energy import assemble_energy, polarization, random_field
from zpinch.equilibrium import force_balance_residual, interchange_expression
from zpinch.scaling import expected_exponents, fit_scaling_exponent
from zpinch.spectrum import (assemble_operators, count_below, dense_smallest, euler_vacuum_solution,
                             smallest_eigenpair, solve_mode, sweep_modes, vacuum_response)

from test_spectrum import _vacuum_ode_oracle

FIELD_PROFILES = ["uniform", "power2", "exponential", "falling_current"]


@pytest.mark.criterion(1, "equilibrium fidelity")
def test_equilibrium_fidelity():
    start = time.perf_counter()
    eq = build_equilibrium(UniformCurrentProfile(2.0), GridSpec(512))
    elapsed = time.perf_counter() - start
    assert np.max(np.abs(eq.B - eq.grid)) <= 1e-10
    assert np.max(np.abs(eq.p - (1.0 - eq.grid**2))) <= 1e-10
    assert elapsed < 1.0
    for name, prof in admissible_profiles().items():
        eq = build_equilibrium(prof, GridSpec(512))
        assert np.max(np.abs(force_balance_residual(eq))) <= 1e-8, name


@pytest.mark.criterion(2, "axis expansion")
@pytest.mark.parametrize("coefficients", [[2.0], [2.0, -1.0], [3.0, 0.5], [1.0, -0.4, 0.1]])
def test_axis_expansion(coefficients):
    prof = CurrentProfile.polynomial(coefficients)
    J0, J1 = coefficients[0], coefficients[1] if len(coefficients) > 1 else 0.0
    eq = build_equilibrium(prof, GridSpec(2048))
    (b1, b2), (q1, q2) = taylor_axis_coefficients(eq)
    assert b1 == pytest.approx(J0 / 2.0, abs=1e-4)
    assert b2 == pytest.approx(J1 / 3.0, abs=1e-4)
    assert q1 == pytest.approx(-J0**2 / 2.0, abs=1e-4)
    assert q2 == pytest.approx(-5.0 / 6.0 * J1 * J0, abs=1e-4)


@pytest.fixture(scope="module")
def converged_sausage():
    """Sausage eigenvalues of four profiles, refined from 512 to 4096 cells."""
    start = time.perf_counter()
    out = {}
    for name in FIELD_PROFILES:
        eq = build_equilibrium(admissible_profiles()[name], GridSpec(512))
        for k in (1, 2, 4, 8):
            out[name, k] = solve_mode(eq, (0, k), GridSpec(512), refinements=3, residuals=False)
    return out, time.perf_counter() - start


@pytest.mark.criterion(3, "unconditional sausage instability")
def test_sausage_instability_on_converged_grids(converged_sausage):
    results, elapsed = converged_sausage
    assert len({name for name, _ in results}) >= 4
    for key, res in results.items():
        (_, previous), (n, lam) = res.diagnostics["history"][-2:]
        assert lam < 0.0, key
        assert abs(lam - previous) < 1e-6 * abs(lam), key
    assert elapsed < 60.0


@pytest.mark.criterion(4, "interchange dichotomy")
def test_interchange_dichotomy():
    eq = build_equilibrium(UniformCurrentProfile(2.0), GridSpec(512))
    r = eq.grid[eq.interior]
    for m in (1, -1, 2, -2, 3, 4, -5):
        values = interchange_expression(eq.at(r), m)
        assert np.allclose(values, r * (m * m - 4), rtol=0, atol=1e-12)
        if abs(m) == 1:
            assert np.all(values < 0.0)
            assert interchange_criterion_scan(eq, m).verdict == "unstable-witness-found"
        elif abs(m) == 2:
            assert np.max(np.abs(values)) <= 1e-12
        else:
            assert np.all(values > 0.0)
    for k in (1, 2, 4):
        assert solve_mode(eq, (1, k), GridSpec(512), residuals=False).lam < 0.0
        assert count_below(assemble_operators(eq, (3, k), 512), -1e-8) == 0


@pytest.mark.criterion(5, "Euler-Lagrange consistency")
@pytest.mark.parametrize("name", FIELD_PROFILES)
def test_euler_lagrange_consistency(name, converged_sausage):
    eq = build_equilibrium(admissible_profiles()[name], GridSpec(512))
    for k in (1, 8):
        results = [solve_mode(eq, (0, k), GridSpec(n)) for n in (1024, 2048, 4096)]
        # the finest solve is the converged minimizer of criterion 3
        assert results[-1].lam == pytest.approx(converged_sausage[0][name, k].lam, rel=1e-8)
        el = [res.el_residual for res in results]
        assert el[0] / el[1] >= 3.0 and el[1] / el[2] >= 3.0, el
        assert results[-1].bc_residual <= 1e-6


@pytest.mark.criterion(6, "vacuum oracles")
@pytest.mark.parametrize("m", [1, 2, 3])
def test_vacuum_oracles(m):
    eq = build_equilibrium(UniformCurrentProfile(2.0), GridSpec(64))
    _, euler = euler_vacuum_solution(m, eq.r0, eq.rw)
    assert abs(vacuum_response(eq, (m, 0)).unit_energy - euler) <= 1e-8 * abs(euler)
    for k in (1, 2):
        _, refined = _vacuum_ode_oracle(m, k, eq.r0, eq.rw)
        assert abs(vacuum_response(eq, (m, k)).unit_energy - refined) <= 1e-6 * abs(refined)


@pytest.mark.criterion(7, "dynamics cross-check")
@pytest.mark.parametrize("mode", [(0, 2), (0, 4), (1, 2)])
def test_dynamics_cross_check(mode):
    eq = build_equilibrium(UniformCurrentProfile(2.0), GridSpec(64))
    res = solve_mode(eq, mode, GridSpec(32), residuals=False)
    assert res.lam < 0.0
    traj = evolve_mode(eq, mode, res, 5.0 / res.mu)
    assert fit_growth_rate(traj).mu == pytest.approx(np.sqrt(-res.lam), rel=0.02)
    assert traj.ledger_drift() <= 1e-6
    growth = np.log(traj.amplitude[-1] / traj.amplitude[0])
    assert growth >= 5.0 - np.log(2.0)  # amplitude follows cosh, so five e-folds less log 2


@pytest.mark.criterion(8, "ill-posedness scaling")
@pytest.mark.parametrize("alpha", [0.5, 0.75])
def test_scaling_exponent(alpha):
    eq = build_equilibrium(PowerLawProfile(1.0, 2.0, gamma=1.5), GridSpec(256))
    start = time.perf_counter()
    study = fit_scaling_exponent(eq, alpha, k_list=[2.0**p for p in range(7, 11)])
    assert time.perf_counter() - start < 300.0
    expected = alpha * 2.0 / 1.5 - alpha * (2.0 - 1.0)
    assert expected == pytest.approx(expected_exponents(2.0, 1.5, alpha)["lambda"], abs=1e-15)
    assert study.window == (2.0**7, 2.0**10)
    assert abs(study.fitted_exponent - expected) <= 0.05, (study.fitted_exponent, expected)


@pytest.mark.criterion(8, "ill-posedness scaling")
def test_growth_rate_saturates_for_stiff_gas():
    eq = build_equilibrium(PowerLawProfile(1.0, 2.0, gamma=3.0), GridSpec(512))
    start = time.perf_counter()
    ks = [2.0**p for p in range(10)]
    table = sweep_modes(eq, [-2, -1, 0, 1, 2], ks, GridSpec(1024), residuals=False)
    assert not table.errors
    mus = {md: res.mu for md, res in table.unstable.items()}
    up_to_256 = max(mu for md, mu in mus.items() if abs(md.k) <= 256)
    up_to_512 = max(mus.values())
    assert abs(up_to_512 - up_to_256) < 0.01 * up_to_256
    assert time.perf_counter() - start < 300.0


@pytest.mark.criterion(9, "form equivalences")
@pytest.mark.parametrize("name", sorted(admissible_profiles()))
def test_form_equivalences(name):
    eq = build_equilibrium(admissible_profiles()[name], GridSpec(256))
    rng = np.random.default_rng(sorted(admissible_profiles()).index(name))
    for _ in range(100):
        mode = (int(rng.integers(-3, 4)), int(rng.choice([1, 2, 5])))
        f = random_field(eq, mode, rng)
        g = random_field(eq, mode, rng)
        br = assemble_energy(eq, mode, f)
        assert abs(br.total - br.alternative) <= 1e-10 * abs(br.total)
        scale = abs(br.fluid) + abs(assemble_energy(eq, mode, g).fluid)
        fg, gf = polarization(eq, mode, f, g), polarization(eq, mode, g, f)
        assert abs(fg - gf) <= 1e-10 * scale


@pytest.mark.criterion(10, "dense-oracle eigensolver equivalence")
def test_dense_oracle_equivalence():
    rng = np.random.default_rng(10)
    names = sorted(admissible_profiles())
    eqs = {name: build_equilibrium(admissible_profiles()[name], GridSpec(256)) for name in names}
    for _ in range(20):
        name = names[int(rng.integers(len(names)))]
        mode = (int(rng.integers(-3, 4)), int(rng.integers(1, 9)))
        n = int(rng.integers(16, 65))
        ops = assemble_operators(eqs[name], mode, n)
        dense = dense_smallest(ops.K, ops.M)[0][0]
        iterative = smallest_eigenpair(ops, force_iterative=True).value
        assert abs(iterative - dense) <= 1e-9 * abs(dense), (name, mode, n)
