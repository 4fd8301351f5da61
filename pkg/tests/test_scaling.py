import json

import numpy as np
import pytest

from zpinch import GridSpec, PowerLawProfile, UniformCurrentProfile, build_equilibrium
from zpinch.errors import SignFlip, SupportOverflow
from zpinch.scaling import (BumpFunction, FamilyMember, build_test_family, energy_of_member,
                            evaluate_member, expected_exponents, fit_scaling_exponent)
from zpinch.spectrum import solve_mode

# the family only reaches its power law once the support is far below the
# profile's curvature scale; these windows sit in that regime
ASYMPTOTIC_K = [2.0**p for p in range(16, 25)]
WIDE_ASYMPTOTIC_K = [2.0**p for p in range(18, 25)]


def _eq(beta, gamma, n=128):
    return build_equilibrium(PowerLawProfile(1.0, beta, gamma=gamma), GridSpec(n))


def test_bump_function_values_and_derivative():
    w = BumpFunction()
    s = np.linspace(-1.2, 0.2, 141)
    vals = w(s)
    assert np.all(vals[(s <= -1) | (s >= 0)] == 0.0)
    assert w(-0.5) == pytest.approx(np.exp(-1.0))
    h = 1e-6
    inside = np.linspace(-0.95, -0.05, 19)
    fd = (w(inside + h) - w(inside - h)) / (2 * h)
    assert np.allclose(w.derivative(inside), fd, rtol=1e-7, atol=1e-10)


def test_zero_bump_gives_zero_field():
    eq = _eq(2.0, 1.5)
    member = evaluate_member(eq, 0.5, BumpFunction(amplitude=0.0), 64.0)
    assert member.J_value == 0.0 and member.E_value == 0.0 and member.compressional == 0.0
    field = build_test_family(eq, 0.5, BumpFunction(amplitude=0.0), 64.0)
    r = np.linspace(0.8, 1.0, 11)
    assert not np.any(field.xi(r)) and not np.any(field.eta(r))


@pytest.mark.parametrize("alpha,k", [(0.5, 16.0), (0.75, 256.0), (0.3, 1024.0)])
def test_compressional_term_vanishes_and_energy_matches_module(alpha, k):
    eq = _eq(2.0, 1.5)
    member = evaluate_member(eq, alpha, BumpFunction(), k)
    assert member.compressional <= 1e-12 * abs(member.E_value)
    # second route: full axisymmetric energy assembled by the energy module
    br = energy_of_member(eq, alpha, BumpFunction(), k)
    assert br.total == pytest.approx(member.E_value, rel=1e-10)
    assert br.constraint == pytest.approx(member.J_value, rel=1e-10)


def test_support_overflow():
    eq = _eq(2.0, 1.5)
    with pytest.raises(SupportOverflow):
        build_test_family(eq, 0.5, BumpFunction(), 1.0)
    with pytest.raises(ValueError):
        build_test_family(eq, 1.2, BumpFunction(), 64.0)


@pytest.mark.parametrize("alpha", [0.5, 0.75])
def test_constraint_and_energy_exponents(alpha):
    study = fit_scaling_exponent(_eq(2.0, 1.5), alpha, k_list=ASYMPTOTIC_K)
    exp = expected_exponents(2.0, 1.5, alpha)
    assert study.fit("J") == pytest.approx(exp["J"], rel=0.05)
    assert study.fit("E") == pytest.approx(exp["E"], rel=0.05)
    assert study.fitted_exponent == pytest.approx(exp["lambda"], abs=0.03)
    assert study.verdict == "divergent"


@pytest.mark.parametrize("gamma", [1.2, 1.5, 2.0, 3.0, 5.0])
def test_linear_vanishing_always_diverges(gamma):
    study = fit_scaling_exponent(_eq(1.0, gamma), 0.5, k_list=ASYMPTOTIC_K)
    assert study.fitted_exponent == pytest.approx(0.5 / gamma, abs=0.01)
    assert study.verdict == "divergent"


@pytest.mark.parametrize("beta", [1.0, 1.5, 2.0, 3.0])
@pytest.mark.parametrize("gamma", [1.2, 1.5, 2.0, 3.0, 5.0])
@pytest.mark.parametrize("alpha", [0.5, 0.75])
def test_divergence_dichotomy(beta, gamma, alpha):
    study = fit_scaling_exponent(_eq(beta, gamma, 64), alpha, k_list=WIDE_ASYMPTOTIC_K)
    predicted = alpha * beta / gamma - alpha * (beta - 1.0)
    if abs(predicted) < 1e-12:
        # marginal cells: beta / (beta - 1) == gamma
        assert abs(study.fitted_exponent) < 0.05
    else:
        assert np.sign(study.fitted_exponent) == np.sign(predicted)
        assert study.fitted_exponent == pytest.approx(predicted, abs=0.01)
    assert (study.verdict == "divergent") == (predicted > 0.05)


def test_bounded_case_reports_no_divergence():
    study = fit_scaling_exponent(_eq(2.0, 3.0), 0.5, k_list=ASYMPTOTIC_K)
    assert study.verdict == "bounded" and study.fitted_exponent < 0


def test_upper_bound_property():
    eq = build_equilibrium(PowerLawProfile(1.0, 2.0, gamma=1.5), GridSpec(512))
    study = fit_scaling_exponent(eq, 0.5, k_list=[16.0, 32.0, 64.0])
    for member in study.members:
        lam = solve_mode(eq, (0, int(member.k)), GridSpec(512), residuals=False).lam
        assert member.lambda_upper >= lam


def test_sign_flip_detected(monkeypatch):
    import zpinch.scaling as scaling

    monkeypatch.setattr(scaling, "evaluate_member", lambda eq, a, w, k, panels=64: FamilyMember(k, 1.0, 1.0, 0.0))
    with pytest.raises(SignFlip):
        fit_scaling_exponent(_eq(2.0, 1.5, 32), 0.5)


def test_export_fields_and_threads():
    eq = _eq(2.0, 1.5)
    one = fit_scaling_exponent(eq, 0.5)
    many = fit_scaling_exponent(eq, 0.5, threads=4)
    assert np.array_equal(one.lambda_upper, many.lambda_upper)
    assert list(one.k_list) == [16.0, 32.0, 64.0, 128.0, 256.0, 512.0, 1024.0]
    assert one.window == (128.0, 1024.0)
    row = one.rows()[0]
    assert set(row) == {"k", "J_value", "E_value", "lambda_upper"}
    summary = json.loads(json.dumps(one.summary()))
    assert summary["verdict"] in ("divergent", "bounded")
    assert set(summary["fitted_exponents"]) == {"J", "E", "lambda"}
    with pytest.raises(ValueError):
        fit_scaling_exponent(eq, 0.5, k_list=[64.0, 32.0])


def test_uniform_current_profile_carries_beta_one():
    eq = build_equilibrium(UniformCurrentProfile(2.0), GridSpec(64))
    study = fit_scaling_exponent(eq, 0.5, k_list=ASYMPTOTIC_K)
    assert study.expected["lambda"] == pytest.approx(0.5 / eq.gamma)
