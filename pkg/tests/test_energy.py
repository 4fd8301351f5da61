import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from zpinch import GridSpec, PowerLawProfile, UniformCurrentProfile, build_equilibrium
from zpinch.energy import (TWO_PI_SQ, ModeIndex, TrialField, assemble_E0k, assemble_Emk, assemble_J,
                           assemble_energy, coercivity_terms, eliminate_axisymmetric,
                           eliminate_helical, polarization, random_field, reduced_energy_m0,
                           split_function, squared_terms_m, weighted_edge_estimate, weighted_norms)
from zpinch.errors import ConstraintViolation, QuadratureBlowup
from zpinch.quadrature import graded_panels


def _rel(a, b):
    return abs(a - b) / max(abs(a), abs(b), 1e-300)


def test_zero_field_energies(uniform_eq):
    for mode in (ModeIndex(0, 3), ModeIndex(2, 1)):
        br = assemble_energy(uniform_eq, mode, TrialField.zero(uniform_eq, mode))
        assert (br.fluid, br.surface, br.vacuum, br.total, br.constraint) == (0.0, 0.0, 0.0, 0.0, 0.0)


def test_constraint_closed_form(uniform_gamma2_eq):
    eq = uniform_gamma2_eq
    # panels graded toward r0 resolve the square-root edge of rho
    one = TrialField.from_functions(lambda r: np.ones_like(r), lambda r: np.zeros_like(r),
                                    plasma_edges=graded_panels(0.0, 1.0, 64, grading=4.0))
    assert assemble_J(eq, one) == pytest.approx(TWO_PI_SQ / 3.0, rel=1e-10)


def test_constraint_oracle_by_independent_quadrature(power_eq, rng):
    from scipy.integrate import quad
    field = random_field(power_eq, ModeIndex(0, 2), rng)

    def integrand(r):
        f = power_eq.at(np.array([r]))
        xi, _, eta, _ = field.plasma_values(np.array([r]))
        return float(f.rho[0] * (xi[0] ** 2 + eta[0] ** 2) * r)

    ref = TWO_PI_SQ * quad(integrand, 0.0, 1.0, limit=400, epsabs=1e-14, epsrel=1e-13)[0]
    assert _rel(assemble_J(power_eq, field), ref) < 1e-9


@pytest.mark.parametrize("mode", [(0, 1), (0, 5), (1, 1), (2, 3), (-3, 2)])
def test_two_forms_agree_and_surface_vanishes(power_eq, rng, mode):
    for _ in range(20):
        field = random_field(power_eq, mode, rng)
        br = assemble_energy(power_eq, mode, field)
        assert _rel(br.total, br.alternative) < 1e-10
        assert abs(br.surface) < 1e-12 * max(1.0, abs(br.fluid))
        assert br.vacuum >= 0.0
        if mode[0] == 0:
            assert br.vacuum == 0.0


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), alpha=st.floats(-50, 50), m=st.integers(-3, 3),
       k=st.integers(-6, 6))
def test_homogeneity(power_eq, seed, alpha, m, k):
    field = random_field(power_eq, (m, k), np.random.default_rng(seed))
    base = assemble_energy(power_eq, (m, k), field)
    scaled = assemble_energy(power_eq, (m, k), alpha * field)
    tol = 1e-10 * alpha**2 * (abs(base.fluid) + abs(base.vacuum) + base.constraint) + 1e-300
    assert abs(scaled.total - alpha**2 * base.total) <= tol
    assert abs(scaled.constraint - alpha**2 * base.constraint) <= tol


@pytest.mark.parametrize("mode", [(0, 2), (1, 2), (2, -1)])
def test_polarization_is_symmetric(power_eq, rng, mode):
    for _ in range(10):
        f = random_field(power_eq, mode, rng)
        g = random_field(power_eq, mode, rng)
        a, b = polarization(power_eq, mode, f, g), polarization(power_eq, mode, g, f)
        scale = abs(assemble_energy(power_eq, mode, f).fluid) + abs(assemble_energy(power_eq, mode, g).fluid)
        assert abs(a - b) <= 1e-10 * scale
        # polarization of a field with itself is the energy
        assert _rel(polarization(power_eq, mode, f, f), assemble_energy(power_eq, mode, f).total) < 1e-10


def _bump_field(eq):
    def xi(r):
        return np.where((r > 0.2) & (r < 0.8), np.sin(np.pi * (r - 0.2) / 0.6) ** 3, 0.0)

    def dxi(r):
        s = np.pi * (r - 0.2) / 0.6
        return np.where((r > 0.2) & (r < 0.8), 3 * np.sin(s) ** 2 * np.cos(s) * np.pi / 0.6, 0.0)

    return TrialField.from_functions(xi, dxi, plasma_edges=np.union1d(eq.grid, [0.2, 0.8]))


def test_compressional_elimination_gives_reduced_energy(power_eq):
    field = eliminate_axisymmetric(power_eq, 3, _bump_field(power_eq))
    br = assemble_E0k(power_eq, ModeIndex(0, 3), field)
    assert _rel(br.total, reduced_energy_m0(power_eq, field)) < 1e-12


def test_helical_elimination_zeroes_first_squares(power_eq):
    field = eliminate_helical(power_eq, ModeIndex(2, 3), _bump_field(power_eq))
    first, second = squared_terms_m(power_eq, ModeIndex(2, 3), field)
    scale = abs(assemble_J(power_eq, field))
    assert abs(first) < 1e-14 * max(scale, 1.0) and abs(second) < 1e-14 * max(scale, 1.0)


def test_interface_constraint_enforced(power_eq, rng):
    field = random_field(power_eq, (2, 1), rng)
    broken = TrialField(field.xi, field.dxi, field.eta, field.zeta, lambda r: 0.0 * field.q(r) + 1.0,
                        field.dq, field.plasma_edges, field.vacuum_edges)
    with pytest.raises(ConstraintViolation):
        assemble_Emk(power_eq, (2, 1), broken)
    with pytest.raises(ValueError):
        assemble_E0k(power_eq, (1, 1), field)


def test_axis_quadrature_point_rejected(power_eq):
    with pytest.raises(QuadratureBlowup):
        assemble_J(power_eq, TrialField.from_functions(np.sin, np.cos, plasma_edges=[-1.0, 1.0]))


def test_weighted_edge_estimate_holds(power_eq, rng):
    for s1 in (0.6, 0.8, 0.9, 0.97):
        for _ in range(10):
            field = random_field(power_eq, (0, 1), rng)
            lhs, rhs = weighted_edge_estimate(power_eq, field, s1)
            assert lhs <= rhs * (1 + 1e-12)


def test_split_function_power_law():
    eq = build_equilibrium(PowerLawProfile(1.0, 2.0), GridSpec(64))
    # p/(-p') = (1 - r^2) / (4 r), largest at the split point
    assert split_function(eq, 0.9) == pytest.approx((1 - 0.81) / 3.6, rel=1e-9)


def test_weighted_norms(power_eq, rng):
    zero = TrialField.zero(power_eq, (0, 1))
    assert weighted_norms(power_eq, (0, 1), zero, 0.5) == (0.0, 0.0)
    for mode in ((0, 2), (2, 1)):
        field = random_field(power_eq, mode, rng)
        strong, weak = weighted_norms(power_eq, mode, field, 0.7)
        assert strong > 0 and weak > 0
        assert strong >= assemble_J(power_eq, field) * (1 - 1e-12)
    X2, J, E, tail = coercivity_terms(power_eq, (0, 2), random_field(power_eq, (0, 2), rng))
    assert np.isfinite([X2, J, E, tail]).all()


def test_field_equations_match_symbolic_variation():
    sympy = pytest.importorskip("sympy")
    from zpinch.equilibrium import Fields
    from zpinch.spectrum import axisymmetric_residual, operator_residual

    r, lam, g = sympy.symbols("r lam g", positive=True)
    X, Xp, E_, Z = sympy.symbols("X Xp E Z")
    # the completed-square forms rely on force balance p' = -B (B' + B / r)
    B, rho = r * (1 + r / 3), (2 - r) ** 2
    dB = sympy.diff(B, r)
    dP = sympy.expand(-B * (dB + B / r))
    P = 3 + sympy.integrate(dP, r)
    xi, eta, zeta = sympy.sin(2 * r) * r, sympy.cos(3 * r) + r, r**2 - r / 2

    def check(density, m, k, routine):
        subs = {X: xi, Xp: sympy.diff(xi, r), E_: eta, Z: zeta}
        mass = rho * (X**2 + E_**2 + Z**2) * r
        dL = {s: sympy.diff(density - lam * mass, s) for s in (X, Xp, E_, Z)}
        eqs = [(sympy.diff(dL[Xp].subs(subs), r) - dL[X].subs(subs)) / (2 * r),
               -dL[E_].subs(subs) / (2 * r), -dL[Z].subs(subs) / (2 * r)]
        vals = {g: 1.4, lam: -0.7}
        radii = np.array([0.21, 0.47, 0.83])
        expect = [[float(e.subs(vals).subs(r, x)) for x in radii] for e in eqs]
        f = Fields(radii, *[np.array([float(q.subs(r, x)) for x in radii])
                            for q in (P, dP, rho, B, dB)], np.zeros(3))
        d = [np.array([float(q.subs(r, x)) for x in radii])
             for q in (xi, sympy.diff(xi, r), sympy.diff(xi, r, 2), eta, sympy.diff(eta, r),
                       zeta, sympy.diff(zeta, r))]
        got = routine(f, m, k, d)
        for a, b in zip(got, expect):
            assert np.allclose(a, b, rtol=1e-11, atol=1e-11)

    k0 = 3
    stiff = g * P + B**2
    axis = ((2 * dP / r + 4 * g * P * B**2 / (r**2 * stiff)) * X**2 * r
            + stiff * (k0 * E_ - (X + r * Xp) / r + 2 * B**2 * X / (r * stiff)) ** 2 * r)
    check(axis, 0, k0, lambda f, m, k, d: axisymmetric_residual(f, k, 1.4, -0.7, *d[:5]))

    for m, k in ((2, 3), (1, -2), (0, 3)):
        S = m * m + k * k * r * r
        helical = (S * r * (k * B * X / S - k * B * r * Xp / S + B * E_ / r) ** 2
                   + g * P * r * ((X + r * Xp) / r - k * E_ + m * Z / r) ** 2
                   + m * m * B**2 / (r * S) * (X - r * Xp) ** 2
                   + (2 * dP + m * m * B**2 / r) * X**2)
        check(helical, m, k, lambda f, m, k, d: operator_residual(f, m, k, 1.4, -0.7, *d))
