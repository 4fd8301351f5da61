"""Cylindrical z-pinch equilibria and pointwise stability criteria.

Given a pressure profile the azimuthal field follows from radial force
balance, ``B^2 = -(2/r^2) int_0^r s^2 p'(s) ds``; the axial current is
``J = (1/r)(r B)'``, and ``rho = (p/A)^(1/gamma)``.  Fields are available
both on the construction grid and at arbitrary radii via ``at``.
"""

from dataclasses import dataclass, field
from typing import NamedTuple, Optional

import numpy as np
from scipy.optimize import minimize_scalar

from .errors import AdmissibilityViolation, AxisSingularity, ConfigError, NoWitness, NonpositiveIntegrand
from .grid import GridSpec, radial_nodes
from .quadrature import CumulativeIntegral, refine_last_panel


class Fields(NamedTuple):
    r: np.ndarray
    p: np.ndarray
    dp: np.ndarray
    rho: np.ndarray
    B: np.ndarray
    dB: np.ndarray
    J: np.ndarray


class _FieldSolver:
    """Evaluates equilibrium quantities at arbitrary radii."""

    def __init__(self, profile, edges, order):
        self.profile = profile
        self.driven_by_current = hasattr(profile, "magnetic_field")
        if not self.driven_by_current:
            # p' may lose smoothness at r0; panels shrink geometrically toward it
            self.moment = CumulativeIntegral(lambda s: -s * s * profile.dp(s), refine_last_panel(edges),
                                             order)

    def magnetic_field(self, r):
        r = np.asarray(r, dtype=float)
        if self.driven_by_current:
            return self.profile.magnetic_field(r)
        moment = np.clip(self.moment(r), 0.0, None)
        safe = np.where(r > 0.0, r, 1.0)
        return np.where(r > 0.0, np.sqrt(2.0 * moment) / safe, 0.0)

    def __call__(self, r):
        prof = self.profile
        r = np.atleast_1d(np.asarray(r, dtype=float))
        p = prof.p(r)
        dp = prof.dp(r)
        B = self.magnetic_field(r)
        on_axis = r == 0.0
        safe_r = np.where(on_axis, 1.0, r)
        if self.driven_by_current:
            J = prof.current(r)
            dB = np.where(on_axis, 0.5 * J, J - B / safe_r)
        else:
            safe_B = np.where(B > 0.0, B, 1.0)
            dB = np.where(B > 0.0, -(dp + B * B / safe_r) / safe_B, 0.0)
            if np.any(on_axis):
                slope = np.sqrt(max(-float(prof.d2p(0.0)) / 2.0, 0.0))
                dB = np.where(on_axis, slope, dB)
            J = np.where(on_axis, 2.0 * dB, dB + B / safe_r)
        rho = prof.density(r)
        return Fields(r, p, dp, rho, B, dB, J)


@dataclass(frozen=True)
class EquilibriumState:
    """Sampled equilibrium on ``grid`` (axis included) plus geometry."""

    grid: np.ndarray
    p: np.ndarray
    dp: np.ndarray
    rho: np.ndarray
    B: np.ndarray
    dB: np.ndarray
    J: np.ndarray
    r0: float
    rw: float
    gamma: float
    A: float
    bhat_coefficient: float
    profile: object = field(repr=False, compare=False)
    _solver: object = field(repr=False, compare=False)
    relaxed: bool = False

    def at(self, r):
        """Equilibrium fields at arbitrary radii in ``[0, r0]``."""
        return self._solver(r)

    def vacuum_field(self, r):
        return self.bhat_coefficient / np.asarray(r, dtype=float)

    @property
    def interior(self):
        return slice(1, len(self.grid) - 1)

    def to_rows(self):
        cols = (self.grid, self.p, self.dp, self.rho, self.B, self.dB, self.J)
        return [tuple(float(c[i]) for c in cols) for i in range(len(self.grid))]


def build_equilibrium(profile, grid_spec=None, rw=None, strict=False, relaxed=False, order=8):
    """Force-balanced equilibrium for ``profile``.

    Parameters
    ----------
    profile : PressureProfile
    grid_spec : GridSpec or int, optional
        Node layout; an integer is taken as the element count.
    rw : float, optional
        Conducting-wall radius, default ``2 r0``.
    strict : bool
        Raise ``AdmissibilityViolation`` for inadmissible pressures.
    relaxed : bool
        Accept pressures that vanish on an interval ending at ``r0``.
    order : int
        Gauss-Legendre points per panel for the field quadrature.
    """
    if grid_spec is None:
        grid_spec = GridSpec()
    elif isinstance(grid_spec, (int, np.integer)):
        grid_spec = GridSpec(int(grid_spec))
    r0 = profile.r0
    rw = 2.0 * r0 if rw is None else float(rw)
    if not rw > r0:
        raise ConfigError(f"wall radius {rw} must exceed plasma radius {r0}")
    nodes = radial_nodes(grid_spec, r0)
    solver = _FieldSolver(profile, nodes, order)
    if not solver.driven_by_current:
        moments = solver.moment.table
        scale = max(np.max(np.abs(moments)), np.finfo(float).tiny)
        if np.any(moments < -1e-13 * scale):
            bad = nodes[np.argmin(moments)]
            raise NonpositiveIntegrand(f"-int s^2 p' ds is negative near r = {bad:.6g}")
    f = solver(nodes)
    eq = EquilibriumState(
        grid=nodes, p=f.p, dp=f.dp, rho=f.rho, B=f.B, dB=f.dB, J=f.J,
        r0=r0, rw=rw, gamma=profile.gamma, A=profile.A,
        bhat_coefficient=float(f.B[-1] * r0), profile=profile, _solver=solver,
        relaxed=relaxed,
    )
    if strict:
        report = check_admissibility(profile, eq)
        ok = report.admissible or (relaxed and report.relaxed_admissible)
        if not ok:
            raise AdmissibilityViolation(f"pressure is not admissible: {report.failures()}")
    return eq


def force_balance_residual(eq, step=1e-3):
    """Residual of ``d/dr(p + B^2/2) + B^2/r`` at interior nodes.

    The derivative uses a seven-point stencil on the off-grid evaluator,
    with the step shrunk near the axis and the edge so the stencil stays
    well inside the plasma.
    """
    r = eq.grid[eq.interior]
    h = np.minimum.reduce([np.full_like(r, step * eq.r0), r / 16.0, (eq.r0 - r) / 16.0])

    def total(x):
        f = eq.at(x)
        return f.p + 0.5 * f.B**2

    weights = (-1.0, 9.0, -45.0, 0.0, 45.0, -9.0, 1.0)
    deriv = sum(w * total(r + (j - 3) * h) for j, w in enumerate(weights) if w) / (60.0 * h)
    f = eq.at(r)
    return deriv + f.B**2 / r


def magnetic_bound_ratio(eq):
    """``sup |B/r|`` divided by ``||J||_inf / 2``; at most 1 for J >= 0."""
    r = eq.grid[eq.interior]
    peak = np.max(np.abs(eq.J))
    if peak == 0.0:
        return 0.0
    return float(np.max(np.abs(eq.B[eq.interior] / r)) / (0.5 * peak))


# --- axis behaviour -------------------------------------------------------


def taylor_axis_coefficients(eq, step=None, rtol=1e-6):
    """Axis expansion of ``B`` and ``p'`` from the current density.

    Returns ``((b1, b2), (q1, q2))`` with ``B ~ b1 r + b2 r^2`` and
    ``p' ~ q1 r + q2 r^2``, where ``b1 = J(0)/2``, ``b2 = J'(0)/3``,
    ``q1 = -J(0)^2/2`` and ``q2 = -(5/6) J'(0) J(0)``.
    """
    h = 1e-3 * eq.r0 if step is None else step

    def slope(hh):
        f = eq.at(np.array([0.0, hh, 2 * hh]))
        return (-3.0 * f.J[0] + 4.0 * f.J[1] - f.J[2]) / (2.0 * hh), f.J[0]

    coarse, J0 = slope(h)
    fine, _ = slope(h / 2)
    if not (np.isfinite(coarse) and np.isfinite(fine)):
        raise AxisSingularity("current slope on the axis is not finite")
    # second-order stencil: error falls by 4 when the step halves
    if abs(fine - coarse) > max(rtol * max(1.0, abs(fine)), 1e-9) * 4.0 and abs(fine - coarse) > 0.3 * abs(fine):
        raise AxisSingularity("axis current slope does not settle under refinement")
    dJ0 = fine + (fine - coarse) / 3.0
    return (J0 / 2.0, dJ0 / 3.0), (-(J0**2) / 2.0, -(5.0 / 6.0) * dJ0 * J0)


def fit_axis_expansion(eq, count=10, degree=4):
    """Least-squares polynomial fit of ``B`` and ``p'`` on the first nodes.

    An independent estimate of the linear and quadratic coefficients,
    taken directly from the sampled fields rather than from ``J``.
    """
    r = eq.grid[1 : count + 1]
    powers = np.vander(r, degree + 1, increasing=True)[:, 1:]
    b = np.linalg.lstsq(powers, eq.B[1 : count + 1], rcond=None)[0]
    q = np.linalg.lstsq(powers, eq.dp[1 : count + 1], rcond=None)[0]
    return (float(b[0]), float(b[1])), (float(q[0]), float(q[1]))


# --- criteria ---------------------------------------------------------------


@dataclass(frozen=True)
class CriterionReport:
    m: int
    radii: np.ndarray
    scan: np.ndarray
    witness_r: Optional[float]
    verdict: str

    @property
    def witness_value(self):
        if self.witness_r is None:
            return None
        return float(self.scan[np.argmin(np.abs(self.radii - self.witness_r))])


def sausage_expression(f, gamma):
    """``p' + 2 gamma p B^2 / (r (gamma p + B^2))`` for a ``Fields`` tuple."""
    denom = gamma * f.p + f.B**2
    safe = np.where(denom > 0.0, denom, 1.0)
    extra = np.where(denom > 0.0, 2.0 * gamma * f.p * f.B**2 / (f.r * safe), 0.0)
    return f.dp + extra


def _report(m, radii, values, tol, must_find):
    negative = values < -tol
    if np.any(negative):
        idx = int(np.argmin(values))
        return CriterionReport(m, radii, values, float(radii[idx]), "unstable-witness-found")
    if np.all(np.abs(values) <= tol):
        return CriterionReport(m, radii, values, None, "inconclusive")
    if must_find:
        raise NoWitness("no negative value found; refine the grid")
    return CriterionReport(m, radii, values, None, "criterion-nonnegative")


def sausage_criterion_scan(eq, tol=0.0):
    """Scan the axisymmetric criterion over interior nodes."""
    radii = eq.grid[eq.interior]
    values = sausage_expression(eq.at(radii), eq.gamma)
    trivial = not np.any(eq.p[eq.interior] > 0.0)
    return _report(0, radii, values, tol, must_find=not trivial)


def mean_value_witness(eq):
    """Radius maximizing ``r^(2 gamma) p`` and the criterion there.

    Returns ``(r_star, criterion, closed_form)`` where ``closed_form`` is
    ``-2 gamma^2 p^2 / (r (gamma p + B^2))``; the two agree because the
    derivative of ``r^(2 gamma) p`` vanishes at ``r_star``.
    """
    radii = eq.grid[eq.interior]
    g = eq.gamma
    with np.errstate(divide="ignore"):
        logq = 2 * g * np.log(radii) + np.log(np.clip(eq.p[eq.interior], 0.0, None))
    if not np.any(np.isfinite(logq)):
        raise NoWitness("pressure vanishes identically")
    i = int(np.argmax(logq))
    lo = radii[max(i - 1, 0)]
    hi = radii[min(i + 1, len(radii) - 1)]

    def neg_logq(x):
        pv = float(eq.profile.p(x))
        return np.inf if pv <= 0.0 else -(2 * g * np.log(x) + np.log(pv))

    res = minimize_scalar(neg_logq, bounds=(lo, hi), method="bounded",
                          options={"xatol": 1e-12 * eq.r0})
    f = eq.at(np.array([res.x]))
    crit = float(sausage_expression(f, g)[0])
    closed = float(-2 * g * g * f.p[0] ** 2 / (f.r[0] * (g * f.p[0] + f.B[0] ** 2)))
    return float(res.x), crit, closed


def interchange_expression(f, m):
    return 2.0 * f.dp + m * m * f.B**2 / f.r


def interchange_criterion_scan(eq, m, tol=1e-12):
    """Scan ``2p' + m^2 B^2 / r`` over interior nodes."""
    if int(m) != m or m == 0:
        raise ValueError("interchange scan needs a nonzero integer m")
    radii = eq.grid[eq.interior]
    values = interchange_expression(eq.at(radii), m)
    return _report(int(m), radii, values, tol, must_find=False)


# --- admissibility -------------------------------------------------------------


@dataclass(frozen=True)
class AdmissibilityReport:
    nonnegative: bool
    positive_inside: bool
    vanishes_at_edge: bool
    decreasing_near_edge: bool
    ratio_samples: np.ndarray
    ratio_to_zero: bool
    moment_nonnegative: bool
    boundary_order: float
    density_ratio_exponent: float
    density_ratio_bounded: bool

    @property
    def admissible(self):
        return (self.nonnegative and self.positive_inside and self.vanishes_at_edge
                and self.decreasing_near_edge and self.ratio_to_zero and self.moment_nonnegative)

    @property
    def relaxed_admissible(self):
        return self.nonnegative and self.vanishes_at_edge and self.moment_nonnegative

    def failures(self):
        names = ("nonnegative", "positive_inside", "vanishes_at_edge", "decreasing_near_edge",
                 "ratio_to_zero", "moment_nonnegative")
        return [n for n in names if not getattr(self, n)]


def check_admissibility(profile, eq=None, eps=None, levels=12):
    """Numerical audit of the admissibility conditions near ``r0``.

    Radii ``r0 - 2^-j eps`` for ``j = 0..levels`` probe the edge:
    ``|p/p'|`` must decay monotonically below ``1e-3``; the log-log slope
    of ``p`` gives the vanishing order and that of ``|p'|/rho`` decides
    whether the ratio stays bounded.
    """
    r0 = profile.r0
    eps = 0.1 * r0 if eps is None else eps
    if eq is None:
        eq = build_equilibrium(profile, GridSpec(256))
    nonneg = bool(np.all(eq.p >= 0.0))
    # log form so that flat edges (exponential family) do not underflow
    positive = bool(np.all(np.isfinite(profile.log_p(eq.grid[eq.interior]))))
    vanishes = bool(abs(float(profile.p(r0))) <= 1e-12 * max(1.0, float(np.max(eq.p))))

    dist = eps * 2.0 ** -np.arange(levels + 1)
    radii = r0 - dist
    decreasing = bool(np.all(profile.dp(radii) <= 0.0))
    ratio = np.abs(profile.p_over_dp(radii))
    ratio_ok = bool(np.all(np.isfinite(ratio)) and np.all(np.diff(ratio) < 0.0) and ratio[-1] < 1e-3)

    if isinstance(eq._solver, _FieldSolver) and not eq._solver.driven_by_current:
        moment_ok = bool(np.all(eq._solver.moment.table >= -1e-13 * max(1e-300, np.max(np.abs(eq._solver.moment.table)))))
    else:
        moment_ok = bool(np.all(eq.B >= 0.0))

    logd = np.log(dist)
    logp = profile.log_p(radii)
    with np.errstate(invalid="ignore"):
        order = float(np.polyfit(logd[-3:], logp[-3:], 1)[0]) if np.all(np.isfinite(logp[-3:])) else np.inf
        log_ratio = profile.log_abs_dp(radii) - (logp - np.log(profile.A)) / profile.gamma
        if np.all(np.isfinite(log_ratio[-3:])):
            slope = float(np.polyfit(logd[-3:], log_ratio[-3:], 1)[0])
        else:
            slope = np.inf
    bounded = bool(slope >= -1e-3)
    return AdmissibilityReport(nonneg, positive, vanishes, decreasing, ratio, ratio_ok,
                               moment_ok, order, slope, bounded)
