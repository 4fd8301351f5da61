"""Per-mode quadratic energy functionals and the kinetic constraint.

The perturbation of Fourier mode ``(m, k)`` is described by radial
profiles ``xi, eta, zeta`` on ``[0, r0]`` and, for ``m != 0``, the vacuum
radial component ``Q`` on ``[r0, rw]``.  Every functional carries the
overall factor ``2 pi^2``.
"""

from dataclasses import dataclass
from typing import Callable, NamedTuple, Optional

import numpy as np

from .errors import ConstraintViolation, QuadratureBlowup
from .quadrature import DEFAULT_ORDER, hermite_eval, panel_rule, refine_last_panel

TWO_PI_SQ = 2.0 * np.pi**2


@dataclass(frozen=True)
class ModeIndex:
    m: int
    k: int

    def __post_init__(self):
        if int(self.m) != self.m or int(self.k) != self.k:
            raise ValueError(f"mode numbers must be integers, got ({self.m}, {self.k})")
        object.__setattr__(self, "m", int(self.m))
        object.__setattr__(self, "k", int(self.k))

    @property
    def axisymmetric(self):
        return self.m == 0

    def __str__(self):
        return f"m{self.m}_k{self.k}"


def _as_mode(mode):
    return mode if isinstance(mode, ModeIndex) else ModeIndex(*mode)


# --- trial fields -----------------------------------------------------------


def _zero(r):
    return np.zeros_like(np.asarray(r, dtype=float))


class TrialField:
    """Perturbation profiles as callables plus the panels they live on.

    ``plasma_edges`` and ``vacuum_edges`` mark where derivatives may jump;
    integrals use a Gauss rule on each panel.  Build instances with
    ``nodal`` (finite-element coefficients) or ``from_functions``.
    """

    def __init__(self, xi, dxi, eta, zeta=None, q=None, dq=None,
                 plasma_edges=None, vacuum_edges=None, r0=None, rw=None):
        self.xi = xi
        self.dxi = dxi
        self.eta = eta if eta is not None else _zero
        self.zeta = zeta
        self.q = q
        self.dq = dq
        self.plasma_edges = np.asarray(plasma_edges, dtype=float)
        self.vacuum_edges = None if vacuum_edges is None else np.asarray(vacuum_edges, dtype=float)
        self.r0 = float(self.plasma_edges[-1]) if r0 is None else float(r0)
        self.rw = (None if self.vacuum_edges is None else float(self.vacuum_edges[-1])) if rw is None else rw

    # evaluation -------------------------------------------------------------
    def plasma_values(self, r):
        r = np.asarray(r, dtype=float)
        zeta = self.zeta(r) if self.zeta is not None else np.zeros_like(r)
        return self.xi(r), self.dxi(r), self.eta(r), zeta

    def vacuum_values(self, r):
        if self.q is None:
            r = np.asarray(r, dtype=float)
            return np.zeros_like(r), np.zeros_like(r)
        return self.q(r), self.dq(r)

    @property
    def has_vacuum(self):
        return self.q is not None

    @property
    def xi_edge(self):
        return float(self.xi(np.array([self.r0]))[0])

    def q_at(self, r):
        return 0.0 if self.q is None else float(self.q(np.array([r]))[0])

    # linear structure -------------------------------------------------------
    def _combine(self, other, a, b):
        def lin(f, g):
            if f is None and g is None:
                return None
            f = f or _zero
            g = g or _zero
            return lambda r: a * f(r) + b * g(r)

        edges = np.union1d(self.plasma_edges, other.plasma_edges)
        if self.vacuum_edges is None:
            vac = other.vacuum_edges
        elif other.vacuum_edges is None:
            vac = self.vacuum_edges
        else:
            vac = np.union1d(self.vacuum_edges, other.vacuum_edges)
        return TrialField(lin(self.xi, other.xi), lin(self.dxi, other.dxi),
                          lin(self.eta, other.eta), lin(self.zeta, other.zeta),
                          lin(self.q, other.q), lin(self.dq, other.dq), edges, vac,
                          self.r0, self.rw if self.rw is not None else other.rw)

    def __add__(self, other):
        return self._combine(other, 1.0, 1.0)

    def __sub__(self, other):
        return self._combine(other, 1.0, -1.0)

    def __mul__(self, scalar):
        return self._combine(self, float(scalar), 0.0)

    __rmul__ = __mul__

    # constructors -----------------------------------------------------------
    @classmethod
    def nodal(cls, nodes, xi, eta, zeta=None, vacuum_nodes=None, q=None, dq=None):
        """Piecewise-linear ``xi``, piecewise-constant ``eta, zeta``.

        ``xi`` holds values at every node including the axis, where it
        must vanish; ``eta`` and ``zeta`` hold one value per element.  The
        vacuum ``q`` is piecewise linear, or piecewise cubic when nodal
        slopes ``dq`` are supplied.
        """
        nodes = np.asarray(nodes, dtype=float)
        xi = np.asarray(xi, dtype=float)
        if xi.shape != nodes.shape:
            raise ValueError("xi needs one value per node")
        if xi[0] != 0.0:
            raise ConstraintViolation("xi must vanish on the axis")
        eta = np.asarray(eta, dtype=float)
        zeta = None if zeta is None else np.asarray(zeta, dtype=float)
        slopes = np.diff(xi) / np.diff(nodes)

        def element(r):
            return np.clip(np.searchsorted(nodes, r, side="right") - 1, 0, len(nodes) - 2)

        xi_f = lambda r: np.interp(r, nodes, xi)
        dxi_f = lambda r: slopes[element(r)]
        eta_f = lambda r: eta[element(r)]
        zeta_f = None if zeta is None else (lambda r: zeta[element(r)])
        q_f = dq_f = None
        vac_edges = None
        if q is not None:
            vac_edges = np.asarray(vacuum_nodes, dtype=float)
            qv = np.asarray(q, dtype=float)
            if dq is not None:
                dqv = np.asarray(dq, dtype=float)
                q_f = lambda r: hermite_eval(vac_edges, qv, dqv, r)
                dq_f = lambda r: hermite_eval(vac_edges, qv, dqv, r, derivative=True)
            else:
                qs = np.diff(qv) / np.diff(vac_edges)
                q_f = lambda r: np.interp(r, vac_edges, qv)
                dq_f = lambda r: qs[np.clip(np.searchsorted(vac_edges, r, side="right") - 1, 0, len(vac_edges) - 2)]
        field = cls(xi_f, dxi_f, eta_f, zeta_f, q_f, dq_f, nodes, vac_edges)
        field.coefficients = {"xi": xi, "eta": eta, "zeta": zeta,
                              "q": None if q is None else np.asarray(q, dtype=float),
                              "dq": None if dq is None else np.asarray(dq, dtype=float)}
        return field

    @classmethod
    def from_functions(cls, xi, dxi, eta=None, zeta=None, q=None, dq=None,
                       plasma_edges=None, vacuum_edges=None):
        return cls(xi, dxi, eta, zeta, q, dq, plasma_edges, vacuum_edges)

    @classmethod
    def zero(cls, eq, mode):
        mode = _as_mode(mode)
        vac = np.linspace(eq.r0, eq.rw, 2) if mode.m else None
        return cls(_zero, _zero, _zero, _zero if mode.m else None,
                   _zero if mode.m else None, _zero if mode.m else None,
                   np.array([0.0, eq.r0]), vac)


def random_field(eq, mode, rng, terms=8, decay=1.5, edges=None):
    """Smooth seeded trial field from truncated sine series.

    ``xi`` uses quarter-wave sines so it vanishes on the axis but not at
    ``r0``; the vacuum part satisfies the interface coupling and the wall
    condition exactly.
    """
    mode = _as_mode(mode)
    r0, rw = eq.r0, eq.rw
    j = np.arange(1, terms + 1)
    amp = rng.standard_normal((4, terms)) / j**decay
    kx = (j - 0.5) * np.pi / r0
    ke = (j - 1) * np.pi / r0

    def series(a, wave, fn):
        return lambda r: np.sum(a * fn(np.multiply.outer(np.asarray(r, dtype=float), wave)), axis=-1)

    xi = series(amp[0], kx, np.sin)
    dxi = series(amp[0] * kx, kx, np.cos)
    eta = series(amp[1], ke, np.cos)
    zeta = series(amp[2], ke, np.cos) if mode.m else None
    plasma_edges = refine_last_panel(eq.grid) if edges is None else edges
    if not mode.m:
        return TrialField(xi, dxi, eta, None, None, None, plasma_edges, None)
    q0 = mode.m * eq.bhat_coefficient / r0 * float(xi(np.array([r0]))[0]) / r0
    kq = j * np.pi / (rw - r0)
    length = rw - r0

    def q(r):
        r = np.asarray(r, dtype=float)
        return q0 * (rw - r) / length + series(amp[3], kq, np.sin)(r - r0)

    def dq(r):
        r = np.asarray(r, dtype=float)
        return -q0 / length + series(amp[3] * kq, kq, np.cos)(r - r0)

    vac_edges = np.linspace(r0, rw, 129)
    return TrialField(xi, dxi, eta, zeta, q, dq, plasma_edges, vac_edges)


# --- integrand construction ---------------------------------------------------


class Term(NamedTuple):
    """``weight * (c_xi xi + c_dxi xi' + c_eta eta + c_zeta zeta)^2``."""

    weight: np.ndarray
    xi: np.ndarray
    dxi: np.ndarray
    eta: np.ndarray
    zeta: np.ndarray


def _safe_div(num, den):
    ok = den != 0.0
    return np.where(ok, num / np.where(ok, den, 1.0), 0.0)


def energy_terms(f, mode, gamma):
    """Sum-of-squares decomposition of the plasma energy density (``dr`` measure).

    For ``m = 0`` this is the completed-square axisymmetric form; for
    ``m != 0`` it is the four-term form with the interchange potential
    ``2p' + m^2 B^2 / r``.
    """
    m, k = mode.m, mode.k
    r, p, dp, B = f.r, f.p, f.dp, f.B
    if np.any(r <= 0.0):
        raise QuadratureBlowup("energy density evaluated on the axis")
    zero = np.zeros_like(r)
    one = np.ones_like(r)
    gp = gamma * p
    if m == 0:
        stiff = gp + B * B
        ratio = _safe_div(B * B, stiff)
        potential = 2.0 * dp / r + _safe_div(4.0 * gp * B * B, r * r * stiff)
        return [
            Term(potential * r, one, zero, zero, zero),
            Term(stiff * r, -1.0 / r + 2.0 * ratio / r, -one, k * one, zero),
        ]
    S = m * m + k * k * r * r
    return [
        Term(S * r, k * B / S, -k * B * r / S, B / r, zero),
        Term(gp * r, 1.0 / r, one, -k * one, m / r),
        Term(m * m * B * B / (r * S), one, -r, zero, zero),
        Term(2.0 * dp + m * m * B * B / r, one, zero, zero, zero),
    ]


def mass_terms(f, mode):
    one = np.ones_like(f.r)
    zero = np.zeros_like(f.r)
    w = f.rho * f.r
    terms = [Term(w, one, zero, zero, zero), Term(w, zero, zero, one, zero)]
    if mode.m:
        terms.append(Term(w, zero, zero, zero, one))
    return terms


def evaluate_terms(terms, xi, dxi, eta, zeta):
    total = 0.0
    for t in terms:
        total = total + t.weight * (t.xi * xi + t.dxi * dxi + t.eta * eta + t.zeta * zeta) ** 2
    return total


def _plasma_rule(eq, field, order):
    points, weights = panel_rule(field.plasma_edges, order)
    points, weights = points.ravel(), weights.ravel()
    if np.any(points <= 0.0):
        raise QuadratureBlowup("quadrature point on the axis")
    return points, weights, eq.at(points)


def axisymmetric_raw_density(f, k, gamma, xi, dxi, eta):
    """Unreduced axisymmetric density before completing the square."""
    r, B = f.r, f.B
    div = xi / r + dxi  # (r xi)' / r
    return (2.0 * f.dp * xi * xi
            + B * B * (k * eta - div + 2.0 * xi / r) ** 2 * r
            + gamma * f.p * (div - k * eta) ** 2 * r)


def intermediate_density(f, mode, gamma, xi, dxi, eta, zeta):
    """Density of the form with ``((r xi)')^2`` and ``(r xi)^2`` weights."""
    m, k = mode.m, mode.k
    r, p, dp, B, dB = f.r, f.p, f.dp, f.B, f.dB
    S = m * m + k * k * r * r
    d_b_over_r = dB / r - B / (r * r)
    beta0 = (m * m * B * B / r**3 + 2.0 * m * m * B * d_b_over_r / (r * S)
             - 4.0 * k * k * m * m * B * B / (r * S * S) + 2.0 * k * k * dp / S) / r
    rxi_prime = xi + r * dxi
    return (m * m * B * B / (r * r * S) * rxi_prime**2 + beta0 * (r * xi) ** 2
            + S * (B * eta / r + (-k * B * rxi_prime + 2.0 * k * B * xi) / S) ** 2
            + gamma * p * (rxi_prime / r - k * eta + m * zeta / r) ** 2) * r


# --- functionals ------------------------------------------------------------------


@dataclass(frozen=True)
class EnergyBreakdown:
    fluid: float
    surface: float
    vacuum: float
    total: float
    constraint: float
    alternative: Optional[float] = None

    @property
    def quotient(self):
        return self.total / self.constraint if self.constraint > 0.0 else np.nan


def vacuum_energy(eq, mode, field, order=DEFAULT_ORDER):
    """``2 pi^2 int_r0^rw [Q^2 + ((r Q)')^2 / (m^2 + k^2 r^2)] r dr``."""
    if not field.has_vacuum:
        return 0.0
    points, weights = panel_rule(field.vacuum_edges, order)
    r = points.ravel()
    q, dq = field.vacuum_values(r)
    S = mode.m**2 + mode.k**2 * r * r
    return TWO_PI_SQ * float(np.sum(weights.ravel() * (q * q + (q + r * dq) ** 2 / S) * r))


def surface_energy(eq, field):
    bhat = eq.bhat_coefficient / eq.r0
    return -TWO_PI_SQ * (bhat**2 - float(eq.B[-1]) ** 2) * field.xi_edge**2


def check_interface(eq, mode, field, rtol=1e-8):
    """Raise ``ConstraintViolation`` unless the vacuum coupling holds."""
    lhs = mode.m * eq.bhat_coefficient / eq.r0 * field.xi_edge
    rhs = eq.r0 * field.q_at(eq.r0)
    scale = max(abs(lhs), abs(rhs), 1e-300)
    if abs(lhs - rhs) > rtol * scale and abs(lhs - rhs) > 1e-14:
        raise ConstraintViolation(f"interface coupling off by {abs(lhs - rhs):.3e}")
    wall = field.q_at(eq.rw)
    if abs(wall) > max(rtol * scale, 1e-14):
        raise ConstraintViolation(f"vacuum field does not vanish at the wall ({wall:.3e})")


def assemble_J(eq, field, order=DEFAULT_ORDER):
    """``2 pi^2 int rho (xi^2 + eta^2 + zeta^2) r dr``."""
    points, weights, f = _plasma_rule(eq, field, order)
    xi, _, eta, zeta = field.plasma_values(points)
    return TWO_PI_SQ * float(np.sum(weights * f.rho * (xi * xi + eta * eta + zeta * zeta) * points))


def assemble_E0k(eq, mode, field, order=DEFAULT_ORDER):
    """Axisymmetric energy; ``alternative`` holds the unreduced form."""
    mode = _as_mode(mode)
    if mode.m != 0:
        raise ValueError("assemble_E0k needs m = 0")
    points, weights, f = _plasma_rule(eq, field, order)
    xi, dxi, eta, _ = field.plasma_values(points)
    zero = np.zeros_like(xi)
    main = evaluate_terms(energy_terms(f, mode, eq.gamma), xi, dxi, eta, zero)
    raw = axisymmetric_raw_density(f, mode.k, eq.gamma, xi, dxi, eta)
    fluid = TWO_PI_SQ * float(np.sum(weights * main))
    other = TWO_PI_SQ * float(np.sum(weights * raw))
    surface = surface_energy(eq, field)
    constraint = TWO_PI_SQ * float(np.sum(weights * f.rho * (xi * xi + eta * eta) * points))
    return EnergyBreakdown(fluid, surface, 0.0, fluid + surface, constraint, other + surface)


def assemble_Emk(eq, mode, field, order=DEFAULT_ORDER, rtol=1e-8):
    """Non-axisymmetric energy with vacuum part.

    ``alternative`` is the total built from the intermediate form that
    carries the explicit edge term ``-2 pi^2 [2 m^2 B^2 xi^2 / S]``.
    """
    mode = _as_mode(mode)
    if mode.m == 0:
        raise ValueError("assemble_Emk needs m != 0")
    if field.has_vacuum:
        check_interface(eq, mode, field, rtol)
    elif field.xi_edge != 0.0:
        raise ConstraintViolation("moving boundary without a vacuum field")
    points, weights, f = _plasma_rule(eq, field, order)
    xi, dxi, eta, zeta = field.plasma_values(points)
    main = evaluate_terms(energy_terms(f, mode, eq.gamma), xi, dxi, eta, zeta)
    inter = intermediate_density(f, mode, eq.gamma, xi, dxi, eta, zeta)
    fluid = TWO_PI_SQ * float(np.sum(weights * main))
    S0 = mode.m**2 + mode.k**2 * eq.r0**2
    edge = TWO_PI_SQ * 2.0 * mode.m**2 * float(eq.B[-1]) ** 2 * field.xi_edge**2 / S0
    other = TWO_PI_SQ * float(np.sum(weights * inter)) - edge
    surface = surface_energy(eq, field)
    vac = vacuum_energy(eq, mode, field, order)
    constraint = TWO_PI_SQ * float(np.sum(weights * f.rho * (xi * xi + eta * eta + zeta * zeta) * points))
    return EnergyBreakdown(fluid, surface, vac, fluid + surface + vac, constraint, other + surface + vac)


def assemble_energy(eq, mode, field, order=DEFAULT_ORDER):
    mode = _as_mode(mode)
    return assemble_E0k(eq, mode, field, order) if mode.m == 0 else assemble_Emk(eq, mode, field, order)


def polarization(eq, mode, f, g, order=DEFAULT_ORDER):
    """Bilinear form ``(E[f+g] - E[f-g]) / 4``."""
    plus = assemble_energy(eq, mode, f + g, order).total
    minus = assemble_energy(eq, mode, f - g, order).total
    return 0.25 * (plus - minus)


# --- eliminations -------------------------------------------------------------------


def axisymmetric_potential(f, gamma):
    """Coefficient of ``xi^2 r`` left after eliminating ``eta`` at ``m = 0``."""
    stiff = gamma * f.p + f.B**2
    return 2.0 * f.dp / f.r + _safe_div(4.0 * gamma * f.p * f.B**2, f.r * f.r * stiff)


def compressional_eta(f, k, gamma, xi, dxi):
    """``eta`` with ``k eta = ((r xi)' - 2 B^2 xi / (gamma p + B^2)) / r``."""
    stiff = gamma * f.p + f.B**2
    return (xi + f.r * dxi - 2.0 * _safe_div(f.B**2, stiff) * xi) / (k * f.r)


def eliminate_axisymmetric(eq, k, field):
    """Replace ``eta`` so the compressional square vanishes."""
    def eta(r):
        r = np.asarray(r, dtype=float)
        f = eq.at(r.ravel())
        out = compressional_eta(f, k, eq.gamma, field.xi(r.ravel()), field.dxi(r.ravel()))
        return out.reshape(r.shape)
    return TrialField(field.xi, field.dxi, eta, None, None, None, field.plasma_edges, None)


def reduced_energy_m0(eq, field, order=DEFAULT_ORDER):
    """``2 pi^2 int V xi^2 r dr`` with the axisymmetric potential ``V``."""
    points, weights, f = _plasma_rule(eq, field, order)
    xi = field.xi(points)
    return TWO_PI_SQ * float(np.sum(weights * axisymmetric_potential(f, eq.gamma) * xi * xi * points))


def eliminate_helical(eq, mode, field):
    """Choose ``eta, zeta`` so the first two squares of the energy vanish."""
    mode = _as_mode(mode)
    m, k = mode.m, mode.k

    def eta(r):
        r = np.asarray(r, dtype=float)
        xi, dxi = field.xi(r), field.dxi(r)
        return r * k * (r * dxi - xi) / (m * m + k * k * r * r)

    def zeta(r):
        r = np.asarray(r, dtype=float)
        xi, dxi = field.xi(r), field.dxi(r)
        return (r / m) * (k * eta(r) - (xi + r * dxi) / r)

    return TrialField(field.xi, field.dxi, eta, zeta, field.q, field.dq,
                      field.plasma_edges, field.vacuum_edges)


def squared_terms_m(eq, mode, field, order=DEFAULT_ORDER):
    """Integrals of the first two (square) terms of the helical energy."""
    mode = _as_mode(mode)
    points, weights, f = _plasma_rule(eq, field, order)
    xi, dxi, eta, zeta = field.plasma_values(points)
    terms = energy_terms(f, mode, eq.gamma)[:2]
    return [TWO_PI_SQ * float(np.sum(weights * evaluate_terms([t], xi, dxi, eta, zeta))) for t in terms]


# --- weighted norms -----------------------------------------------------------------


def split_function(eq, r, samples=4000):
    """``g(r) = sup_{r <= s < r0} p(s) / (-p'(s))`` by dense sampling."""
    r = float(r)
    d = (eq.r0 - r) * np.geomspace(1.0, 1e-12, samples)
    ratio = -eq.profile.p_over_dp(eq.r0 - d)
    if np.any(~np.isfinite(ratio)) or np.any(ratio < 0.0):
        raise ValueError("pressure must decrease strictly on the split region")
    return float(np.max(ratio))


def _norm_rule(eq, field, lo, hi, order):
    edges = field.plasma_edges
    edges = np.unique(np.concatenate([[lo, hi], edges[(edges > lo) & (edges < hi)]]))
    points, weights = panel_rule(edges, order)
    return points.ravel(), weights.ravel()


def weighted_norms(eq, mode, field, s1, order=DEFAULT_ORDER):
    """Squared weighted-Sobolev norm and squared compact-embedding norm.

    Returns ``(X_k^2, Z^2)`` for ``m = 0`` and ``(Y_{m,k}^2, V^2)``
    otherwise; ``s1`` splits the embedding norm.
    """
    mode = _as_mode(mode)
    m, k = mode.m, mode.k
    r, w = _norm_rule(eq, field, 0.0, eq.r0, order)
    f = eq.at(r)
    xi, dxi, eta, zeta = field.plasma_values(r)
    div = xi / r + dxi
    mass = f.rho * (xi * xi + eta * eta + (zeta * zeta if m else 0.0)) * r
    if m == 0:
        dens = (f.p * div**2 + f.B**2 * (k * eta - div + 2.0 * xi / r) ** 2) * r + mass
    else:
        S = m * m + k * k * r * r
        dens = (f.p * (div + m * zeta / r) ** 2 * r + f.B**2 * xi * xi / r
                + f.B**2 * (eta / r - k * (r * dxi - xi) / S) ** 2 * r
                + f.B**2 * (xi - r * dxi) ** 2 / r + mass)
    strong = float(np.sum(w * dens))
    ri, wi = _norm_rule(eq, field, 0.0, s1, order)
    ro, wo = _norm_rule(eq, field, s1, eq.r0, order)
    inner_weight = np.ones_like(ri) if m == 0 else eq.at(ri).B ** 2
    weak = float(np.sum(wi * inner_weight * field.xi(ri) ** 2)
                 + np.sum(wo * (-eq.at(ro).dp) * field.xi(ro) ** 2))
    return strong, weak


def weighted_edge_estimate(eq, field, s1, order=DEFAULT_ORDER):
    """Both sides of ``int_s1^r0 (-p') xi^2 <= 2 p(s1) xi(s1)^2 + 4 g(s1) int p xi'^2``."""
    r, w = _norm_rule(eq, field, s1, eq.r0, order)
    f = eq.at(r)
    xi, dxi = field.xi(r), field.dxi(r)
    lhs = float(np.sum(w * (-f.dp) * xi * xi))
    p1 = float(eq.profile.p(s1))
    xi1 = float(field.xi(np.array([s1]))[0])
    rhs = 2.0 * p1 * xi1**2 + 4.0 * split_function(eq, s1) * float(np.sum(w * f.p * dxi * dxi))
    return lhs, rhs


def coercivity_terms(eq, mode, field, order=DEFAULT_ORDER):
    """Pieces of the axisymmetric coercivity estimate, for logging.

    Returns ``(X_k^2, J, E, int (2 p' xi^2 + gamma p k^2 eta^2 r) dr)``.
    """
    mode = _as_mode(mode)
    points, weights, f = _plasma_rule(eq, field, order)
    xi, _, eta, _ = field.plasma_values(points)
    tail = float(np.sum(weights * (2.0 * f.dp * xi * xi + eq.gamma * f.p * mode.k**2 * eta * eta * points)))
    energy = assemble_energy(eq, mode, field, order)
    strong, _ = weighted_norms(eq, mode, field, 0.5 * eq.r0, order)
    return strong, energy.constraint, energy.total, tail
