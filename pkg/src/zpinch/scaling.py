"""Axisymmetric growth-rate bounds from a shrinking family of trial fields.

Each member is ``xi_k(r) = w(k^alpha (r - r0))`` with ``w`` a smooth bump
supported on ``(-1, 0)``, and ``eta_k`` chosen so the compressional square
of the axisymmetric energy vanishes.  ``E / J`` on this family bounds
``lambda_{0,k}`` from above; its power-law behaviour in ``k`` decides
whether growth rates stay bounded.
"""

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .energy import (TWO_PI_SQ, ModeIndex, TrialField, assemble_E0k, axisymmetric_potential,
                     compressional_eta)
from .errors import SignFlip, SupportOverflow
from .quadrature import panel_rule

DEFAULT_POWERS = tuple(range(4, 11))


@dataclass(frozen=True)
class BumpFunction:
    """``amplitude * exp(-1 / (1 - u^2))`` with ``u = 2 s + 1``, zero outside ``(-1, 0)``."""

    amplitude: float = 1.0
    lower: float = -1.0
    upper: float = 0.0

    def __call__(self, s):
        s = np.asarray(s, dtype=float)
        u = 2.0 * s + 1.0
        inside = np.abs(u) < 1.0
        gap = np.where(inside, 1.0 - u * u, 1.0)
        return np.where(inside, self.amplitude * np.exp(-1.0 / gap), 0.0)

    def derivative(self, s):
        s = np.asarray(s, dtype=float)
        u = 2.0 * s + 1.0
        inside = np.abs(u) < 1.0
        gap = np.where(inside, 1.0 - u * u, 1.0)
        return np.where(inside, self(s) * (-4.0 * u / gap**2), 0.0)

    def describe(self):
        return {"kind": "bump", "amplitude": self.amplitude, "support": [self.lower, self.upper]}


def family_support(eq, alpha, w, k):
    """Radial interval carrying ``xi_k``; ``SupportOverflow`` if it leaves ``(0, r0)``."""
    width = float(k) ** (-alpha)
    lo, hi = eq.r0 + w.lower * width, eq.r0 + w.upper * width
    if lo <= 0.0 or hi > eq.r0:
        raise SupportOverflow(f"support [{lo:.4g}, {hi:.4g}] of the k={k} member leaves (0, r0)")
    return lo, hi


def build_test_family(eq, alpha, w, k, panels=64):
    """Trial field ``(xi_k, eta_k)`` for wavenumber ``k``."""
    if not 0.0 < alpha < 1.0:
        raise ValueError("alpha must lie in (0, 1)")
    lo, hi = family_support(eq, alpha, w, k)
    scale = float(k) ** alpha

    def xi(r):
        return w(scale * (np.asarray(r, dtype=float) - eq.r0))

    def dxi(r):
        return scale * w.derivative(scale * (np.asarray(r, dtype=float) - eq.r0))

    def eta(r):
        r = np.asarray(r, dtype=float)
        flat = r.ravel()
        inside = (flat > lo) & (flat < hi)
        out = np.zeros_like(flat)
        if np.any(inside):
            f = eq.at(flat[inside])
            out[inside] = compressional_eta(f, k, eq.gamma, xi(flat[inside]), dxi(flat[inside]))
        return out.reshape(r.shape)

    edges = np.linspace(lo, hi, panels + 1)
    return TrialField(xi, dxi, eta, None, None, None, edges, None)


@dataclass(frozen=True)
class FamilyMember:
    k: float
    J_value: float
    E_value: float
    compressional: float

    @property
    def lambda_upper(self):
        return self.E_value / self.J_value


def evaluate_member(eq, alpha, w, k, panels=64, order=8):
    """Energy, constraint and residual compressional term of one member."""
    fld = build_test_family(eq, alpha, w, k, panels)
    points, weights = panel_rule(fld.plasma_edges, order)
    r = points.ravel()
    wt = weights.ravel()
    f = eq.at(r)
    xi, dxi, eta = fld.xi(r), fld.dxi(r), fld.eta(r)
    J = TWO_PI_SQ * float(np.sum(wt * f.rho * (xi * xi + eta * eta) * r))
    E = TWO_PI_SQ * float(np.sum(wt * axisymmetric_potential(f, eq.gamma) * xi * xi * r))
    stiff = eq.gamma * f.p + f.B**2
    ratio = np.where(stiff > 0.0, f.B**2 / np.where(stiff > 0.0, stiff, 1.0), 0.0)
    square = (k * eta - dxi - xi / r + 2.0 * ratio * xi / r) ** 2
    comp = TWO_PI_SQ * float(np.sum(wt * stiff * square * r))
    return FamilyMember(float(k), J, E, comp)


def energy_of_member(eq, alpha, w, k, panels=64):
    """Full axisymmetric energy of a member through the energy module."""
    fld = build_test_family(eq, alpha, w, k, panels)
    return assemble_E0k(eq, ModeIndex(0, k), fld, order=8)


def _slope(k, values):
    return float(np.polyfit(np.log(k), np.log(values), 1)[0])


def expected_exponents(beta, gamma, alpha):
    """Predicted power laws of ``J``, ``-E`` and ``-lambda_upper`` in ``k``."""
    j_exp = -alpha - alpha * beta / gamma
    e_exp = -alpha - alpha * (beta - 1.0)
    return {"J": j_exp, "E": e_exp, "lambda": e_exp - j_exp}


@dataclass
class ScalingStudy:
    alpha: float
    w: BumpFunction
    k_list: np.ndarray
    members: list
    window: tuple
    beta: Optional[float] = None
    gamma: Optional[float] = None
    tolerance: float = 0.05
    fitted: dict = field(default_factory=dict)

    @property
    def lambda_upper(self):
        return np.array([m.lambda_upper for m in self.members])

    @property
    def J_values(self):
        return np.array([m.J_value for m in self.members])

    @property
    def E_values(self):
        return np.array([m.E_value for m in self.members])

    @property
    def fitted_exponent(self):
        return self.fitted["lambda"]

    @property
    def expected(self):
        if self.beta is None:
            return None
        return expected_exponents(self.beta, self.gamma, self.alpha)

    def fit(self, quantity, k_min=None, k_max=None):
        """Log-log slope of ``J``, ``-E`` or ``-lambda_upper`` over ``[k_min, k_max]``."""
        k = self.k_list
        lo = k.min() if k_min is None else k_min
        hi = k.max() if k_max is None else k_max
        sel = (k >= lo) & (k <= hi)
        values = {"J": self.J_values, "E": -self.E_values, "lambda": -self.lambda_upper}[quantity]
        return _slope(k[sel], values[sel])

    @property
    def verdict(self):
        return "divergent" if self.fitted_exponent > self.tolerance else "bounded"

    def rows(self):
        return [{"k": m.k, "J_value": m.J_value, "E_value": m.E_value,
                 "lambda_upper": m.lambda_upper} for m in self.members]

    def summary(self):
        out = {"alpha": self.alpha, "w": self.w.describe(), "k_list": [float(k) for k in self.k_list],
               "fit_window": list(self.window), "fitted_exponents": dict(self.fitted),
               "verdict": self.verdict}
        if self.expected is not None:
            out["expected_exponents"] = self.expected
            out["expected_verdict"] = "divergent" if self.expected["lambda"] > 0.0 else "bounded"
        return out


def fit_scaling_exponent(eq, alpha, w=None, k_list=None, threads=1, panels=64, tolerance=0.05):
    """Evaluate the family on ``k_list`` and fit exponents over its top decade.

    Raises ``SignFlip`` if ``lambda_upper`` is not negative inside the
    fitting window.
    """
    w = BumpFunction() if w is None else w
    k_list = np.array([2.0**p for p in DEFAULT_POWERS] if k_list is None else k_list, dtype=float)
    if k_list.size < 2 or np.any(np.diff(k_list) <= 0.0):
        raise ValueError("k_list must be increasing with at least two entries")

    def one(k):
        return evaluate_member(eq, alpha, w, k, panels)

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            members = list(pool.map(one, k_list))
    else:
        members = [one(k) for k in k_list]
    lam = np.array([m.lambda_upper for m in members])
    window = (k_list.max() / 10.0, k_list.max())
    sel = k_list >= window[0]
    if sel.sum() < 2:
        sel[-2:] = True
    if np.any(lam[sel] >= 0.0):
        bad = k_list[sel][lam[sel] >= 0.0]
        raise SignFlip(f"lambda_upper is not negative at k = {bad.tolist()}")
    prof = eq.profile
    study = ScalingStudy(alpha, w, k_list, members, (float(k_list[sel][0]), float(k_list[sel][-1])),
                         getattr(prof, "beta", None), eq.gamma, tolerance)
    for name, values in (("J", study.J_values), ("E", -study.E_values), ("lambda", -lam)):
        study.fitted[name] = _slope(k_list[sel], values[sel])
    return study
