"""Equilibrium pressure profiles on ``[0, r0]``.

Every profile exposes ``p``, ``dp`` and ``d2p`` as vectorized callables
together with the adiabatic exponent ``gamma``, entropy constant ``A``
and plasma radius ``r0``.  Current-driven profiles additionally expose
``magnetic_field`` and ``current`` so the equilibrium can skip the
pressure-to-field quadrature.
"""

import csv
from pathlib import Path

import numpy as np
from scipy.interpolate import CubicSpline

from .errors import ConfigError
from .quadrature import CumulativeIntegral, graded_panels


def _check_thermo(gamma, A, r0):
    if not gamma > 1.0:
        raise ConfigError(f"gamma must exceed 1, got {gamma}")
    if not A > 0.0:
        raise ConfigError(f"A must be positive, got {A}")
    if not r0 > 0.0:
        raise ConfigError(f"r0 must be positive, got {r0}")


class PressureProfile:
    """Common interface; subclasses fill in the pressure law."""

    kind = "abstract"
    beta = None
    C = None

    def __init__(self, gamma=5.0 / 3.0, A=1.0, r0=1.0):
        _check_thermo(gamma, A, r0)
        self.gamma = float(gamma)
        self.A = float(A)
        self.r0 = float(r0)

    def p(self, r):
        raise NotImplementedError

    def dp(self, r):
        raise NotImplementedError

    def d2p(self, r):
        raise NotImplementedError

    def log_p(self, r):
        with np.errstate(divide="ignore"):
            return np.log(self.p(r))

    def log_abs_dp(self, r):
        with np.errstate(divide="ignore"):
            return np.log(np.abs(self.dp(r)))

    def p_over_dp(self, r):
        with np.errstate(divide="ignore", invalid="ignore"):
            return self.p(r) / self.dp(r)

    def density(self, r):
        p = np.clip(self.p(r), 0.0, None)
        return (p / self.A) ** (1.0 / self.gamma)

    def with_amplitude(self, factor):
        """Copy with the pressure multiplied by ``factor``."""
        raise NotImplementedError

    def to_config(self):
        raise NotImplementedError

    def __repr__(self):
        return f"{type(self).__name__}({self.to_config()})"


class PowerLawProfile(PressureProfile):
    """``p = C (1 - (r/r0)^2)^beta``.

    Even in ``r`` so the axis is regular, and equal to
    ``C (2/r0)^beta (r0 - r)^beta`` to leading order at the edge.
    """

    kind = "power"

    def __init__(self, C=1.0, beta=2.0, gamma=5.0 / 3.0, A=1.0, r0=1.0):
        super().__init__(gamma, A, r0)
        if C < 0.0:
            raise ConfigError("C must be nonnegative")
        if beta < 1.0:
            raise ConfigError("beta must be at least 1")
        self.C = float(C)
        self.beta = float(beta)

    def _w(self, r):
        x = np.asarray(r, dtype=float) / self.r0
        return np.clip(1.0 - x * x, 0.0, None)

    def p(self, r):
        return self.C * self._w(r) ** self.beta

    def dp(self, r):
        r = np.asarray(r, dtype=float)
        w = self._w(r)
        b = self.beta
        with np.errstate(divide="ignore", invalid="ignore"):
            lower = np.where(w > 0.0, w ** (b - 1.0), 1.0 if b == 1.0 else 0.0)
        return -2.0 * b * self.C * r / self.r0**2 * lower

    def d2p(self, r):
        r = np.asarray(r, dtype=float)
        w = self._w(r)
        b, c, a2 = self.beta, self.C, self.r0**2
        with np.errstate(divide="ignore", invalid="ignore"):
            w1 = np.where(w > 0.0, w ** (b - 1.0), 1.0 if b == 1.0 else 0.0)
            if b == 1.0:
                w2 = np.zeros_like(w)
            elif b >= 2.0:
                w2 = np.where(w > 0.0, w ** (b - 2.0), 1.0 if b == 2.0 else 0.0)
            else:
                w2 = np.where(w > 0.0, w ** (b - 2.0), np.inf)
            return -2.0 * b * c / a2 * w1 + 4.0 * b * (b - 1.0) * c * r * r / a2**2 * w2

    def log_p(self, r):
        with np.errstate(divide="ignore"):
            return np.log(self.C) + self.beta * np.log(self._w(r))

    def log_abs_dp(self, r):
        r = np.asarray(r, dtype=float)
        with np.errstate(divide="ignore"):
            return (
                np.log(2.0 * self.beta * self.C * r / self.r0**2)
                + (self.beta - 1.0) * np.log(self._w(r))
            )

    def p_over_dp(self, r):
        r = np.asarray(r, dtype=float)
        with np.errstate(divide="ignore", invalid="ignore"):
            return -self._w(r) * self.r0**2 / (2.0 * self.beta * r)

    def with_amplitude(self, factor):
        return PowerLawProfile(self.C * factor, self.beta, self.gamma, self.A, self.r0)

    def to_config(self):
        return {"kind": self.kind, "C": self.C, "beta": self.beta,
                "gamma": self.gamma, "A": self.A, "r0": self.r0}


class UniformCurrentProfile(PowerLawProfile):
    """Constant axial current ``J0``: ``B = J0 r / 2`` and ``p = J0^2 (r0^2 - r^2) / 4``."""

    kind = "uniform_current"

    def __init__(self, J0=2.0, gamma=5.0 / 3.0, A=1.0, r0=1.0):
        self.J0 = float(J0)
        super().__init__(C=self.J0**2 * r0**2 / 4.0, beta=1.0, gamma=gamma, A=A, r0=r0)

    def with_amplitude(self, factor):
        return UniformCurrentProfile(self.J0 * np.sqrt(factor), self.gamma, self.A, self.r0)

    def to_config(self):
        return {"kind": self.kind, "J0": self.J0, "gamma": self.gamma,
                "A": self.A, "r0": self.r0}


class ExponentialProfile(PressureProfile):
    """``p = C exp(1 - w^(-beta))`` with ``w = 1 - (r/r0)^2``.

    Flat to all orders at the edge; ``p(0) = C``.
    """

    kind = "exponential"

    def __init__(self, C=1.0, beta=1.0, gamma=5.0 / 3.0, A=1.0, r0=1.0):
        super().__init__(gamma, A, r0)
        if C <= 0.0 or beta <= 0.0:
            raise ConfigError("exponential profile needs C > 0 and beta > 0")
        self.C = float(C)
        self.beta = float(beta)

    def _w(self, r):
        x = np.asarray(r, dtype=float) / self.r0
        return np.clip(1.0 - x * x, 0.0, None)

    def log_p(self, r):
        w = self._w(r)
        with np.errstate(divide="ignore"):
            return np.log(self.C) + 1.0 - w ** (-self.beta)

    def p(self, r):
        return np.exp(self.log_p(r))

    def _chain(self, r):
        # exponent g = 1 - w^-b, g' and g'' in r
        r = np.asarray(r, dtype=float)
        w = self._w(r)
        b, a2 = self.beta, self.r0**2
        with np.errstate(divide="ignore", invalid="ignore"):
            dw, d2w = -2.0 * r / a2, -2.0 / a2
            g1 = b * w ** (-b - 1.0) * dw
            g2 = -b * (b + 1.0) * w ** (-b - 2.0) * dw * dw + b * w ** (-b - 1.0) * d2w
        return w, g1, g2

    def dp(self, r):
        w, g1, _ = self._chain(r)
        with np.errstate(invalid="ignore"):
            out = self.p(r) * g1
        return np.where(w > 0.0, out, 0.0)

    def d2p(self, r):
        w, g1, g2 = self._chain(r)
        with np.errstate(invalid="ignore", over="ignore"):
            out = self.p(r) * (g1 * g1 + g2)
        return np.where(w > 0.0, out, 0.0)

    def log_abs_dp(self, r):
        r = np.asarray(r, dtype=float)
        w = self._w(r)
        with np.errstate(divide="ignore"):
            return (self.log_p(r) + np.log(self.beta) - (self.beta + 1.0) * np.log(w)
                    + np.log(2.0 * r / self.r0**2))

    def p_over_dp(self, r):
        r = np.asarray(r, dtype=float)
        w = self._w(r)
        with np.errstate(divide="ignore", invalid="ignore"):
            return -(w ** (self.beta + 1.0)) * self.r0**2 / (2.0 * self.beta * r)

    def density(self, r):
        # from the logarithm so that rho outlives p near the edge
        with np.errstate(invalid="ignore"):
            return np.exp((self.log_p(r) - np.log(self.A)) / self.gamma)

    def with_amplitude(self, factor):
        return ExponentialProfile(self.C * factor, self.beta, self.gamma, self.A, self.r0)

    def to_config(self):
        return {"kind": self.kind, "C": self.C, "beta": self.beta,
                "gamma": self.gamma, "A": self.A, "r0": self.r0}


class TabulatedProfile(PressureProfile):
    """Cubic-spline interpolant of sampled ``(r, p)`` pairs.

    The first sample must sit on the axis and the last at ``r0``; the
    spline is clamped to zero slope on the axis.
    """

    kind = "tabulated"

    def __init__(self, radii, pressure, gamma=5.0 / 3.0, A=1.0, source=None):
        radii = np.asarray(radii, dtype=float)
        pressure = np.asarray(pressure, dtype=float)
        if radii.ndim != 1 or radii.shape != pressure.shape or radii.size < 4:
            raise ConfigError("tabulated profile needs at least 4 (r, p) samples")
        if radii[0] != 0.0 or np.any(np.diff(radii) <= 0.0):
            raise ConfigError("tabulated radii must start at 0 and increase strictly")
        if np.any(pressure < 0.0):
            raise ConfigError("tabulated pressure must be nonnegative")
        super().__init__(gamma, A, radii[-1])
        self.radii = radii
        self.samples = pressure
        self.source = source
        self._spline = CubicSpline(radii, pressure, bc_type=((1, 0.0), "not-a-knot"))
        self._d1 = self._spline.derivative(1)
        self._d2 = self._spline.derivative(2)

    @classmethod
    def from_csv(cls, path, gamma=5.0 / 3.0, A=1.0):
        path = Path(path)
        if not path.exists():
            raise ConfigError(f"tabulated profile file {path} not found")
        rows = []
        with path.open(newline="") as fh:
            for row in csv.reader(fh):
                if not row or row[0].strip().startswith("#"):
                    continue
                try:
                    rows.append((float(row[0]), float(row[1])))
                except (ValueError, IndexError):
                    if rows:
                        raise ConfigError(f"bad row {row!r} in {path}") from None
        if not rows:
            raise ConfigError(f"no samples in {path}")
        data = np.array(rows)
        return cls(data[:, 0], data[:, 1], gamma=gamma, A=A, source=str(path))

    def p(self, r):
        return np.clip(self._spline(np.asarray(r, dtype=float)), 0.0, None)

    def dp(self, r):
        return self._d1(np.asarray(r, dtype=float))

    def d2p(self, r):
        return self._d2(np.asarray(r, dtype=float))

    def with_amplitude(self, factor):
        return TabulatedProfile(self.radii, self.samples * factor, self.gamma, self.A, self.source)

    def to_config(self):
        cfg = {"kind": self.kind, "gamma": self.gamma, "A": self.A, "r0": self.r0}
        if self.source is not None:
            cfg["path"] = self.source
        else:
            cfg["r"] = self.radii.tolist()
            cfg["p"] = self.samples.tolist()
        return cfg


class CurrentProfile(PressureProfile):
    """Equilibrium specified by the axial current density ``J(r)``.

    ``B = (1/r) int_0^r s J ds`` and ``p(r) = int_r^r0 J B ds`` so the
    pressure vanishes at ``r0`` by construction.  A current confined to
    ``(a, b)`` with ``b < r0`` leaves ``p = 0`` on ``[b, r0]``; such
    profiles are only admissible in relaxed mode.
    """

    kind = "current"

    def __init__(self, current, dcurrent, gamma=5.0 / 3.0, A=1.0, r0=1.0,
                 panels=512, description=None):
        super().__init__(gamma, A, r0)
        self._J = current
        self._dJ = dcurrent
        self.description = description or {}
        edges = graded_panels(0.0, r0, panels, grading=1.0)
        self._flux = CumulativeIntegral(lambda s: s * self._J(s), edges, order=10)
        self._work = CumulativeIntegral(lambda s: self._J(s) * self.magnetic_field(s),
                                        edges, order=10)

    @classmethod
    def polynomial(cls, coefficients, gamma=5.0 / 3.0, A=1.0, r0=1.0):
        """``J(r) = sum_i c_i r^i``."""
        poly = np.polynomial.Polynomial(coefficients)
        deriv = poly.deriv()
        return cls(lambda r: poly(np.asarray(r, dtype=float)),
                   lambda r: deriv(np.asarray(r, dtype=float)),
                   gamma, A, r0,
                   description={"kind": "current_polynomial",
                                "coefficients": [float(c) for c in coefficients]})

    @classmethod
    def bump(cls, inner, outer, amplitude=1.0, gamma=5.0 / 3.0, A=1.0, r0=1.0):
        """Smooth current confined to ``(inner, outer)``."""
        if not 0.0 <= inner < outer <= r0:
            raise ConfigError("bump support must satisfy 0 <= inner < outer <= r0")
        centre, half = 0.5 * (inner + outer), 0.5 * (outer - inner)

        def current(r):
            u = (np.asarray(r, dtype=float) - centre) / half
            inside = np.abs(u) < 1.0
            safe = np.where(inside, u, 0.0)
            return np.where(inside, amplitude * np.exp(1.0 - 1.0 / (1.0 - safe**2)), 0.0)

        def dcurrent(r):
            u = (np.asarray(r, dtype=float) - centre) / half
            inside = np.abs(u) < 1.0
            safe = np.where(inside, u, 0.0)
            slope = -2.0 * safe / (1.0 - safe**2) ** 2 / half
            return np.where(inside, current(r) * slope, 0.0)

        return cls(current, dcurrent, gamma, A, r0,
                   description={"kind": "current_bump", "inner": inner,
                                "outer": outer, "amplitude": amplitude})

    def current(self, r):
        return self._J(np.asarray(r, dtype=float))

    def magnetic_field(self, r):
        r = np.asarray(r, dtype=float)
        flux = self._flux(r)
        with np.errstate(divide="ignore", invalid="ignore"):
            return np.where(r > 0.0, flux / np.where(r > 0.0, r, 1.0), 0.0)

    def p(self, r):
        return np.clip(self._work.total - self._work(r), 0.0, None)

    def dp(self, r):
        return -self.current(r) * self.magnetic_field(r)

    def d2p(self, r):
        r = np.asarray(r, dtype=float)
        B = self.magnetic_field(r)
        J = self.current(r)
        with np.errstate(divide="ignore", invalid="ignore"):
            dB = np.where(r > 0.0, J - B / np.where(r > 0.0, r, 1.0), 0.5 * J)
        return -self._dJ(r) * B - J * dB

    def with_amplitude(self, factor):
        scale = np.sqrt(factor)
        J, dJ = self._J, self._dJ
        return CurrentProfile(lambda r: scale * J(r), lambda r: scale * dJ(r),
                              self.gamma, self.A, self.r0, description=self.description)

    def to_config(self):
        cfg = dict(self.description)
        cfg.update({"gamma": self.gamma, "A": self.A, "r0": self.r0})
        return cfg


def profile_from_config(block, base_dir=None):
    """Build a profile from a config mapping (see README for keys)."""
    if not isinstance(block, dict) or "kind" not in block:
        raise ConfigError("profile block must be a mapping with a 'kind' key")
    cfg = dict(block)
    kind = cfg.pop("kind")
    for key in ("rw", "grid"):
        cfg.pop(key, None)
    thermo = {k: cfg.pop(k) for k in ("gamma", "A", "r0") if k in cfg}
    try:
        if kind in ("power", "power_law", "power-law"):
            return PowerLawProfile(**cfg, **thermo)
        if kind in ("uniform_current", "parabolic"):
            if "C" in cfg:
                r0 = thermo.get("r0", 1.0)
                cfg["J0"] = 2.0 * np.sqrt(cfg.pop("C")) / r0
            cfg.pop("beta", None)
            return UniformCurrentProfile(**cfg, **thermo)
        if kind == "exponential":
            return ExponentialProfile(**cfg, **thermo)
        if kind == "tabulated":
            thermo.pop("r0", None)
            if "path" in cfg:
                path = Path(cfg.pop("path"))
                if base_dir is not None and not path.is_absolute():
                    path = Path(base_dir) / path
                return TabulatedProfile.from_csv(path, **thermo)
            return TabulatedProfile(cfg.pop("r"), cfg.pop("p"), **thermo)
        if kind == "current_polynomial":
            return CurrentProfile.polynomial(cfg.pop("coefficients"), **thermo)
        if kind == "current_bump":
            return CurrentProfile.bump(cfg.pop("inner"), cfg.pop("outer"),
                                       cfg.pop("amplitude", 1.0), **thermo)
    except (TypeError, KeyError) as exc:
        raise ConfigError(f"bad {kind} profile block: {exc}") from exc
    raise ConfigError(f"unknown profile kind {kind!r}")
