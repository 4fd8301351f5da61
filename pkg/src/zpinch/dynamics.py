"""Time integration of the linearized single-mode system ``M a'' = -K a``.

The spatial operators are the ones used for the growth-rate problem, so
an unstable eigenvector grows like ``cosh(mu t)`` with the same ``mu``.
Unknowns that carry no mass are slaved to the rest through the static
condensation ``K_bb a_b = -K_ba a_a``.
"""

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse.linalg as spla

from .energy import TrialField, _as_mode
from .errors import InsufficientGrowth, StabilityViolation
from .spectrum import SpectralResult, assemble_operators


class CondensedSystem:
    """Mass-carrying block of ``(K, M)`` with massless unknowns eliminated."""

    def __init__(self, ops):
        self.ops = ops
        K, M = ops.K.tocsr(), ops.M.tocsr()
        row_mass = np.asarray(abs(M).sum(axis=1)).ravel()
        self.massive = row_mass > 0.0
        a, b = self.massive, ~self.massive
        self.K_aa = K[a][:, a].tocsc()
        self.M_aa = M[a][:, a].tocsc()
        self._mass_solve = spla.factorized(self.M_aa)
        if np.any(b):
            self.K_ab = K[a][:, b].tocsc()
            self.K_bb = K[b][:, b].tocsc()
            self._slave_solve = spla.factorized(self.K_bb)
        else:
            self.K_ab = None

    @property
    def size(self):
        return int(np.count_nonzero(self.massive))

    def slaved(self, a):
        """Massless unknowns that minimize the energy for given ``a``."""
        if self.K_ab is None:
            return np.zeros(0)
        return -self._slave_solve(self.K_ab.T @ a)

    def stiffness(self, a):
        out = self.K_aa @ a
        if self.K_ab is not None:
            out = out + self.K_ab @ self.slaved(a)
        return out

    def acceleration(self, a):
        return -self._mass_solve(self.stiffness(a))

    def full(self, a):
        x = np.zeros(len(self.massive))
        x[self.massive] = a
        if self.K_ab is not None:
            x[~self.massive] = self.slaved(a)
        return x

    def restrict(self, x):
        return np.asarray(x, dtype=float)[self.massive]

    def energy(self, a, b=None):
        """Bilinear ``a.K b`` of the condensed stiffness."""
        b = a if b is None else b
        return float(a @ self.stiffness(b))

    def mass(self, a, b=None):
        b = a if b is None else b
        return float(a @ (self.M_aa @ b))

    def largest_frequency_squared(self):
        """Largest eigenvalue of the condensed pencil (ARPACK, with a margin)."""
        n = self.size
        op = spla.LinearOperator((n, n), matvec=lambda v: -self.acceleration(v), dtype=float)
        try:
            # fixed start vector so the step size is reproducible
            start = np.ones(n)
            val = spla.eigs(op, k=1, which="LM", v0=start, return_eigenvectors=False, tol=1e-6,
                            maxiter=5000)
            return float(np.max(np.abs(val))) * 1.02
        except spla.ArpackNoConvergence:
            v = np.random.default_rng(0).standard_normal(n)
            lam = 0.0
            for _ in range(500):
                w = -self.acceleration(v)
                lam = float(np.linalg.norm(w) / np.linalg.norm(v))
                v = w / np.linalg.norm(w)
            return lam * 1.1


class LeapfrogIntegrator:
    """Central differences ``a+ = 2a - a- + dt^2 (-M^-1 K a)``.

    The staggered quantity
    ``H = 1/2 v.M v + 1/2 a_n.K a_{n+1}``, ``v = (a_{n+1} - a_n)/dt``,
    is conserved exactly by the recursion (up to roundoff).
    """

    def __init__(self, system, dt):
        self.system = system
        self.dt = float(dt)

    def step(self, prev, curr):
        return 2.0 * curr - prev + self.dt**2 * self.system.acceleration(curr)

    def run(self, prev, curr, steps):
        for _ in range(steps):
            prev, curr = curr, self.step(prev, curr)
        return prev, curr

    def staggered_energy(self, curr, nxt):
        v = (nxt - curr) / self.dt
        return 0.5 * self.system.mass(v) + 0.5 * self.system.energy(curr, nxt)


@dataclass
class ModeTrajectory:
    """Sampled solution and its energy ledgers.

    ``kinetic`` and ``potential`` are ``1/2 v.M v`` and ``1/2 a.K a`` at the
    sample instants with centred velocities; ``total`` is their sum.
    ``ledger`` is the staggered invariant of the integrator.
    """

    mode: object
    times: np.ndarray
    states: np.ndarray
    velocities: np.ndarray
    kinetic: np.ndarray
    potential: np.ndarray
    ledger: np.ndarray
    dt: float
    steps: int
    final_pair: tuple = field(repr=False, default=None)
    system: object = field(repr=False, default=None)

    @property
    def total(self):
        return self.kinetic + self.potential

    @property
    def amplitude(self):
        """``sqrt(a.M a)`` at each sample."""
        return np.sqrt(np.einsum("ij,ij->i", self.states, (self.system.M_aa @ self.states.T).T))

    @property
    def log_norm(self):
        with np.errstate(divide="ignore"):
            return 0.5 * np.log(self.kinetic)

    def ledger_drift(self):
        """Largest change of the staggered invariant relative to its start."""
        scale = abs(self.ledger[0])
        if scale == 0.0:
            scale = max(float(np.max(np.abs(self.kinetic))), 1e-300)
        return float(np.max(np.abs(self.ledger - self.ledger[0])) / scale)

    def collocated_drift(self):
        scale = abs(self.total[0])
        if scale == 0.0:
            scale = max(float(np.max(np.abs(self.kinetic))), 1e-300)
        return float(np.max(np.abs(self.total - self.total[0])) / scale)

    def field(self, index):
        x = self.system.full(self.states[index])
        return self.system.ops.field(x)

    def rows(self):
        return [{"t": t, "kinetic": k, "potential": p, "total": k + p, "log_norm": ln}
                for t, k, p, ln in zip(self.times, self.kinetic, self.potential, self.log_norm)]


def project(ops, initial):
    """Coefficient vector of ``initial`` on the finite-element basis of ``ops``.

    Accepts a ``SpectralResult``, a coefficient vector, or a ``TrialField``
    (sampled at nodes for ``xi`` and at cell midpoints for ``eta, zeta``).
    """
    if isinstance(initial, SpectralResult):
        initial = initial.coefficients
    if isinstance(initial, TrialField):
        nodes = ops.nodes
        mids = 0.5 * (nodes[:-1] + nodes[1:])
        xi = np.asarray(initial.xi(nodes), dtype=float)
        xi[0] = 0.0
        cols = [np.asarray(initial.eta(mids), dtype=float)]
        if ops.components == 3:
            cols.append(np.asarray(initial.zeta(mids), dtype=float))
        c = ops.components
        full = np.zeros(len(mids) * c + 1)
        full[0::c] = xi
        for j, col in enumerate(cols, start=1):
            full[j::c][: len(mids)] = col
        return full[1:][ops.active]
    x = np.asarray(initial, dtype=float)
    if x.shape != (ops.size,):
        raise ValueError(f"expected {ops.size} coefficients, got {x.shape}")
    return x


def evolve_mode(eq, mode, initial, t_end, dt=None, velocity=None, grid=64, ops=None,
                samples=2000, ledger_tol=1e-6, courant=0.5):
    """Integrate ``M a'' = -K a`` from ``initial`` (zero velocity by default).

    ``dt`` defaults to ``courant`` times the stability limit
    ``2 / sqrt(omega_max^2)``; a larger value raises ``StabilityViolation``,
    as does a drift of the staggered ledger beyond ``ledger_tol``.
    """
    mode = _as_mode(mode)
    if ops is None:
        if isinstance(initial, SpectralResult):
            ops = initial.operators
        else:
            ops = assemble_operators(eq, mode, grid)
    system = CondensedSystem(ops)
    limit = 2.0 / np.sqrt(system.largest_frequency_squared())
    if dt is None:
        dt = courant * limit
    if dt >= limit:
        raise StabilityViolation(f"dt={dt:.3e} exceeds the stability limit {limit:.3e}")
    a0 = system.restrict(project(ops, initial))
    v0 = np.zeros_like(a0) if velocity is None else system.restrict(project(ops, velocity))
    steps = max(int(np.ceil(t_end / dt)), 1)
    stride = max(steps // samples, 1)
    integ = LeapfrogIntegrator(system, dt)

    # a_{-1} from a backward Taylor step keeps the start time-symmetric
    prev = a0 - dt * v0 + 0.5 * dt**2 * system.acceleration(a0)
    curr = a0
    nxt = integ.step(prev, curr)
    times, states, vels, kin, pot, ledger = [], [], [], [], [], []
    for n in range(steps + 1):
        if n % stride == 0 or n == steps:
            v = (nxt - prev) / (2.0 * dt)
            times.append(n * dt)
            states.append(curr.copy())
            vels.append(v)
            kin.append(0.5 * system.mass(v))
            pot.append(0.5 * system.energy(curr))
            ledger.append(integ.staggered_energy(curr, nxt))
        if n == steps:
            break
        prev, curr = curr, nxt
        nxt = integ.step(prev, curr)
    traj = ModeTrajectory(mode, np.array(times), np.array(states), np.array(vels),
                          np.array(kin), np.array(pot), np.array(ledger), dt, steps,
                          (prev, curr), system)
    if np.any(a0) and traj.ledger_drift() > ledger_tol:
        raise StabilityViolation(f"energy ledger drifted by {traj.ledger_drift():.3e}")
    return traj


def integrate_back(traj):
    """Run the recursion backwards from the final pair; returns the recovered ``a(0)``."""
    integ = LeapfrogIntegrator(traj.system, traj.dt)
    prev, curr = traj.final_pair
    # after N - 1 backward steps from (a_N, a_{N-1}) the current iterate is a_0
    prev, curr = integ.run(curr, prev, traj.steps - 1)
    return curr


@dataclass(frozen=True)
class GrowthFit:
    mu: float
    stderr: float
    interval: tuple
    window: tuple


def fit_growth_rate(traj, window=0.4, points=200, confidence=0.95):
    """Least-squares slope of ``log sqrt(kinetic)`` over the final ``window`` of the run.

    The window is sampled geometrically in time, denser toward its end.
    """
    from scipy import stats

    amp = traj.amplitude
    if amp[0] == 0.0 or not np.all(np.isfinite(amp)) or np.max(amp) < 10.0 * amp[0]:
        raise InsufficientGrowth("amplitude never exceeded ten times its initial value")
    t = traj.times
    t_start = t[-1] * (1.0 - window)
    geo = t[-1] - (t[-1] - t_start) * np.geomspace(1.0, 1e-3, points)
    idx = np.unique(np.clip(np.searchsorted(t, geo), 0, len(t) - 1))
    idx = idx[traj.kinetic[idx] > 0.0]
    if len(idx) < 3:
        raise InsufficientGrowth("too few samples in the fitting window")
    x, y = t[idx], traj.log_norm[idx]
    fit = stats.linregress(x, y)
    spread = stats.t.ppf(0.5 + confidence / 2.0, len(idx) - 2) * fit.stderr
    return GrowthFit(float(fit.slope), float(fit.stderr),
                     (float(fit.slope - spread), float(fit.slope + spread)), (float(x[0]), float(x[-1])))
