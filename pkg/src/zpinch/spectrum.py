"""Growth rates from the constrained minimization of ``E / J``.

The quadratic forms are discretized with piecewise-linear ``xi`` (zero
on the axis) and piecewise-constant ``eta, zeta``.  The vacuum enters
through a single boundary stiffness ``c(m, k) xi(r0)^2``.  The smallest
generalized eigenvalue of ``K x = lambda M x`` is found by shifted
subspace iteration, where every shift is certified to lie below the
spectrum by a successful banded Cholesky factorization of ``K - sigma M``.
"""

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp
from scipy.interpolate import CubicSpline
from scipy.special import iv, ivp, kv, kvp

from .energy import TWO_PI_SQ, ModeIndex, TrialField, _as_mode, energy_terms, mass_terms
from .errors import BVPFailure, NonConvergedGrid, SolverStall, ZPinchError
from .grid import GridSpec, radial_nodes
from .quadrature import DEFAULT_ORDER, hermite_basis, hermite_eval, panel_rule

DENSE_LIMIT = 200


# --- vacuum ---------------------------------------------------------------------


@dataclass(frozen=True)
class VacuumResponse:
    """Boundary stiffness of the vacuum region for one mode.

    ``c`` multiplies ``xi(r0)^2``.  ``unit_energy`` is the minimal vacuum
    energy when ``Q(r0) = 1``, attained by the piecewise-cubic profile
    with nodal values ``q_unit`` and slopes ``dq_unit`` on ``nodes``.
    """

    mode: ModeIndex
    c: float
    unit_energy: float
    nodes: np.ndarray
    q_unit: np.ndarray
    dq_unit: np.ndarray
    coupling: float  # Q(r0) per unit xi(r0)

    @property
    def edge_slope(self):
        """``(r Q)'(r0)`` of the unit solution."""
        return float(self.q_unit[0] + self.nodes[0] * self.dq_unit[0])

    def unit_profile(self, r, derivative=False):
        return hermite_eval(self.nodes, self.q_unit, self.dq_unit, r, derivative)

    def q_theta(self, r=None):
        """Azimuthal and axial components of the unit solution."""
        r = self.nodes if r is None else np.asarray(r, dtype=float)
        du = self.unit_profile(r) + r * self.unit_profile(r, derivative=True)
        S = self.mode.m**2 + self.mode.k**2 * r * r
        return -self.mode.m * du / S, -self.mode.k * r * du / S

    def edge_q_theta(self, xi_edge):
        S0 = self.mode.m**2 + self.mode.k**2 * self.nodes[0] ** 2
        return -self.mode.m * self.coupling * xi_edge * self.edge_slope / S0


def _vacuum_hermite(mode, r0, rw, n):
    nodes = np.linspace(r0, rw, n + 1)
    points, weights = panel_rule(nodes, DEFAULT_ORDER)
    h = np.diff(nodes)[:, None]
    vals, ders = hermite_basis((points - nodes[:-1, None]) / h, h)
    S = mode.m**2 + mode.k**2 * points**2
    # Q^2 r + (Q + r Q')^2 r / S
    flux = [v + points * d for v, d in zip(vals, ders)]
    local = np.zeros((n, 4, 4))
    for a in range(4):
        for b in range(a, 4):
            entry = np.sum(weights * points * (vals[a] * vals[b] + flux[a] * flux[b] / S), axis=1)
            local[:, a, b] = entry
            local[:, b, a] = entry
    size = 2 * (n + 1)
    dofs = 2 * np.arange(n)[:, None] + np.arange(4)[None, :]
    # upper banded storage, bandwidth 3
    ab = np.zeros((4, size))
    for a in range(4):
        for b in range(4):
            rows, cols = dofs[:, a], dofs[:, b]
            upper = cols >= rows
            np.add.at(ab, (3 + rows[upper] - cols[upper], cols[upper]), local[upper, a, b])
    full = np.zeros(size)
    full[0] = 1.0
    # unknowns: every dof except Q(r0) and Q(rw)
    free = np.ones(size, dtype=bool)
    free[0] = free[size - 2] = False
    dense_cols = np.zeros((size, 1))
    dense_cols[0, 0] = 1.0
    coupling = _banded_matvec(ab, dense_cols[:, 0])
    idx = np.flatnonzero(free)
    sub = _banded_submatrix(ab, idx)
    try:
        inner = sla.solveh_banded(sub, -coupling[idx])
    except (sla.LinAlgError, ValueError) as exc:
        raise BVPFailure(f"vacuum solve failed for mode {mode}: {exc}") from exc
    full[idx] = inner
    energy = float(full @ _banded_matvec(ab, full))
    return nodes, full[0::2], full[1::2], TWO_PI_SQ * energy


def _banded_matvec(ab, x):
    u = ab.shape[0] - 1
    n = len(x)
    y = ab[u] * x
    for d in range(1, u + 1):
        band = ab[u - d, d:]
        y[:-d] += band * x[d:]
        y[d:] += band * x[:-d]
    return y


def _banded_submatrix(ab, idx):
    u = ab.shape[0] - 1
    pos = np.full(ab.shape[1], -1)
    pos[idx] = np.arange(len(idx))
    out = np.zeros((u + 1, len(idx)))
    for d in range(u + 1):
        cols = np.arange(d, ab.shape[1])
        rows = cols - d
        keep = (pos[rows] >= 0) & (pos[cols] >= 0)
        pr, pc = pos[rows[keep]], pos[cols[keep]]
        band = pc - pr
        if np.any(band > u) or np.any(band < 0):
            raise ValueError("submatrix is not banded")
        out[u - band, pc] = ab[u - d, cols[keep]]
    return out


def vacuum_response(eq, mode, n=256):
    """Vacuum stiffness ``c(m, k)`` and the unit response profile.

    The two-point problem is solved with cubic Hermite elements on ``n``
    uniform cells; the stiffness is the exact energy of the returned
    profile, so trial fields built from it are consistent with ``c``.
    """
    mode = _as_mode(mode)
    if mode.m == 0:
        raise ValueError("vacuum response is only defined for m != 0")
    nodes, q, dq, unit = _vacuum_hermite(mode, eq.r0, eq.rw, n)
    coupling = mode.m * eq.bhat_coefficient / eq.r0**2
    return VacuumResponse(mode, coupling**2 * unit, unit, nodes, q, dq, coupling)


def euler_vacuum_solution(m, r0, rw):
    """Exact ``k = 0`` unit response ``a r^(m-1) + b r^(-m-1)`` and its energy."""
    m = abs(m)
    mat = np.array([[r0 ** (m - 1), r0 ** (-m - 1)], [rw ** (m - 1), rw ** (-m - 1)]])
    a, b = np.linalg.solve(mat, [1.0, 0.0])

    def q(r):
        r = np.asarray(r, dtype=float)
        return a * r ** (m - 1) + b * r ** (-m - 1)

    # (r Q)' at r0 for u = a r^m + b r^-m
    du = m * (a * r0 ** (m - 1) - b * r0 ** (-m - 1))
    energy = -TWO_PI_SQ * r0 * r0 * du / m**2
    return q, energy


def bessel_vacuum_solution(m, k, r0, rw):
    """Exact ``k != 0`` unit response from modified Bessel functions."""
    kk = abs(k)
    mat = np.array([[kk * ivp(m, kk * r0), kk * kvp(m, kk * r0)],
                    [kk * ivp(m, kk * rw), kk * kvp(m, kk * rw)]])
    a, b = np.linalg.solve(mat, [1.0, 0.0])

    def q(r):
        r = np.asarray(r, dtype=float)
        return kk * (a * ivp(m, kk * r) + b * kvp(m, kk * r))

    potential = a * iv(m, kk * r0) + b * kv(m, kk * r0)
    return q, -TWO_PI_SQ * r0 * potential


# --- discrete operators -------------------------------------------------------------


@dataclass
class DiscreteOperatorPair:
    """Stiffness ``K`` (twice the energy) and mass ``M`` (twice ``J``).

    Unknowns are interleaved per element as ``xi_e, eta_e[, zeta_e]``
    followed by ``xi_N``; ``xi_0 = 0`` is removed.  ``active`` marks the
    unknowns kept after dropping rows where both forms vanish.
    """

    eq: object
    mode: ModeIndex
    nodes: np.ndarray
    K: sp.csr_matrix
    M: sp.csr_matrix
    components: int
    active: np.ndarray
    vacuum: Optional[VacuumResponse]

    @property
    def size(self):
        return self.K.shape[0]

    @property
    def bandwidth(self):
        return self.components

    def banded(self, matrix):
        u = self.bandwidth
        coo = sp.triu(matrix).tocoo()
        ab = np.zeros((u + 1, matrix.shape[0]))
        ab[u + coo.row - coo.col, coo.col] = coo.data
        return ab

    def expand(self, x):
        full = np.zeros(len(self.active))
        full[self.active] = x
        return full

    def split(self, x):
        """Nodal ``xi`` (axis included) and per-element ``eta``, ``zeta``."""
        full = np.concatenate([[0.0], self.expand(x)])
        c = self.components
        n = len(self.nodes) - 1
        xi = full[0 : n * c + 1 : c]
        eta = full[1 : n * c : c]
        zeta = full[2 : n * c : c] if c == 3 else None
        return xi, eta, zeta

    def edge_index(self):
        return int(np.count_nonzero(self.active) - 1)

    def field(self, x):
        xi, eta, zeta = self.split(x)
        if self.vacuum is None:
            return TrialField.nodal(self.nodes, xi, eta, zeta)
        scale = self.vacuum.coupling * xi[-1]
        return TrialField.nodal(self.nodes, xi, eta, zeta, self.vacuum.nodes,
                                scale * self.vacuum.q_unit, scale * self.vacuum.dq_unit)


def trim_underflow_layer(eq, nodes):
    """Drop interior nodes where the density has underflowed to zero.

    Only floating-point underflow is removed (``log p`` still finite); a
    genuinely empty region keeps its nodes.
    """
    inner = nodes[1:-1]
    prof = eq.profile
    rho = prof.density(inner)
    with np.errstate(divide="ignore"):
        lost = (rho == 0.0) & np.isfinite(prof.log_p(inner))
    if not np.any(lost):
        return nodes
    return np.concatenate([[nodes[0]], inner[~lost], [nodes[-1]]])


def _element_matrices(terms, left, right, dleft, dright, weights, comps):
    n_el, n_q = left.shape
    local = np.zeros((n_el, comps + 1, comps + 1))
    for t in terms:
        vec = np.zeros((n_el, n_q, comps + 1))
        vec[..., 0] = t.xi * left + t.dxi * dleft
        vec[..., 1] = t.xi * right + t.dxi * dright
        vec[..., 2] = t.eta
        if comps == 3:
            vec[..., 3] = t.zeta
        local += np.einsum("eq,eqi,eqj->eij", weights * t.weight, vec, vec)
    return 2.0 * TWO_PI_SQ * local


def assemble_operators(eq, mode, grid=None, order=DEFAULT_ORDER, vacuum=None, vacuum_n=256):
    """Finite-element matrices for mode ``(m, k)`` on ``grid``.

    ``grid`` is a ``GridSpec``, an element count, or an explicit node array.
    """
    mode = _as_mode(mode)
    if grid is None:
        grid = GridSpec()
    if isinstance(grid, (int, np.integer)):
        grid = GridSpec(int(grid))
    nodes = radial_nodes(grid, eq.r0) if isinstance(grid, GridSpec) else np.asarray(grid, dtype=float)
    nodes = trim_underflow_layer(eq, nodes)
    n = len(nodes) - 1
    comps = 3 if mode.m else 2
    points, weights = panel_rule(nodes, order)
    f = eq.at(points.ravel())
    f = type(f)(*(a.reshape(points.shape) for a in f))
    h = np.diff(nodes)[:, None]
    left = (nodes[1:, None] - points) / h
    right = (points - nodes[:-1, None]) / h
    dleft = np.broadcast_to(-1.0 / h, points.shape)
    dright = np.broadcast_to(1.0 / h, points.shape)
    k_loc = _element_matrices(energy_terms(f, mode, eq.gamma), left, right, dleft, dright, weights, comps)
    m_loc = _element_matrices(mass_terms(f, mode), left, right, dleft, dright, weights, comps)

    e = np.arange(n)
    dofs = [e * comps, (e + 1) * comps, e * comps + 1]
    if comps == 3:
        dofs.append(e * comps + 2)
    dofs = np.stack(dofs, axis=1)
    rows = np.repeat(dofs, comps + 1, axis=1).ravel()
    cols = np.tile(dofs, (1, comps + 1)).ravel()
    size = n * comps + 1
    K = sp.coo_matrix((k_loc.ravel(), (rows, cols)), shape=(size, size)).tocsr()
    M = sp.coo_matrix((m_loc.ravel(), (rows, cols)), shape=(size, size)).tocsr()
    K = K[1:, 1:]
    M = M[1:, 1:]
    if mode.m:
        if vacuum is None:
            vacuum = vacuum_response(eq, mode, vacuum_n)
        K = K + sp.coo_matrix(([2.0 * vacuum.c], ([size - 2], [size - 2])), shape=K.shape)
    K = ((K + K.T) * 0.5).tocsr()
    M = ((M + M.T) * 0.5).tocsr()
    kd, md = K.diagonal(), M.diagonal()
    active = ~((np.abs(kd) == 0.0) & (md == 0.0))
    if not np.all(active):
        K = K[active][:, active]
        M = M[active][:, active]
    return DiscreteOperatorPair(eq, mode, nodes, K.tocsr(), M.tocsr(), comps, active,
                                vacuum if mode.m else None)


# --- eigen-solver ----------------------------------------------------------------------


@dataclass
class EigenSolution:
    value: float
    vector: np.ndarray
    second: float
    iterations: int
    method: str
    shift: float
    pair: Optional[np.ndarray] = None


def _cholesky(ops, sigma):
    ab = ops.banded(ops.K - sigma * ops.M)
    try:
        return sla.cholesky_banded(ab, lower=False)
    except sla.LinAlgError:
        return None


def count_below(ops, sigma):
    """Zero if no eigenvalue lies at or below ``sigma`` (certified), else ``None``.

    A banded Cholesky factorization of ``K - sigma M`` exists exactly
    when every eigenvalue of the pencil exceeds ``sigma``.
    """
    return 0 if _cholesky(ops, sigma) is not None else None


def _find_shift(try_factor, guess):
    """Walk a shift down from ``guess`` until ``try_factor`` succeeds."""
    margin = 0.05 * abs(guess) + 1e-3
    for _ in range(80):
        sigma = guess - margin
        factor = try_factor(sigma)
        if factor is not None:
            return sigma, factor
        margin *= 4.0
    raise SolverStall("could not find a shift below the spectrum")


def _certified_shift(ops, guess):
    return _find_shift(lambda sigma: _cholesky(ops, sigma), guess)


def dense_smallest(K, M, count=2, guess=0.0):
    """Smallest eigenpairs of ``(K, M)`` by a dense full-spectrum solve.

    A plain ``eigh(K, M)`` only resolves the low end of this pencil to
    about ``eps * lambda_max`` and breaks down when some masses are tiny.
    Instead a shift is certified by a dense Cholesky factorization of
    ``K - sigma M`` and the top of the inverted pencil ``(M, K - sigma M)``
    is read off; a second pass repeats this with a shift near the answer.
    """
    Kd, Md = K.toarray(), M.toarray()
    n = Kd.shape[0]
    count = min(count, n)

    def try_factor(sigma):
        shifted = Kd - sigma * Md
        try:
            np.linalg.cholesky(shifted)
        except np.linalg.LinAlgError:
            return None
        return shifted

    estimate = guess
    for _ in range(2):
        sigma, shifted = _find_shift(try_factor, estimate)
        nu, vecs = sla.eigh(Md, shifted)
        order = np.argsort(nu)[::-1][:count]
        vals = sigma + 1.0 / nu[order]
        estimate = float(vals[0])
    return vals, vecs[:, order], sigma


def _ritz(ops, factor, Y):
    MY = ops.M @ Y
    Z = sla.cho_solve_banded((factor, False), MY)
    Ar = Z.T @ MY
    Mr = Z.T @ (ops.M @ Z)
    theta, W = sla.eigh(0.5 * (Ar + Ar.T), 0.5 * (Mr + Mr.T))
    return theta, Z @ W


def smallest_eigenpair(ops, guess=None, tol=1e-12, vector_tol=1e-11, maxiter=400, force_iterative=False, rng=None):
    """Smallest eigenvalue of the pencil ``(K, M)`` and its eigenvector.

    Small problems use ``dense_smallest``.  Otherwise a block of three
    vectors is iterated with ``(K - sigma M)^-1 M``, Ritz values being
    read off the inverted pencil so that their error scales with
    ``lambda - sigma`` rather than with the stiffest row.  Every shift is
    certified by a banded Cholesky factorization before use.
    """
    n = ops.size
    if n < DENSE_LIMIT and not force_iterative:
        vals, vecs, sigma = dense_smallest(ops.K, ops.M, guess=0.0 if guess is None else guess)
        second = float(vals[1]) if len(vals) > 1 else np.inf
        return EigenSolution(float(vals[0]), vecs[:, 0], second, 0, "dense", sigma, vecs)
    if guess is None:
        guess = 0.0
    sigma, factor = _certified_shift(ops, guess)
    rng = np.random.default_rng(12345) if rng is None else rng
    block = min(3, n)
    Y = rng.standard_normal((n, block))
    lam_old = np.inf
    x_old = None
    moved_old = np.inf
    for it in range(1, maxiter + 1):
        theta, Y = _ritz(ops, factor, Y)
        vals = sigma + theta
        lam = float(vals[0])
        x = Y[:, 0] / np.sqrt(float(Y[:, 0] @ (ops.M @ Y[:, 0])))
        if x_old is not None:
            x = x if float(x @ (ops.M @ x_old)) >= 0.0 else -x
            d = x - x_old
            moved = np.sqrt(abs(float(d @ (ops.M @ d))))
            settled = abs(lam - lam_old) <= tol * max(abs(lam), 1e-300)
            # accept a roundoff floor once the vector stops improving
            if settled and (moved <= vector_tol or (moved <= 1e-7 and moved > 0.5 * moved_old)):
                break
            moved_old = moved
        lam_old, x_old = lam, x
        gap = float(vals[1] - vals[0]) if block > 1 else abs(lam - sigma)
        if theta[0] > 0.05 * gap and it % 2 == 0:
            trial = lam - 0.02 * gap
            new = _cholesky(ops, trial)
            if new is not None:
                sigma, factor = trial, new
    else:
        raise SolverStall(f"eigen-iteration did not converge in {maxiter} steps")
    second = float(vals[1]) if block > 1 else np.inf
    return EigenSolution(lam, Y[:, 0], second, it, "shift-invert", sigma, Y[:, :2])


# --- mode solve ---------------------------------------------------------------------------


@dataclass
class SpectralResult:
    mode: ModeIndex
    lam: float
    mu: Optional[float]
    minimizer: TrialField
    coefficients: np.ndarray
    operators: DiscreteOperatorPair = field(repr=False)
    el_residual: float = np.nan
    bc_residual: float = np.nan
    diagnostics: dict = field(default_factory=dict)

    @property
    def unstable(self):
        return self.lam < 0.0

    @property
    def n_grid(self):
        return len(self.operators.nodes) - 1


def _pick_minimizer(ops, sol, degenerate_rtol=1e-9):
    x = sol.vector
    edge = ops.edge_index()
    if np.isfinite(sol.second) and abs(sol.second - sol.value) <= degenerate_rtol * max(abs(sol.value), 1e-300):
        # degenerate pair: take the combination with the largest edge displacement
        pair = sol.pair
        if pair is not None and pair.shape[1] == 2:
            weights = pair[edge, :]
            if np.linalg.norm(weights) > 0.0:
                x = pair @ (weights / np.linalg.norm(weights))
    norm = float(x @ (ops.M @ x))
    x = x * np.sqrt(2.0 / norm)
    xi, _, _ = ops.split(x)
    ref = xi[-1] if abs(xi[-1]) > 1e-8 * np.max(np.abs(xi)) else xi[np.argmax(np.abs(xi))]
    if ref < 0.0:
        x = -x
    return x


def _solve_single(eq, mode, grid, guess, vacuum, force_iterative=False):
    ops = assemble_operators(eq, mode, grid, vacuum=vacuum)
    sol = smallest_eigenpair(ops, guess=guess, force_iterative=force_iterative)
    x = _pick_minimizer(ops, sol)
    return ops, sol, x


def solve_mode(eq, mode, grid=None, refinements=0, rtol=1e-6, guess=None,
               check_convergence=False, residuals=True, vacuum_n=256):
    """Smallest eigenvalue and minimizer for one Fourier mode.

    With ``refinements > 0`` the grid is doubled that many times and the
    eigenvalue history is kept in ``diagnostics['history']``;
    ``check_convergence`` raises ``NonConvergedGrid`` when the last change
    exceeds ``rtol |lambda|``.
    """
    mode = _as_mode(mode)
    if grid is None:
        grid = GridSpec()
    if isinstance(grid, (int, np.integer)):
        grid = GridSpec(int(grid))
    vacuum = vacuum_response(eq, mode, vacuum_n) if mode.m else None
    if guess is None:
        coarse = GridSpec(32, grid.edge_fraction, grid.edge_width, grid.axis_stretch)
        guess = _solve_single(eq, mode, coarse, None, vacuum)[1].value
    history = []
    spec = grid
    for level in range(refinements + 1):
        ops, sol, x = _solve_single(eq, mode, spec, guess, vacuum)
        history.append((spec.n, sol.value))
        guess = sol.value
        if level < refinements:
            spec = spec.refined()
    lam = history[-1][1]
    mu = float(np.sqrt(-lam)) if lam < 0.0 else None
    field_ = ops.field(x)
    rq = float(x @ (ops.K @ x)) / float(x @ (ops.M @ x))
    diag = {"history": history, "method": sol.method, "iterations": sol.iterations,
            "second": sol.second, "rayleigh_quotient": rq, "unknowns": ops.size}
    result = SpectralResult(mode, lam, mu, field_, x, ops, diagnostics=diag)
    if residuals:
        result.el_residual, result.bc_residual = euler_lagrange_residual(eq, mode, result)
    if refinements and check_convergence:
        change = abs(history[-1][1] - history[-2][1])
        if change > rtol * abs(lam):
            raise NonConvergedGrid(f"lambda moved by {change:.3e} on the last refinement", history)
    return result


# --- Euler-Lagrange residuals -------------------------------------------------------------


def _reconstruct(result):
    ops = result.operators
    nodes = ops.nodes
    xi, eta, zeta = ops.split(result.coefficients)
    mids = 0.5 * (nodes[:-1] + nodes[1:])
    xs = CubicSpline(nodes, xi)
    es = CubicSpline(mids, eta)
    zs = CubicSpline(mids, zeta) if zeta is not None else None
    return xs, es, zs


def axisymmetric_residual(f, k, gamma, lam, xi, dxi, d2xi, eta, deta):
    """Residuals of the two axisymmetric Euler-Lagrange equations."""
    r, p, dp, B, dB = f.r, f.p, f.dp, f.B, f.dB
    gp, dgp = gamma * p, gamma * dp
    dB2 = 2.0 * B * dB
    G = k * eta - dxi - xi / r  # k eta - (r xi)'/r
    dG = k * deta - d2xi - dxi / r + xi / (r * r)
    A = k * eta - dxi + xi / r  # k eta - ((r xi)' - 2 xi)/r
    dA = k * deta - d2xi + dxi / r - xi / (r * r)
    first = (-(dgp * G + gp * dG) - (dB2 * A + B * B * dA) - 2.0 * B * B * A / r
             - 2.0 * dp * xi / r + f.rho * lam * xi)
    stiff = gp + B * B
    ratio = np.where(stiff > 0.0, B * B / np.where(stiff > 0.0, stiff, 1.0), 0.0)
    second = -k * stiff * (k * eta - dxi - xi / r + 2.0 * ratio * xi / r) + f.rho * lam * eta
    return first, second


def operator_residual(f, m, k, gamma, lam, xi, dxi, d2xi, eta, deta, zeta, dzeta):
    """Residuals of the three-component spectral system (any ``m``)."""
    r, p, dp, B, dB, rho = f.r, f.p, f.dp, f.B, f.dB, f.rho
    gp, dgp = gamma * p, gamma * dp
    stiff, dstiff = gp + B * B, dgp + 2.0 * B * dB
    rxi1 = xi + r * dxi
    rxi2 = 2.0 * dxi + r * d2xi
    d_b2_r2 = 2.0 * B * dB / r**2 - 2.0 * B * B / r**3
    first = ((dstiff / r - stiff / r**2) * rxi1 + stiff / r * rxi2
             - m * m * B * B / r**2 * xi - r * d_b2_r2 * xi
             - k * (dstiff * eta + stiff * deta) - 2.0 * k * B * B / r * eta
             + m * ((dgp / r - gp / r**2) * zeta + gp / r * dzeta)
             + rho * lam * xi)
    second = (k * stiff / r * rxi1 - 2.0 * k * B * B / r * xi
              - (k * k * stiff + m * m * B * B / r**2) * eta
              + m * k / r * gp * zeta + rho * lam * eta)
    third = (-m * gp / r**2 * rxi1 + m * k / r * gp * eta - m * m / r**2 * gp * zeta
             + rho * lam * zeta)
    return first, second, third


def check_points(r0, spec=None, cells=64, skip=2):
    """Fixed radii at which strong residuals are compared across grids.

    These are the interior cell midpoints of a ``cells``-cell grid with
    the same clustering, so every refinement is sampled at the same radii.
    """
    spec = GridSpec() if spec is None else spec
    coarse = GridSpec(cells, spec.edge_fraction, spec.edge_width, spec.axis_stretch)
    nodes = radial_nodes(coarse, r0)
    return 0.5 * (nodes[:-1] + nodes[1:])[skip:-skip]


def euler_lagrange_residual(eq, mode, result, points=None):
    """Relative rho-weighted residual of the field equations and the edge condition.

    The discrete minimizer is smoothed by cubic splines (nodal ``xi``,
    midpoint ``eta, zeta``) and substituted into the strong equations at
    ``points`` (default ``check_points``); the result is measured against
    the ``rho lambda`` term.  The edge condition uses the last cell's
    slope and its ``eta``, and is divided by the sum of its terms' sizes.
    """
    mode = _as_mode(mode)
    ops = result.operators
    lam = result.lam
    xs, es, zs = _reconstruct(result)
    pts = check_points(eq.r0) if points is None else np.asarray(points, dtype=float)
    f = eq.at(pts)
    xi, dxi, d2xi = xs(pts), xs(pts, 1), xs(pts, 2)
    eta, deta = es(pts), es(pts, 1)
    if mode.m == 0:
        parts = axisymmetric_residual(f, mode.k, eq.gamma, lam, xi, dxi, d2xi, eta, deta)
        ref = (f.rho * lam * xi, f.rho * lam * eta)
    else:
        zeta, dzeta = zs(pts), zs(pts, 1)
        parts = operator_residual(f, mode.m, mode.k, eq.gamma, lam, xi, dxi, d2xi, eta, deta, zeta, dzeta)
        ref = (f.rho * lam * xi, f.rho * lam * eta, f.rho * lam * zeta)
    weight = np.gradient(pts) * pts * f.rho if len(pts) > 1 else pts * f.rho
    num = sum(np.sum(weight * part**2) for part in parts)
    den = sum(np.sum(weight * part**2) for part in ref)
    el = float(np.sqrt(num / den)) if den > 0.0 else float(np.sqrt(num))
    return el, interface_residual(eq, mode, result)


def interface_residual(eq, mode, result):
    """Relative residual of the natural condition at ``r0``."""
    mode = _as_mode(mode)
    ops = result.operators
    xi, eta, _ = ops.split(result.coefficients)
    x = ops.nodes
    r0 = eq.r0
    # one-sided quadratic slope from the last three nodes
    h1, h2 = x[-1] - x[-2], x[-2] - x[-3]
    slope = (xi[-1] * (2.0 * h1 + h2) / (h1 * (h1 + h2)) - xi[-2] * (h1 + h2) / (h1 * h2)
             + xi[-3] * h1 / (h2 * (h1 + h2)))
    # eta is cell-constant: extend the line through the last two midpoints
    m1, m2 = 0.5 * (x[-1] + x[-2]), 0.5 * (x[-2] + x[-3])
    eta_edge = eta[-1] + (eta[-1] - eta[-2]) * (r0 - m1) / (m1 - m2)
    B2 = float(eq.B[-1]) ** 2
    if mode.m == 0:
        terms = (B2 * mode.k * eta_edge * r0, -B2 * slope * r0, B2 * xi[-1])
    else:
        q_theta = ops.vacuum.edge_q_theta(xi[-1])
        bhat = eq.bhat_coefficient / r0
        terms = (B2 * xi[-1], -B2 * slope * r0, mode.k * B2 * eta_edge * r0, -bhat * q_theta * r0)
    size = sum(abs(t) for t in terms)
    return float(abs(sum(terms)) / size) if size > 0.0 else 0.0


# --- sweeps ------------------------------------------------------------------------------------


@dataclass
class SweepTable:
    results: dict
    errors: dict
    symmetry_violations: list

    @property
    def unstable(self):
        return {mode: res for mode, res in self.results.items() if res.lam < 0.0}

    @property
    def sup_mu(self):
        mus = [res.mu for res in self.unstable.values()]
        return max(mus) if mus else None

    def rows(self):
        out = []
        for mode in sorted(self.results, key=lambda md: (md.m, md.k)):
            res = self.results[mode]
            out.append({"m": mode.m, "k": mode.k, "lambda": res.lam,
                        "mu": res.mu if res.mu is not None else "",
                        "el_residual": res.el_residual, "bc_residual": res.bc_residual,
                        "n_grid": res.n_grid})
        return out


def sweep_modes(eq, m_values, k_values, grid=None, threads=1, refinements=0,
                residuals=True, symmetry_rtol=1e-8):
    """Solve every ``(m, k)`` pair; failures are collected, not raised."""
    modes = [ModeIndex(m, k) for m in m_values for k in k_values]
    if not modes:
        raise ValueError("empty mode range")

    def run(mode):
        try:
            return mode, solve_mode(eq, mode, grid, refinements=refinements, residuals=residuals), None
        except ZPinchError as exc:
            return mode, None, exc

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            outcomes = list(pool.map(run, modes))
    else:
        outcomes = [run(mode) for mode in modes]
    results = {mode: res for mode, res, err in outcomes if res is not None}
    errors = {mode: err for mode, _, err in outcomes if err is not None}
    violations = []
    for mode, res in results.items():
        for partner in (ModeIndex(-mode.m, -mode.k), ModeIndex(mode.m, -mode.k)):
            other = results.get(partner)
            if other is not None and abs(other.lam - res.lam) > symmetry_rtol * max(abs(res.lam), 1e-12):
                violations.append((mode, partner, res.lam, other.lam))
    return SweepTable(results, errors, violations)
