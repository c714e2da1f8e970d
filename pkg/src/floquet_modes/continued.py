"""Characteristic exponents and Fourier mode vectors by continued matrix inversions.

A stable solution of the coupled Mathieu system is sought as

    u(t) = sum_n C_{2n} exp(i (2n + beta) t)

The three-term recursion ``R_{2n} C_{2n} = Q (C_{2n-2} + C_{2n+2})`` with
``R_{2n} = A - (2n + beta)^2`` is closed from both ends by nested inversions,
which leaves an ``f x f`` matrix ``Y(beta)`` whose determinant vanishes at the
exponents and whose kernel holds ``C_0``.

The double-cosine system (an extra ``-2 Q4 cos 4t`` term) gives a five-term
recursion.  Pairing consecutive harmonics turns it into a three-term recursion
on ``2f`` blocks, which is closed the same way and then reduced onto ``C_0``
by a Schur complement.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq

from . import _backend
from .errors import (
    DefectiveMonodromy,
    DegenerateRoot,
    MarginalSystem,
    NoConvergence,
    ResidualTooLarge,
    RootCountMismatch,
    SingularInnerMatrix,
    UnstableSystem,
)
from .model import SystemSpec, Tolerances

SINGULAR_COND = 1e14
N_MAX = 512
GRID_STEP = 0.005


# ---------------------------------------------------------------------------
# containers

@dataclass(frozen=True, eq=False)
class ModeSeries:
    """Fourier coefficients ``C_{2n}`` of one mode, ``n = -N..N``."""

    beta: float
    coeffs: np.ndarray  # (2N+1, f)
    residual: float = 0.0

    @property
    def truncation(self) -> int:
        return (self.coeffs.shape[0] - 1) // 2

    @property
    def orders(self) -> np.ndarray:
        N = self.truncation
        return np.arange(-N, N + 1)

    def __getitem__(self, n: int) -> np.ndarray:
        N = self.truncation
        if abs(n) > N:
            return np.zeros(self.coeffs.shape[1])
        return self.coeffs[n + N]

    def as_dict(self) -> dict:
        return {int(n): self.coeffs[i] for i, n in enumerate(self.orders)}

    def padded(self, N: int) -> np.ndarray:
        own = self.truncation
        out = np.zeros((2 * N + 1, self.coeffs.shape[1]))
        out[N - own:N + own + 1] = self.coeffs
        return out

    def scaled(self, factor: float) -> "ModeSeries":
        return ModeSeries(self.beta, self.coeffs * factor, self.residual)


@dataclass(frozen=True, eq=False)
class ModeSet:
    """All stable modes of a system, sorted by ascending exponent.

    ``coefficients[j, n + N]`` is ``C_{2n}`` of mode ``j``.
    """

    exponents: np.ndarray
    coefficients: np.ndarray
    truncation: int
    residuals: np.ndarray
    converged: np.ndarray
    degenerate: bool = False
    normalized: bool = False
    spec: SystemSpec | None = field(default=None, repr=False)

    @property
    def f(self) -> int:
        return self.coefficients.shape[2]

    @property
    def orders(self) -> np.ndarray:
        return np.arange(-self.truncation, self.truncation + 1)

    def mode(self, j: int) -> ModeSeries:
        return ModeSeries(float(self.exponents[j]), self.coefficients[j], float(self.residuals[j]))

    @classmethod
    def from_series(cls, series, spec=None, convergence_tol=1e-13, degenerate=False):
        series = sorted(series, key=lambda s: s.beta)
        N = max(s.truncation for s in series)
        coeffs = np.stack([s.padded(N) for s in series])
        res = np.array([s.residual for s in series])
        return cls(
            exponents=np.array([s.beta for s in series]),
            coefficients=coeffs,
            truncation=N,
            residuals=res,
            converged=res <= convergence_tol * max(1.0, _scale_of(spec) if spec is not None else 1.0),
            degenerate=degenerate,
            spec=spec,
        )


def _scale_of(spec: SystemSpec) -> float:
    return 1.0 + np.linalg.norm(spec.A, 2) + np.linalg.norm(spec.Q2, 2) + np.linalg.norm(spec.Q4, 2)


# ---------------------------------------------------------------------------
# single-cosine operators

def r_matrix(n: int, beta: float, spec: SystemSpec) -> np.ndarray:
    return spec.A - (2 * n + beta) ** 2 * np.eye(spec.f)


def _r_stack(levels, beta, A):
    k = (2.0 * np.asarray(levels, dtype=float) + beta) ** 2
    return A[None, :, :] - k[:, None, None] * np.eye(A.shape[0])[None, :, :]


def _chain(Rs, P, S, levels):
    X, conds = _backend.continued_inverse(Rs, P, S)
    bad = np.nonzero(~(conds <= SINGULAR_COND))[0]
    if bad.size:
        i = int(bad.max())
        raise SingularInnerMatrix(int(levels[i]), conds[i])
    return X


def _check_beta(beta):
    if not (0.0 < beta < 2.0) or beta == 1.0:
        raise ValueError(f"beta must lie in (0, 2) excluding 1, got {beta}")


def _chains_at(beta, spec, N, Q):
    up = np.arange(1, N + 1)
    down = -np.arange(1, N + 1)
    X = _chain(_r_stack(up, beta, spec.A), Q, Q, up)
    Z = _chain(_r_stack(down, beta, spec.A), Q, Q, down)
    return X, Z


def _rel_change(a, b):
    denom = max(np.linalg.norm(b), 1e-300)
    return np.linalg.norm(a - b) / denom


def _converged_chains(beta, spec, tol):
    """Up/down inversion chains at a depth where T2 and T0~ have settled."""
    Q = spec.Q2
    N = int(tol.truncation_order)
    if not np.any(Q):
        # uncoupled harmonics: only T2 = R_2^-1 survives, and poles of deeper levels are irrelevant
        X = np.zeros((N, spec.f, spec.f))
        X[:1] = _chain(_r_stack([1], beta, spec.A), Q, Q, [1])
        return X, np.zeros_like(X), N
    X1, Z1 = _chains_at(beta, spec, N, Q)
    R0 = r_matrix(0, beta, spec)
    while True:
        X2, Z2 = _chains_at(beta, spec, 2 * N, Q)
        T2a, T2b = X1[0], X2[0]
        T0a = R0 - Q @ Z1[0] @ Q
        T0b = R0 - Q @ Z2[0] @ Q
        change = max(_rel_change(T2a, T2b), _rel_change(T0a, T0b))
        if change < tol.convergence_tol or not np.any(Q):
            return X2, Z2, 2 * N
        N *= 2
        if 2 * N > N_MAX:
            raise NoConvergence(N_MAX, change)
        X1, Z1 = X2, Z2


def t_operators(beta: float, spec: SystemSpec, tol: Tolerances = Tolerances()):
    """Upward operator ``T2`` and downward-closed ``T0~`` at exponent ``beta``.

    Returns
    -------
    T2 : ndarray
        ``[R_2 - Q [R_4 - Q [...]^-1 Q]^-1 Q]^-1``.
    T0_tilde : ndarray
        ``R_0 - Q [R_-2 - Q [R_-4 - ...]^-1 Q]^-1 Q``.
    N_used : int
        Depth of both chains.
    """
    _check_beta(beta)
    X, Z, N = _converged_chains(beta, spec, tol)
    Q = spec.Q2
    return X[0], r_matrix(0, beta, spec) - Q @ Z[0] @ Q, N


def y_matrix(beta: float, spec: SystemSpec, tol: Tolerances = Tolerances()) -> np.ndarray:
    """``Y(beta) = T0~ - Q T2 Q``; singular exactly at characteristic exponents."""
    if spec.has_q4:
        return y_matrix_double(beta, spec, tol)
    T2, T0, _ = t_operators(beta, spec, tol)
    Q = spec.Q2
    return T0 - Q @ T2 @ Q


def _series_single(beta, spec, c0, X, Z):
    """Propagate ``C_0`` outwards through the converged chains."""
    Q = spec.Q2
    N = X.shape[0]
    f = spec.f
    coeffs = np.zeros((2 * N + 1, f))
    coeffs[N] = c0
    for k in range(1, N + 1):
        coeffs[N + k] = X[k - 1] @ (Q @ coeffs[N + k - 1])
        coeffs[N - k] = Z[k - 1] @ (Q @ coeffs[N - k + 1])
    return coeffs


def recursion_residual(beta: float, spec: SystemSpec, coeffs: np.ndarray) -> np.ndarray:
    """Per-harmonic residual of the (three- or five-term) recursion for ``|n| < N``."""
    N = (coeffs.shape[0] - 1) // 2
    padded = np.zeros((coeffs.shape[0] + 4, coeffs.shape[1]))
    padded[2:-2] = coeffs
    out = np.zeros(2 * N - 1)
    for i, n in enumerate(range(-N + 1, N)):
        k = n + N + 2
        r = r_matrix(n, beta, spec) @ padded[k] - spec.Q2 @ (padded[k - 1] + padded[k + 1])
        r -= spec.Q4 @ (padded[k - 2] + padded[k + 2])
        out[i] = np.linalg.norm(r)
    return out


# ---------------------------------------------------------------------------
# double-cosine operators

def _block_couplings(spec):
    f = spec.f
    Z = np.zeros((f, f))
    L = np.block([[spec.Q4, spec.Q2], [Z, spec.Q4]])
    return L, L.T


def _block_r(levels, beta, spec):
    f = spec.f
    out = np.empty((len(levels), 2 * f, 2 * f))
    for i, k in enumerate(levels):
        out[i, :f, :f] = r_matrix(2 * k, beta, spec)
        out[i, f:, f:] = r_matrix(2 * k + 1, beta, spec)
        out[i, :f, f:] = -spec.Q2
        out[i, f:, :f] = -spec.Q2
    return out


def _block_chains_at(beta, spec, K):
    L, Ub = _block_couplings(spec)
    up = np.arange(1, K + 1)
    down = -np.arange(1, K + 1)
    X = _chain(_block_r(up, beta, spec), Ub, L, 2 * up)
    Z = _chain(_block_r(down, beta, spec), L, Ub, 2 * down)
    R0 = _block_r([0], beta, spec)[0]
    Yb = R0 - L @ Z[0] @ Ub - Ub @ X[0] @ L
    return X, Z, Yb


def _schur_c0(Yb, f):
    Y11, Y12, Y21, Y22 = Yb[:f, :f], Yb[:f, f:], Yb[f:, :f], Yb[f:, f:]
    c = np.linalg.cond(Y22, 1)
    if not c <= SINGULAR_COND:
        raise SingularInnerMatrix(1, c)
    G = np.linalg.solve(Y22, Y21)
    return Y11 - Y12 @ G, G


def _converged_block(beta, spec, tol):
    K = max(2, int(tol.truncation_order) // 2)
    _, _, Yb1 = _block_chains_at(beta, spec, K)
    S1, _ = _schur_c0(Yb1, spec.f)
    while True:
        X, Z, Yb2 = _block_chains_at(beta, spec, 2 * K)
        S2, G = _schur_c0(Yb2, spec.f)
        change = _rel_change(S1, S2)
        if change < tol.convergence_tol:
            return X, Z, S2, G, 2 * K
        K *= 2
        if 4 * K + 1 > N_MAX:
            raise NoConvergence(N_MAX, change)
        S1 = S2


def y_matrix_double(beta: float, spec: SystemSpec, tol: Tolerances = Tolerances()) -> np.ndarray:
    """``f x f`` exponent matrix of the double-cosine system, at adaptive depth.

    Reduces to :func:`y_matrix` when ``Q4 = 0``.
    """
    _check_beta(beta)
    return _converged_block(beta, spec, tol)[2]


def _series_double(beta, spec, c0, X, Z, G):
    f = spec.f
    K = X.shape[0]
    L, Ub = _block_couplings(spec)
    blocks = {0: np.concatenate([c0, -G @ c0])}
    for k in range(1, K + 1):
        blocks[k] = X[k - 1] @ (L @ blocks[k - 1])
        blocks[-k] = Z[k - 1] @ (Ub @ blocks[-k + 1])
    # block k holds (C_{4k}, C_{4k+2}); harmonics run from -2K to 2K+1
    N = 2 * K
    coeffs = np.zeros((2 * N + 1, f))
    for k, d in blocks.items():
        for off in (0, 1):
            n = 2 * k + off
            if -N <= n <= N:
                coeffs[n + N] = d[off * f:(off + 1) * f]
    return coeffs


def y_matrix_double_finite(beta: float, spec: SystemSpec) -> np.ndarray:
    """Closed-form double-cosine ``Y`` truncated at harmonics ``|n| <= 3``.

    Fixed-depth reference expansion; :func:`y_matrix_double` is exact to the
    convergence tolerance and is what the solver uses.  In the ``T0~`` term
    the third-order coupling runs through ``R_{-4}^{-1}`` (mirror image of the
    ``R_6^{-1}`` term in ``T2``); with ``R_{-2}^{-1}`` there the expression
    misses the exact truncation at third order in the couplings.
    """
    _check_beta(beta)
    Q2, Q4 = spec.Q2, spec.Q4
    inv = np.linalg.inv
    R = {n: r_matrix(n, beta, spec) for n in (-2, -1, 0, 1, 2, 3)}
    R4t = inv(R[2] - Q2 @ inv(R[3]) @ Q2)
    R6t = Q2 + Q2 @ inv(R[3]) @ Q4
    Rm2t = inv(R[-1] - Q2 @ inv(R[-2]) @ Q2)
    Rm4t = Q2 + Q2 @ inv(R[-2]) @ Q4
    R6i = inv(R[3])
    Rm4i = inv(R[-2])
    T2 = inv(R[1] - Q2 @ R4t @ R6t - Q4 @ R6i @ Q4 - Q4 @ R6i @ Q2 @ R4t @ R6t - Q4 @ Rm2t @ Q4)
    Q2t = Q2 + Q2 @ R4t @ Q4 + Q4 @ R6i @ Q2 @ R4t @ Q4 + Q4 @ Rm2t @ Rm4t
    T0t = R[0] - Q2 @ Rm2t @ Rm4t - Q4 @ Rm4i @ Q4 - Q4 @ Rm4i @ Q2 @ Rm2t @ Rm4t - Q4 @ R4t @ Q4
    Qm2t = Q2 + Q2 @ Rm2t @ Q4 + Q4 @ Rm4i @ Q2 @ Rm2t @ Q4 + Q4 @ R4t @ R6t
    return T0t - Qm2t @ T2 @ Q2t


def mode_vectors_double(beta: float, spec: SystemSpec, tol: Tolerances = Tolerances()) -> ModeSeries:
    """Mode series of the double-cosine system at a converged exponent."""
    _check_beta(beta)
    X, Z, S, G, _ = _converged_block(beta, spec, tol)
    basis = _kernel(S, 1, spec)
    coeffs = _series_double(beta, spec, basis[:, 0], X, Z, G)
    return _finish_series(beta, spec, coeffs, tol)


# ---------------------------------------------------------------------------
# kernels and mode vectors

def _sign_fix(c0):
    idx = np.nonzero(np.abs(c0) > 1e-12 * np.abs(c0).max())[0]
    return -1.0 if c0[idx[0]] < 0 else 1.0


def _kernel(Y, dim, spec):
    Ys = 0.5 * (Y + Y.T)
    _, s, Vt = np.linalg.svd(Ys)
    return Vt[-dim:][::-1].T


def kernel_dimension(Y: np.ndarray, spec: SystemSpec) -> int:
    s = np.linalg.svd(0.5 * (Y + Y.T), compute_uv=False)
    return int(np.sum(s < 1e-6 * _scale_of(spec)))


def _operators(beta, spec, tol):
    """Y plus a closure mapping a ``C_0`` to its full coefficient array."""
    if spec.has_q4:
        X, Z, S, G, _ = _converged_block(beta, spec, tol)
        return S, lambda c0: _series_double(beta, spec, c0, X, Z, G)
    X, Z, _ = _converged_chains(beta, spec, tol)
    Q = spec.Q2
    Y = (r_matrix(0, beta, spec) - Q @ Z[0] @ Q) - Q @ X[0] @ Q
    return Y, lambda c0: _series_single(beta, spec, c0, X, Z)


def _finish_series(beta, spec, coeffs, tol):
    N = (coeffs.shape[0] - 1) // 2
    c0 = coeffs[N]
    coeffs = coeffs * (_sign_fix(c0) / np.linalg.norm(c0))
    res = recursion_residual(beta, spec, coeffs)
    worst = int(np.argmax(res))
    if res[worst] > tol.convergence_tol * _scale_of(spec):
        raise ResidualTooLarge(worst - N + 1, res[worst])
    return ModeSeries(beta, coeffs, float(res.max()))


def mode_vectors(beta: float, spec: SystemSpec, tol: Tolerances = Tolerances(), degenerate: str = "raise"):
    """Fourier coefficients ``C_{2n}`` at a converged exponent ``beta``.

    ``C_0`` is the right singular vector of ``Y(beta)`` for its smallest
    singular value, scaled to unit norm with its first nonzero entry
    positive.  With ``degenerate="basis"`` a multi-dimensional kernel yields
    a list with one series per orthonormal kernel vector; otherwise it raises
    :class:`DegenerateRoot`.
    """
    _check_beta(beta)
    Y, extend = _operators(beta, spec, tol)
    dim = max(1, kernel_dimension(Y, spec))
    if dim > 1 and degenerate != "basis":
        raise DegenerateRoot(f"kernel of Y at beta={beta} has dimension {dim}")
    basis = _kernel(Y, dim, spec)
    series = [_finish_series(beta, spec, extend(basis[:, i]), tol) for i in range(dim)]
    return series if degenerate == "basis" else series[0]


def signature_matrix(series) -> np.ndarray:
    """``-2i V(0)^T U(0)`` restricted to modes sharing one exponent (real symmetric)."""
    if isinstance(series, ModeSeries):
        series = [series]
    U0 = np.stack([s.coeffs.sum(axis=0) for s in series], axis=1)
    W0 = np.stack([((2 * s.orders + s.beta)[:, None] * s.coeffs).sum(axis=0) for s in series], axis=1)
    M = 2.0 * W0.T @ U0
    return 0.5 * (M + M.T)


# ---------------------------------------------------------------------------
# exponent search

def _inertia(beta, spec, tol):
    Y = y_matrix(beta, spec, tol)
    eig = np.linalg.eigvalsh(0.5 * (Y + Y.T))
    return int(np.sum(eig < 0)), eig


def _inertia_safe(beta, spec, tol):
    # isolated poles fall exactly on a grid point only by accident; nudge off them
    for shift in (0.0, 1e-9, -1e-9, 1e-7, -1e-7):
        try:
            return _inertia(beta + shift, spec, tol)[0]
        except SingularInnerMatrix:
            continue
    raise SingularInnerMatrix(0)


def _polish(lo, hi, index, spec, tol):
    """Refine a bracketed crossing to float resolution.

    The ``index``-th eigenvalue of the symmetrized ``Y`` changes sign inside
    ``[lo, hi]``.  A bracket of width ``root_tol`` still leaves a kernel
    residual of ``|dY/dbeta| * root_tol``, which for steep ``Y`` exceeds the
    recursion residual bound, so the crossing itself is located by Brent's method.
    """
    def g(beta):
        return _inertia(beta, spec, tol)[1][index]

    try:
        g_lo, g_hi = g(lo), g(hi)
        if np.sign(g_lo) != np.sign(g_hi):
            return brentq(g, lo, hi, xtol=1e-300, rtol=4 * np.finfo(float).eps)
    except SingularInnerMatrix:
        pass  # a pole; rejected by the caller
    return 0.5 * (lo + hi)


def _events(lo, hi, n_lo, n_hi, spec, tol, out):
    if n_lo == n_hi:
        return
    if hi - lo <= tol.root_tol:
        out.append(_polish(lo, hi, min(n_lo, n_hi), spec, tol))
        return
    mid = 0.5 * (lo + hi)
    n_mid = _inertia_safe(mid, spec, tol)
    _events(lo, mid, n_lo, n_mid, spec, tol, out)
    _events(mid, hi, n_mid, n_hi, spec, tol, out)


def _candidate_roots(spec, tol, step):
    delta = 10.0 * tol.root_tol
    roots = []
    for a, b in ((delta, 1.0 - delta), (1.0 + delta, 2.0 - delta)):
        npts = int(math.ceil((b - a) / step)) + 1
        grid = np.linspace(a, b, npts)
        counts = [_inertia_safe(x, spec, tol) for x in grid]
        events = []
        for i in range(npts - 1):
            _events(grid[i], grid[i + 1], counts[i], counts[i + 1], spec, tol, events)
        for beta in events:
            try:
                Y = y_matrix(beta, spec, tol)
            except SingularInnerMatrix:
                continue  # a pole of Y, not a root
            dim = kernel_dimension(Y, spec)
            if dim:
                roots.append((beta, dim))
    return roots


def _positive_modes(roots, spec, tol):
    """Keep the positive-signature representative of each conjugate pair.

    Both ``beta`` and ``2 - beta`` solve ``det Y = 0`` (the complex conjugate
    solution re-indexed by one harmonic); only one of them carries a positive
    ``-2i V(0)^T U(0)``, which canonical normalization requires.
    """
    keep = []
    degenerate = False
    for beta, dim in roots:
        series = mode_vectors(beta, spec, tol, degenerate="basis")
        if len(series) == 1:
            if signature_matrix(series)[0, 0] > 0:
                keep.extend(series)
            continue
        degenerate = True
        w, R = np.linalg.eigh(signature_matrix(series))
        for i in np.nonzero(w > 0)[0]:
            coeffs = sum(R[b, i] * series[b].coeffs for b in range(len(series)))
            keep.append(_finish_series(beta, spec, coeffs, tol))
    return keep, degenerate


def _stability_gate(spec, tol):
    from . import oracle

    try:
        dec, stab = oracle.analyze(spec, steps=tol.oracle_steps)
    except DefectiveMonodromy as exc:
        # a Jordan block in the monodromy only occurs at a repeated multiplier on the boundary
        raise MarginalSystem(f"Marginal: defective monodromy ({exc})") from exc
    if stab.cls is oracle.StabilityClass.UNSTABLE:
        raise UnstableSystem(f"Unstable: |λ|max = {stab.max_modulus:.6g}")
    if stab.cls is oracle.StabilityClass.MARGINAL:
        raise MarginalSystem(f"Marginal: min distance of beta to an integer = {stab.integer_distance:.3g}")
    return dec


def solve_modes(spec: SystemSpec, tol: Tolerances = Tolerances(), check_stability: bool = True) -> ModeSet:
    """Find all ``f`` stable exponents in ``(0, 2)`` and their mode vectors.

    The scan sign-tracks the inertia of the symmetric ``Y(beta)`` on a grid
    of step at most 0.005, so roots of any multiplicity are bracketed, then
    bisects every change to ``root_tol``.  Poles of ``Y`` also flip the inertia
    and are discarded because ``Y`` has no small singular value there.  The
    grid is refined up to twice if the count comes out wrong.
    """
    if check_stability:
        _stability_gate(spec, tol)
    step = GRID_STEP
    found = []
    degenerate = False
    for _ in range(3):
        roots = _candidate_roots(spec, tol, step)
        found, degenerate = _positive_modes(roots, spec, tol)
        if len(found) == spec.f:
            break
        step /= 4.0
    if len(found) != spec.f:
        raise RootCountMismatch(len(found), spec.f)
    return ModeSet.from_series(found, spec=spec, convergence_tol=tol.convergence_tol, degenerate=degenerate)


def find_exponents(spec: SystemSpec, tol: Tolerances = Tolerances(), check_stability: bool = True) -> np.ndarray:
    """The ``f`` characteristic exponents in ``(0, 2) \\ {1}``, ascending."""
    return solve_modes(spec, tol, check_stability).exponents
