"""Configuration-space wavefunctions on top of the decoupled modes.

Coherent states ``psi_zeta`` and number states ``psi_n`` are Gaussians (times
multidimensional Hermite polynomials) whose width and chirp come from the
canonical mode matrices ``U(t)`` and ``V(t)``.  All evaluators accept a batch of
points ``u`` with shape ``(..., f)`` at a single time ``t`` and return an array
of shape ``(...)``.

Units are ``hbar = m = 1`` and the Hamiltonian is
``-(1/2) grad^2 + (1/2) u^T K(t) u - (G + 2F cos 2t) . u``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DegreeTooLarge, GridTooCoarse
from .inhomogeneous import PeriodicResponse
from .model import SystemSpec
from .oracle import stiffness
from .transform import FLTransform

MAX_TOTAL_DEGREE = 120
MAX_OCCUPATION = 60


# ---------------------------------------------------------------------------
# multidimensional Hermite polynomials

@dataclass(frozen=True)
class HermiteParams:
    """Matrix ``C`` and argument ``x`` (batched as ``(..., f)``)."""

    C: np.ndarray
    x: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "C", np.atleast_2d(np.asarray(self.C, dtype=complex)))
        object.__setattr__(self, "x", np.asarray(self.x, dtype=complex))
        if self.C.shape[0] != self.C.shape[1] or self.x.shape[-1] != self.C.shape[0]:
            raise ValueError("C must be f x f and x must end in an axis of length f")

    @classmethod
    def from_transform(cls, flt: FLTransform, u, t: float) -> "HermiteParams":
        U = flt.U_checked(t)
        return cls(U.conj().T @ np.linalg.inv(U).T, np.asarray(u) @ np.linalg.inv(U.conj()).T)


def _check_degree(n):
    n = tuple(int(k) for k in n)
    if any(k < 0 for k in n):
        raise ValueError(f"occupations must be nonnegative, got {n}")
    if sum(n) > MAX_TOTAL_DEGREE:
        raise DegreeTooLarge(f"total degree {sum(n)} exceeds {MAX_TOTAL_DEGREE}")
    return n


def hermite_table(n, params: HermiteParams) -> np.ndarray:
    """All ``H_m^C(x)`` for ``0 <= m <= n`` componentwise, shape ``(n_1+1, ..., n_f+1, ...)``.

    Uses ``H_{m+e_j} = (Cx)_j H_m - sum_k C_jk m_k H_{m-e_k}``, which follows
    from differentiating the generating function in ``zeta_j``.
    """
    n = _check_degree(n)
    f = len(n)
    C, x = params.C, params.x
    if f != C.shape[0]:
        raise ValueError("occupation tuple length must equal f")
    Cx = x @ C.T
    batch = x.shape[:-1]
    H = np.zeros(tuple(k + 1 for k in n) + batch, dtype=complex)
    H[(0,) * f] = 1.0
    for m in np.ndindex(*H.shape[:f]):
        if not any(m):
            continue
        j = next(i for i, k in enumerate(m) if k > 0)
        prev = list(m)
        prev[j] -= 1
        val = Cx[..., j] * H[tuple(prev)]
        for k in range(f):
            if prev[k] > 0:
                pk = list(prev)
                pk[k] -= 1
                val = val - C[j, k] * prev[k] * H[tuple(pk)]
        H[m] = val
    return H


def hermite_multidim(n, params: HermiteParams):
    """``H_n^C(x)``; ``H_0 = 1`` and for ``f = 1, C = 2`` the physicists' polynomials."""
    n = _check_degree(n)
    return hermite_table(n, params)[n]


def log_factorial(n: int) -> float:
    if n <= 20:
        return math.log(math.factorial(n))
    return math.log(math.factorial(20)) + sum(math.log(k) for k in range(21, n + 1))


# ---------------------------------------------------------------------------
# state description

@dataclass(frozen=True, eq=False)
class QuantumStateSpec:
    """Coherent (``zeta0``) or number (``n``) state, optionally displaced by a drive.

    ``det_phase=False`` drops the ``-(1/2) arg det U`` phase; it produces a
    wrong solution and exists only to exercise the residual checks.
    """

    flt: FLTransform
    zeta0: np.ndarray | None = None
    n: tuple | None = None
    drive: PeriodicResponse | None = None
    det_phase: bool = True

    def __post_init__(self):
        if (self.zeta0 is None) == (self.n is None):
            raise ValueError("exactly one of zeta0 or n must be given")
        f = self.flt.f
        if self.zeta0 is not None:
            z = np.atleast_1d(np.asarray(self.zeta0, dtype=complex))
            if z.shape != (f,):
                raise ValueError(f"zeta0 must have length {f}")
            object.__setattr__(self, "zeta0", z)
        else:
            n = tuple(int(k) for k in np.atleast_1d(self.n))
            if len(n) != f:
                raise ValueError(f"occupation tuple must have length {f}")
            if any(k < 0 for k in n):
                raise ValueError("occupations must be nonnegative")
            if any(k > MAX_OCCUPATION for k in n):
                raise DegreeTooLarge(f"occupation above {MAX_OCCUPATION} in {n}")
            object.__setattr__(self, "n", n)

    @property
    def kind(self) -> str:
        return "coherent" if self.zeta0 is not None else "number"

    @classmethod
    def coherent(cls, flt, zeta0, drive=None, det_phase=True):
        return cls(flt, zeta0=zeta0, drive=drive, det_phase=det_phase)

    @classmethod
    def number(cls, flt, n, drive=None, det_phase=True):
        return cls(flt, n=n, drive=drive, det_phase=det_phase)

    def undriven(self) -> "QuantumStateSpec":
        return QuantumStateSpec(self.flt, self.zeta0, self.n, None, self.det_phase)


# ---------------------------------------------------------------------------
# common Gaussian pieces

def abs_normalization(flt: FLTransform, t: float) -> float:
    """``|N| = (2 pi)^{-f/4} det(U U^H)^{-1/4}`` from the singular values of ``U``."""
    s = np.linalg.svd(flt.U(t), compute_uv=False)
    return float((2 * np.pi) ** (-flt.f / 4) * np.prod(s) ** -0.5)


def trace_w(flt: FLTransform, t: float) -> complex:
    """``tr W`` with ``W = U^{-1} dU/dt``."""
    return complex(np.trace(np.linalg.solve(flt.U(t), flt.U_dot(t))))


def _gaussian(flt: FLTransform, u, t, det_phase):
    U = flt.U_checked(t)
    V = flt.V(t)
    Uit = np.linalg.inv(U).T
    quad = Uit @ V.T
    s = np.linalg.svd(U, compute_uv=False)
    log_abs = -0.25 * flt.f * np.log(2 * np.pi) - 0.5 * np.sum(np.log(s))
    phase = -0.5 * np.sum(flt.exponents) * t
    if det_phase:
        phase -= 0.5 * float(flt.arg_det_u(t))
    u = np.asarray(u, dtype=float)
    expo = log_abs + 1j * phase + 0.5j * np.einsum("...i,ij,...j->...", u, quad, u)
    return U, Uit, expo


def coherent_wavefunction(state: QuantumStateSpec, u, t: float):
    """Coherent-state amplitude ``psi_zeta(u, t)`` (unnormalized: ``<zeta|zeta> = e^{|zeta|^2}``)."""
    flt = state.flt
    U, Uit, expo = _gaussian(flt, u, t, state.det_phase)
    zeta = state.zeta0 * np.exp(-1j * flt.exponents * t)
    C = U.conj().T @ Uit
    u = np.asarray(u, dtype=float)
    expo = expo + u @ (Uit @ zeta) - 0.5 * zeta @ C @ zeta
    return np.exp(expo)


def number_wavefunction(state: QuantumStateSpec, u, t: float):
    """Orthonormal number-state amplitude ``psi_n(u, t)``."""
    flt = state.flt
    n = state.n
    U, Uit, expo = _gaussian(flt, u, t, state.det_phase)
    log_c = -0.5 * sum(log_factorial(k) for k in n)
    expo = expo + log_c - 1j * float(np.dot(n, flt.exponents)) * t
    params = HermiteParams(U.conj().T @ Uit, np.asarray(u, dtype=float) @ np.linalg.inv(U.conj()).T)
    return np.exp(expo) * hermite_multidim(n, params)


def undriven_wavefunction(state: QuantumStateSpec, u, t: float):
    if state.kind == "coherent":
        return coherent_wavefunction(state, u, t)
    return number_wavefunction(state, u, t)


def driven_wavefunction(state: QuantumStateSpec, u, t: float):
    """``exp{i u_pi' . (u - u_pi) + i alpha_pi} phi(u - u_pi, t)`` for the drive attached to ``state``."""
    if state.drive is None:
        raise ValueError("state has no drive attached")
    resp = state.drive
    x = np.asarray(u, dtype=float) - resp.u(t)
    phase = x @ resp.u_dot(t) + float(resp.action(t))
    return np.exp(1j * phase) * undriven_wavefunction(state, x, t)


def wavefunction(state: QuantumStateSpec, u, t: float):
    """Evaluate the state, applying the drive shift when one is attached."""
    if state.drive is not None:
        return driven_wavefunction(state, u, t)
    return undriven_wavefunction(state, u, t)


# ---------------------------------------------------------------------------
# self-tests: Schrödinger residual and quadrature

def sigma_min(flt: FLTransform, t: float) -> float:
    """Smallest Gaussian width, the least singular value of ``U`` (``|psi_0|^2`` has covariance ``U U^H``)."""
    return float(np.linalg.svd(flt.U(t), compute_uv=False).min())


def schrodinger_residual(state: QuantumStateSpec, u_grid, t: float, h_t: float, h_u: float,
                         spec: SystemSpec | None = None) -> float:
    """Max of ``|i d_t psi - H psi|`` over the grid, relative to ``max |psi|``.

    Central second-order differences are used in time and in every coordinate.
    ``spec`` supplies the stiffness and the drive; it defaults to the system
    the modes were computed for.
    """
    flt = state.flt
    spec = spec if spec is not None else flt.modes.spec
    if h_u > sigma_min(flt, t) / 20:
        raise GridTooCoarse(f"h_u = {h_u:.3g} exceeds sigma_min/20 = {sigma_min(flt, t) / 20:.3g}")
    u = np.asarray(u_grid, dtype=float)
    if u.ndim == 1 and flt.f == 1:
        u = u[:, None]
    psi = wavefunction(state, u, t)
    dt = (wavefunction(state, u, t + h_t) - wavefunction(state, u, t - h_t)) / (2 * h_t)
    lap = np.zeros_like(psi)
    for k in range(flt.f):
        e = np.zeros(flt.f)
        e[k] = h_u
        lap += (wavefunction(state, u + e, t) - 2 * psi + wavefunction(state, u - e, t)) / h_u**2
    K = stiffness(spec, t)
    pot = 0.5 * np.einsum("...i,ij,...j->...", u, K, u)
    if state.drive is not None:
        pot = pot - u @ (spec.G + 2 * np.cos(2 * t) * spec.F)
    res = 1j * dt - (-0.5 * lap + pot * psi)
    return float(np.max(np.abs(res)) / np.max(np.abs(psi)))


def density_center(state: QuantumStateSpec, t: float) -> np.ndarray:
    """Mean position of ``|psi|^2``: the drive shift plus ``2 Re(U* zeta)`` for coherent states."""
    mu = np.zeros(state.flt.f)
    if state.kind == "coherent":
        zeta = state.zeta0 * np.exp(-1j * state.flt.exponents * t)
        mu = mu + 2.0 * np.real(state.flt.U(t).conj() @ zeta)
    if state.drive is not None:
        mu = mu + state.drive.u(t)
    return mu


def quadrature_grid(state: QuantumStateSpec, t: float, nodes: int | None = None, width: float = 8.0):
    """Tensor Gauss-Legendre nodes on ``[mu - width sigma, mu + width sigma]`` per axis.

    ``sigma`` is the per-axis width of the ground-state density.  By default
    the node count grows with the highest occupation so that the Hermite
    oscillations stay resolved.  Returns points ``(M, f)`` and weights ``(M,)``.
    """
    flt = state.flt
    if nodes is None:
        nodes = 80 + (20 * max(state.n) if state.kind == "number" else 0)
    U = flt.U(t)
    sig = np.sqrt(np.diag(np.real(U @ U.conj().T)))
    mu = density_center(state, t)
    x, w = np.polynomial.legendre.leggauss(nodes)
    axes = [mu[k] + width * sig[k] * x for k in range(flt.f)]
    wts = [width * sig[k] * w for k in range(flt.f)]
    pts = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, flt.f)
    W = np.prod(np.stack(np.meshgrid(*wts, indexing="ij"), axis=-1).reshape(-1, flt.f), axis=1)
    return pts, W


def overlap(a: QuantumStateSpec, b: QuantumStateSpec, t: float, nodes: int | None = None) -> complex:
    """``<a|b>`` by quadrature on the finer of the two states' grids."""
    pa, wa = quadrature_grid(a, t, nodes)
    pb, wb = quadrature_grid(b, t, nodes)
    pts, w = (pa, wa) if len(wa) >= len(wb) else (pb, wb)
    return complex(np.sum(w * np.conj(wavefunction(a, pts, t)) * wavefunction(b, pts, t)))


def norm_squared(state: QuantumStateSpec, t: float, nodes: int | None = None) -> float:
    pts, w = quadrature_grid(state, t, nodes)
    return float(np.sum(w * np.abs(wavefunction(state, pts, t)) ** 2))
