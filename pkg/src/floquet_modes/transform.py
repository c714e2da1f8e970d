"""The canonical Floquet-Lyapunov transformation built from stable modes.

With ``U(t)`` and ``V(t)`` the ``f x f`` matrices whose columns are the mode
series and their time derivatives, ``Gamma = [[U, U*], [V, V*]]`` maps the
constant-coefficient mode variables ``chi = (xi, zeta)`` to phase space,
``phi = Gamma chi``.  After the scaling that enforces ``V(0)^T U(0) = i/2`` the
map is canonical and its inverse is available in closed form.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .continued import ModeSet, solve_modes
from .errors import NonDiagonalScaling, NonPositiveDiagonal, NonRealRoundTrip, SingularU
from .model import SystemSpec, Tolerances
from .oracle import skew_form

DEGENERATE_BETA = 1e-8
SINGULAR_U_COND = 1e12


@dataclass(frozen=True)
class PhaseState:
    u: np.ndarray
    p: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "u", np.asarray(self.u, dtype=float))
        object.__setattr__(self, "p", np.asarray(self.p, dtype=float))
        if not (np.all(np.isfinite(self.u)) and np.all(np.isfinite(self.p))):
            raise ValueError("phase state must be finite")

    @property
    def vector(self) -> np.ndarray:
        return np.concatenate([self.u, self.p])

    @classmethod
    def from_vector(cls, phi) -> "PhaseState":
        phi = np.asarray(phi)
        f = phi.shape[0] // 2
        return cls(phi[:f], phi[f:])


@dataclass(frozen=True)
class ModeState:
    xi: np.ndarray
    zeta: np.ndarray

    @property
    def vector(self) -> np.ndarray:
        return np.concatenate([self.xi, self.zeta])


def _uv_blocks(modes: ModeSet):
    # blocks[n + N][:, j] = C_{2n} of mode j
    U_blocks = np.transpose(modes.coefficients, (1, 2, 0)).astype(complex)
    freq = 2.0 * modes.orders[:, None] + modes.exponents[None, :]
    V_blocks = 1j * U_blocks * freq[:, None, :]
    return U_blocks, V_blocks


def _evaluate(blocks, orders, t):
    t = np.asarray(t, dtype=float)
    phase = np.exp(2j * np.multiply.outer(t, orders))
    return np.tensordot(phase, blocks, axes=(-1, 0))


def assemble_uv(modes: ModeSet, t):
    """``U(t)`` and ``V(t)``; ``t`` may be an array, giving leading time axes."""
    U_blocks, V_blocks = _uv_blocks(modes)
    return _evaluate(U_blocks, modes.orders, t), _evaluate(V_blocks, modes.orders, t)


def scaling_matrix(modes: ModeSet) -> np.ndarray:
    """``-2i V(0)^T U(0)``, real for real mode coefficients."""
    U0, V0 = assemble_uv(modes, 0.0)
    return (-2j * V0.T @ U0).real


def _degenerate_groups(beta):
    groups = []
    for j in np.argsort(beta):
        if groups and abs(beta[j] - beta[groups[-1][-1]]) < DEGENERATE_BETA:
            groups[-1].append(j)
        else:
            groups.append([j])
    return groups


def normalize(modes: ModeSet, identity_tol: float = 1e-9) -> ModeSet:
    """Rescale every mode so that ``V(0)^T U(0) = i/2``.

    Raises
    ------
    NonDiagonalScaling
        ``-2i V(0)^T U(0)`` couples modes with distinct exponents.
    NonPositiveDiagonal
        a mode carries the wrong symplectic sign (it is the conjugate partner).
    """
    M = scaling_matrix(modes)
    coeffs = modes.coefficients.copy()
    diag_scale = np.max(np.abs(np.diag(M)))
    for group in _degenerate_groups(modes.exponents):
        if len(group) > 1:
            # any basis of a degenerate kernel is admissible; pick the one diagonalizing M
            sub = M[np.ix_(group, group)]
            _, R = np.linalg.eigh(0.5 * (sub + sub.T))
            coeffs[group] = np.einsum("ba,bnk->ank", R, coeffs[group])
    rotated = ModeSet(modes.exponents, coeffs, modes.truncation, modes.residuals, modes.converged,
                      modes.degenerate, False, modes.spec)
    M = scaling_matrix(rotated)
    off = M - np.diag(np.diag(M))
    if np.max(np.abs(off)) > identity_tol * max(diag_scale, 1.0):
        raise NonDiagonalScaling(f"off-diagonal part of -2i V(0)^T U(0) is {np.max(np.abs(off)):.3g}")
    d = np.diag(M)
    if np.any(d <= 0):
        raise NonPositiveDiagonal(f"scaling diagonal {d} is not positive")
    scale = 1.0 / np.sqrt(d)
    return ModeSet(modes.exponents, coeffs * scale[:, None, None], modes.truncation, modes.residuals,
                   modes.converged, modes.degenerate, True, modes.spec)


@dataclass(frozen=True, eq=False)
class FLTransform:
    """Normalized mode matrices in Fourier form, ``U(t) = sum_n U_n e^{2int}``."""

    modes: ModeSet
    B: np.ndarray
    scale: np.ndarray
    U_blocks: np.ndarray
    V_blocks: np.ndarray
    identity_tol: float = 1e-9

    @property
    def f(self) -> int:
        return self.B.shape[0]

    @property
    def exponents(self) -> np.ndarray:
        return np.diag(self.B)

    @property
    def orders(self) -> np.ndarray:
        return self.modes.orders

    def U(self, t):
        return _evaluate(self.U_blocks, self.orders, t)

    def V(self, t):
        return _evaluate(self.V_blocks, self.orders, t)

    def U_dot(self, t):
        return _evaluate(2j * self.orders[:, None, None] * self.U_blocks, self.orders, t)

    def U_checked(self, t) -> np.ndarray:
        U = self.U(t)
        c = np.linalg.cond(U)
        if not c <= SINGULAR_U_COND:
            raise SingularU(f"cond U({t}) = {c:.3g}")
        return U

    @cached_property
    def _arg_table(self):
        # det U on a fine grid over one period, unwrapped from t = 0
        m = 256
        while True:
            ts = np.linspace(0.0, np.pi, m + 1)
            dets = np.linalg.det(self.U(ts))
            steps = np.angle(dets[1:] / dets[:-1])
            if np.max(np.abs(steps)) < np.pi / 4 or m >= 1 << 20:
                break
            m *= 4
        table = np.angle(dets[0]) + np.concatenate([[0.0], np.cumsum(steps)])
        winding = (table[-1] - table[0]) / (2 * np.pi)
        return ts, dets, table, float(np.round(winding))

    def arg_det_u(self, t):
        """Continuous branch of ``arg det U(t)``, starting from its principal value at 0."""
        ts, dets, table, winding = self._arg_table
        t = np.asarray(t, dtype=float)
        k = np.floor(t / np.pi)
        s = t - k * np.pi
        h = ts[1] - ts[0]
        i = np.clip(np.rint(s / h).astype(int), 0, len(ts) - 1)
        local = np.linalg.det(self.U(s))
        return table[i] + np.angle(local / dets[i]) + 2 * np.pi * winding * k


def build_transform(modes: ModeSet, normalize_modes: bool = True, identity_tol: float = 1e-9) -> FLTransform:
    """Assemble the transformation; with ``normalize_modes=False`` the raw scaling is kept."""
    if normalize_modes and not modes.normalized:
        raw = modes
        modes = normalize(modes, identity_tol)
        ratio = np.linalg.norm(modes.coefficients, axis=(1, 2)) / np.linalg.norm(raw.coefficients, axis=(1, 2))
        scale = np.diag(ratio).astype(complex)
    else:
        scale = np.eye(modes.f, dtype=complex)
    U_blocks, V_blocks = _uv_blocks(modes)
    return FLTransform(modes, np.diag(modes.exponents), scale, U_blocks, V_blocks, identity_tol)


def solve_transform(spec: SystemSpec, tol: Tolerances = Tolerances()) -> FLTransform:
    return build_transform(solve_modes(spec, tol), identity_tol=tol.identity_tol)


def gamma(flt: FLTransform, t) -> np.ndarray:
    U, V = flt.U(t), flt.V(t)
    return np.block([[U, U.conj()], [V, V.conj()]])


def gamma_inverse(flt: FLTransform, t) -> np.ndarray:
    """Closed-form inverse ``[[iV^H, -iU^H], [-iV^T, iU^T]]`` (no numerical inversion)."""
    U, V = flt.U(t), flt.V(t)
    return np.block([[1j * V.conj().T, -1j * U.conj().T], [-1j * V.T, 1j * U.T]])


def to_modes(flt: FLTransform, state: PhaseState, t: float) -> ModeState:
    chi = gamma_inverse(flt, t) @ state.vector
    f = flt.f
    return ModeState(chi[:f], chi[f:])


def from_modes(flt: FLTransform, mstate: ModeState, t: float) -> PhaseState:
    """Map mode variables back to phase space; the result must be real."""
    phi = gamma(flt, t) @ mstate.vector
    scale = 1.0 + np.max(np.abs(phi))
    if np.max(np.abs(phi.imag)) > flt.identity_tol * scale:
        raise NonRealRoundTrip(f"imaginary part {np.max(np.abs(phi.imag)):.3g} in reconstructed state")
    return PhaseState.from_vector(phi.real)


def mode_evolution(flt: FLTransform, t) -> np.ndarray:
    """Diagonal of ``exp(B t)``: ``e^{i beta t}`` for xi, ``e^{-i beta t}`` for zeta."""
    beta = flt.exponents
    return np.concatenate([np.exp(1j * beta * t), np.exp(-1j * beta * t)])


def propagator(flt: FLTransform, t: float) -> np.ndarray:
    """``Phi(t) = Gamma(t) exp(B t) Gamma^-1(0)``, real up to round-off."""
    Phi = gamma(flt, t) @ (mode_evolution(flt, t)[:, None] * gamma_inverse(flt, 0.0))
    return Phi.real


def propagate(flt: FLTransform, state0: PhaseState, t: float) -> PhaseState:
    chi0 = gamma_inverse(flt, 0.0) @ state0.vector
    phi = gamma(flt, t) @ (mode_evolution(flt, t) * chi0)
    return PhaseState.from_vector(phi.real)


def mode_actions(mstate: ModeState, identity_tol: float = 1e-9) -> np.ndarray:
    """Conserved actions ``I_j = zeta_j xi_j`` of a real state."""
    I = mstate.zeta * mstate.xi
    if np.max(np.abs(I.imag), initial=0.0) > identity_tol * (1.0 + np.max(np.abs(I))):
        raise ValueError("mode state does not come from a real phase-space point")
    return I.real


def generating_function(flt: FLTransform, u, zeta, t: float) -> complex:
    """Classical generating function ``F(u, -i zeta, t)`` of the transformation."""
    U = flt.U_checked(t)
    V = flt.V(t)
    u = np.asarray(u, dtype=complex)
    zeta = np.asarray(zeta, dtype=complex)
    Uit = np.linalg.inv(U).T
    return complex(0.5 * u @ Uit @ V.T @ u - 1j * u @ Uit @ zeta + 0.5j * zeta @ U.conj().T @ Uit @ zeta)


def check_canonical_identities(flt: FLTransform, sample_times) -> dict:
    """Maximum residual of each canonical identity over the sample times."""
    f = flt.f
    eye = np.eye(f)
    J = skew_form(f)
    target = np.block([[np.zeros((f, f)), 1j * eye], [-1j * eye, np.zeros((f, f))]])
    U0, V0 = flt.U(0.0), flt.V(0.0)
    out = {"normalization": float(np.max(np.abs(2 * V0.T @ U0 / 1j - eye)))}

    # commutation of M = U(0)^-1 V(0)^-T / 4 with B
    M = 0.25 * np.linalg.inv(U0) @ np.linalg.inv(V0).T
    out["m_commutes_b"] = float(np.max(np.abs(M @ flt.B - flt.B @ M)))

    acc = {k: 0.0 for k in ("uv_symmetry", "wronskian", "canonical_condition", "sym_Uit_Vt",
                            "sym_Uh_Uit", "conj_identity", "unit_identity", "gtjg", "gamma_inverse")}

    def upd(name, value):
        acc[name] = max(acc[name], float(np.max(np.abs(value))))

    for t in np.atleast_1d(sample_times):
        U, V = flt.U(t), flt.V(t)
        Ui = np.linalg.inv(U)
        Uit = Ui.T
        Uh = U.conj().T
        S1 = Uit @ V.T
        S2 = Uh @ Uit
        upd("uv_symmetry", U.T @ V - V.T @ U)
        upd("wronskian", U.T @ V.conj() - V.T @ U.conj() + 1j * eye)
        upd("canonical_condition", V.conj().T - Uh @ Uit @ V.T + 1j * Ui)
        upd("sym_Uit_Vt", S1 - S1.T)
        upd("sym_Uh_Uit", S2 - S2.T)
        Uis = np.linalg.inv(U.conj())
        upd("conj_identity", (Uis @ U).conj() - S2)
        upd("unit_identity", Uis @ U @ S2 - eye)
        G = gamma(flt, t)
        upd("gtjg", G.T @ J @ G - target)
        upd("gamma_inverse", gamma_inverse(flt, t) @ G - np.eye(2 * f))
    out.update(acc)
    return out
