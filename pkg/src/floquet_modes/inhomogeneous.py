"""Periodic response to the constant plus ``2F cos 2t`` drive.

The forced system ``u'' + (A - 2Q cos 2t) u = G + 2F cos 2t`` has, away from
resonance, exactly one pi-periodic solution ``u_pi = sum_n B_{2n} e^{2int}``
with ``B_{2n} = B_{-2n}``.  The harmonics with ``n >= 2`` obey the homogeneous
recursion at ``beta = 0`` and are closed by a continued inversion, leaving a
``2f x 2f`` linear system for ``(B_0, B_2)``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .continued import N_MAX, _chain, _r_stack, _rel_change
from .errors import NoConvergence, ResidualTooLarge, SingularBlockSystem, UnsupportedSystem
from .model import SystemSpec, Tolerances

SINGULAR_BLOCK_COND = 1e12


@dataclass(frozen=True, eq=False)
class PeriodicResponse:
    """Harmonics ``B_{2n}`` for ``n = 0..N`` (the negative ones are mirror copies).

    ``action_coeffs[0]`` is the secular rate of the classical action and
    ``action_coeffs[k]`` multiplies ``sin(2kt)/k``.
    """

    half_coeffs: np.ndarray  # (N+1, f)
    action_coeffs: np.ndarray  # (2N+1,)
    residual: float

    @property
    def truncation(self) -> int:
        return self.half_coeffs.shape[0] - 1

    @property
    def orders(self) -> np.ndarray:
        N = self.truncation
        return np.arange(-N, N + 1)

    @property
    def coefficients(self) -> np.ndarray:
        """All harmonics ``B_{2n}``, ``n = -N..N``, as rows."""
        return np.concatenate([self.half_coeffs[:0:-1], self.half_coeffs])

    @property
    def secular_rate(self) -> float:
        return float(self.action_coeffs[0])

    def _harmonics(self, t, power):
        t = np.asarray(t, dtype=float)
        n = np.arange(1, self.truncation + 1)
        arg = 2.0 * np.multiply.outer(t, n)
        w = (2.0 * n) ** power
        b = self.half_coeffs
        if power % 4 == 0:
            trig, sign = np.cos(arg), 1.0
        elif power % 4 == 1:
            trig, sign = np.sin(arg), -1.0
        elif power % 4 == 2:
            trig, sign = np.cos(arg), -1.0
        else:
            trig, sign = np.sin(arg), 1.0
        osc = 2.0 * sign * (trig * w) @ b[1:]
        return osc + (b[0] if power == 0 else 0.0)

    def u(self, t):
        """``u_pi(t)``; array ``t`` gives a trailing component axis."""
        return self._harmonics(t, 0)

    def u_dot(self, t):
        return self._harmonics(t, 1)

    def u_ddot(self, t):
        return self._harmonics(t, 2)

    def action(self, t):
        return action_alpha(self, t)


def _tail_chain(spec: SystemSpec, depth: int):
    levels = np.arange(2, depth + 1)
    return _chain(_r_stack(levels, 0.0, spec.A), spec.Q2, spec.Q2, levels)


def _converged_tail(spec: SystemSpec, tol: Tolerances):
    N = max(int(tol.truncation_order), 2)
    X1 = _tail_chain(spec, N)
    while True:
        X2 = _tail_chain(spec, 2 * N)
        change = _rel_change(X1[0], X2[0])
        if change < tol.convergence_tol or not np.any(spec.Q2):
            return X2
        N *= 2
        if 2 * N > N_MAX:
            raise NoConvergence(N_MAX, change)
        X1 = X2


def _action_coefficients(b: np.ndarray, G: np.ndarray, F: np.ndarray) -> np.ndarray:
    # integrand sum_k c_k e^{2ikt}:  c_k = -k^2 sum_{n+m=k} b_n.b_m + (G.b_k + F.(b_{k-1}+b_{k+1}))/2
    full = np.concatenate([b[:0:-1], b])  # n = -N..N
    N = b.shape[0] - 1
    conv = sum(np.convolve(full[:, i], full[:, i]) for i in range(full.shape[1]))  # index k + 2N
    ks = np.arange(0, 2 * N + 1)
    c = -(ks.astype(float) ** 2) * conv[2 * N:]

    def bk(k):
        k = abs(k)
        return b[k] if k <= N else np.zeros_like(G)

    c += np.array([0.5 * (G @ bk(k) + F @ (bk(k - 1) + bk(k + 1))) for k in ks])
    return c


def ode_residual(resp: PeriodicResponse, spec: SystemSpec, t) -> np.ndarray:
    """``u'' + (A - 2Q cos 2t) u - G - 2F cos 2t`` evaluated at times ``t``."""
    t = np.atleast_1d(np.asarray(t, dtype=float))
    u = resp.u(t)
    c = np.cos(2 * t)[:, None]
    return resp.u_ddot(t) + u @ spec.A.T - 2 * c * (u @ spec.Q2.T) - spec.G - 2 * c * spec.F


def periodic_solution(spec: SystemSpec, tol: Tolerances = Tolerances()) -> PeriodicResponse:
    """Solve for the unique pi-periodic response.

    Raises
    ------
    UnsupportedSystem
        the system has a ``cos 4t`` component.
    SingularBlockSystem
        the ``(B_0, B_2)`` system is singular, i.e. a pi-periodic homogeneous
        solution exists.
    ResidualTooLarge
        the reconstructed response misses the ODE by more than
        ``convergence_tol * (|G| + |F| + 1)`` at 100 sample times.
    """
    if spec.has_q4:
        raise UnsupportedSystem("the periodic response is implemented for the single-cosine system only")
    f = spec.f
    A, Q, G, F = spec.A, spec.Q2, spec.G, spec.F
    X = _converged_tail(spec, tol)  # X[i] closes level n = i + 2
    R2 = A - 4.0 * np.eye(f)
    block = np.block([[A, -2.0 * Q], [-Q, R2 - Q @ X[0] @ Q]])
    cond = np.linalg.cond(block)
    if not cond <= SINGULAR_BLOCK_COND:
        raise SingularBlockSystem(f"(B0, B2) system has condition number {cond:.3g}")
    sol = np.linalg.solve(block, np.concatenate([G, F]))
    depth = X.shape[0] + 1
    b = np.zeros((depth + 1, f))
    b[0], b[1] = sol[:f], sol[f:]
    for n in range(2, depth + 1):
        b[n] = X[n - 2] @ (Q @ b[n - 1])
    # drop trailing harmonics that underflowed to nothing
    keep = np.nonzero(np.any(np.abs(b) > 0, axis=1))[0]
    b = b[: max(int(keep.max()) + 1 if keep.size else 1, 2)]

    alpha = _action_coefficients(b, G, F)
    resp = PeriodicResponse(b, alpha, 0.0)
    ts = np.linspace(0.0, np.pi, 100)
    res = float(np.max(np.abs(ode_residual(resp, spec, ts))))
    bound = tol.convergence_tol * (np.linalg.norm(G) + np.linalg.norm(F) + 1.0)
    if res > bound:
        raise ResidualTooLarge(b.shape[0] - 1, res)
    return PeriodicResponse(b, alpha, res)


def action_alpha(resp: PeriodicResponse, t):
    """Classical action ``alpha_pi(t)`` of the periodic response, ``alpha_pi(0) = 0``."""
    t = np.asarray(t, dtype=float)
    c = resp.action_coeffs
    k = np.arange(1, c.shape[0])
    return c[0] * t + np.sin(2.0 * np.multiply.outer(t, k)) @ (c[1:] / k)
