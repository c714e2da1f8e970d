"""Direct-integration reference for the Floquet problem.

The matrizant is integrated with fixed-step RK4 over one period, giving the
monodromy matrix, its multipliers and a stability class.  Everything the
continued-inversion solver produces is checked against this module.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from . import _backend
from .errors import DefectiveMonodromy, NonFiniteResult
from .model import SystemSpec

PERIOD = np.pi
DEFECTIVE_COND = 1e8


class StabilityClass(str, enum.Enum):
    STABLE = "Stable"
    UNSTABLE = "Unstable"
    MARGINAL = "Marginal"


@dataclass(frozen=True)
class Stability:
    """A stability verdict together with the margin it was decided at."""

    cls: StabilityClass
    margin: float
    max_modulus: float
    integer_distance: float


@dataclass(frozen=True, eq=False)
class FloquetDecomposition:
    monodromy: np.ndarray
    multipliers: np.ndarray
    exponents: np.ndarray
    eigvecs: np.ndarray

    @property
    def det(self) -> complex:
        return complex(np.linalg.det(self.monodromy))


def skew_form(f: int) -> np.ndarray:
    """The standard symplectic matrix ``J = [[0, -1], [1, 0]]`` in blocks."""
    eye = np.eye(f)
    zero = np.zeros((f, f))
    return np.block([[zero, -eye], [eye, zero]])


def stiffness(spec: SystemSpec, t: float) -> np.ndarray:
    return spec.A - 2.0 * np.cos(2.0 * t) * spec.Q2 - 2.0 * np.cos(4.0 * t) * spec.Q4


def pi_matrix(t: float, spec: SystemSpec) -> np.ndarray:
    """Right-hand side matrix of the first-order system ``phi' = Pi(t) phi``."""
    f = spec.f
    return np.block([[np.zeros((f, f)), np.eye(f)], [-stiffness(spec, t), np.zeros((f, f))]])


def propagate_matrix(spec: SystemSpec, Y0, t0: float, t1: float, steps: int) -> np.ndarray:
    """Carry the columns of ``Y0`` from ``t0`` to ``t1`` with ``steps`` RK4 steps."""
    Y0 = np.asarray(Y0, dtype=float)
    squeeze = Y0.ndim == 1
    if squeeze:
        Y0 = Y0[:, None]
    if t1 == t0:
        out = Y0.copy()
    else:
        out = _backend.rk4_propagate(spec.A, spec.Q2, spec.Q4, Y0, float(t0), float(t1), int(steps))
    if not np.all(np.isfinite(out)):
        raise NonFiniteResult(f"integration overflowed on [{t0}, {t1}]")
    return out[:, 0] if squeeze else out


def integrate_matrizant(spec: SystemSpec, t_end: float, steps: int = 4096) -> np.ndarray:
    """Principal fundamental matrix ``Phi(t_end)`` with ``Phi(0) = 1``."""
    if steps < 64:
        raise ValueError("steps must be at least 64")
    return propagate_matrix(spec, np.eye(2 * spec.f), 0.0, t_end, steps)


def monodromy(spec: SystemSpec, steps: int = 4096) -> np.ndarray:
    return integrate_matrizant(spec, PERIOD, steps)


def _sort_key(lam):
    # ties in modulus are broken by argument in [0, 2 pi)
    return (-round(abs(lam), 9), round(float(np.angle(lam)) % (2 * np.pi), 12))


def floquet_decompose(monodromy) -> FloquetDecomposition:
    """Eigen-decompose a monodromy matrix into multipliers and exponents.

    Exponents use the principal logarithm, ``beta = ln(lambda) / (i pi)``, so
    their real parts lie in ``(-1, 1]``.

    Raises
    ------
    DefectiveMonodromy
        If the eigenvector matrix has condition number above 1e8, which
        happens on stability boundaries where Jordan blocks appear.
    """
    Xi = np.asarray(monodromy, dtype=complex)
    lam, P = np.linalg.eig(Xi)
    cond = np.linalg.cond(P)
    if not np.isfinite(cond) or cond > DEFECTIVE_COND:
        raise DefectiveMonodromy(cond)
    order = sorted(range(len(lam)), key=lambda k: _sort_key(lam[k]))
    lam = lam[order]
    P = P[:, order]
    beta = np.log(lam) / (1j * PERIOD)
    return FloquetDecomposition(monodromy=Xi, multipliers=lam, exponents=beta, eigvecs=P)


def integer_distance(dec: FloquetDecomposition) -> float:
    """Smallest distance of a real exponent to an integer (``inf`` if none is real)."""
    beta = dec.exponents
    re = beta.real
    return float(np.min(np.abs(re - np.round(re)))) if len(re) else float("inf")


def classify_stability(dec: FloquetDecomposition, margin: float = 1e-6) -> Stability:
    if not 0 < margin <= 0.1:
        raise ValueError("margin must lie in (0, 0.1]")
    mods = np.abs(dec.multipliers)
    max_mod = float(mods.max())
    dist = integer_distance(dec)
    if max_mod > 1.0 + margin:
        cls = StabilityClass.UNSTABLE
    elif np.all(np.abs(mods - 1.0) <= margin) and dist > margin:
        cls = StabilityClass.STABLE
    else:
        cls = StabilityClass.MARGINAL
    return Stability(cls=cls, margin=margin, max_modulus=max_mod, integer_distance=dist)


def analyze(spec: SystemSpec, steps: int = 4096, margin: float = 1e-6):
    """Monodromy, decomposition and stability in one call."""
    dec = floquet_decompose(monodromy(spec, steps))
    return dec, classify_stability(dec, margin)


def multiplier_mismatch(beta: float, dec: FloquetDecomposition) -> float:
    """Distance from ``exp(i beta pi)`` to the nearest oracle multiplier.

    Comparing multipliers sidesteps the branch choice for ``beta``.
    """
    lam = np.exp(1j * beta * PERIOD)
    return float(np.min(np.abs(dec.multipliers - lam)))
