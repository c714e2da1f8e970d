"""System definition shared by all solvers.

The equations of motion are

    u'' + (A - 2 Q2 cos 2t - 2 Q4 cos 4t) u = G + 2 F cos 2t

with real symmetric ``f x f`` matrices and real ``f``-vectors, already in
Mathieu-scaled (dimensionless) form.
"""
from __future__ import annotations

import dataclasses
from dataclasses import dataclass

import numpy as np

from .errors import AsymmetricMatrix, DimensionMismatch, NonPositiveDimension, ValidationError

SYMMETRY_TOL = 1e-12


def _frozen_array(value, ndim):
    arr = np.array(value, dtype=float)
    if arr.ndim != ndim:
        raise DimensionMismatch(f"expected a {ndim}-d array, got shape {arr.shape}")
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class SystemSpec:
    """Coefficients of a coupled Mathieu (or double-cosine Hill) system.

    ``Q4``, ``G`` and ``F`` default to zero so downstream code always sees the
    same shapes.  ``f`` is inferred from ``A`` when omitted.
    """

    A: np.ndarray
    Q2: np.ndarray
    Q4: np.ndarray | None = None
    G: np.ndarray | None = None
    F: np.ndarray | None = None
    f: int | None = None

    def __post_init__(self):
        A = _frozen_array(self.A, 2)
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "Q2", _frozen_array(self.Q2, 2))
        n = A.shape[0]
        if self.f is None:
            object.__setattr__(self, "f", int(n))
        zeros_m = np.zeros((n, n))
        zeros_v = np.zeros(n)
        object.__setattr__(self, "Q4", _frozen_array(zeros_m if self.Q4 is None else self.Q4, 2))
        object.__setattr__(self, "G", _frozen_array(zeros_v if self.G is None else self.G, 1))
        object.__setattr__(self, "F", _frozen_array(zeros_v if self.F is None else self.F, 1))

    @property
    def has_q4(self) -> bool:
        return bool(np.any(self.Q4 != 0.0))

    @property
    def is_driven(self) -> bool:
        return bool(np.any(self.G != 0.0) or np.any(self.F != 0.0))

    def replace(self, **changes) -> "SystemSpec":
        return dataclasses.replace(self, **changes)

    @classmethod
    def from_dict(cls, data: dict) -> "SystemSpec":
        try:
            return cls(
                A=data["A"],
                Q2=data["Q2"],
                Q4=data.get("Q4"),
                G=data.get("G"),
                F=data.get("F"),
                f=data.get("f"),
            )
        except KeyError as exc:
            raise ValidationError(f"missing system key {exc.args[0]!r}") from None

    def to_dict(self) -> dict:
        out = {"f": self.f, "A": self.A.tolist(), "Q2": self.Q2.tolist()}
        if self.has_q4:
            out["Q4"] = self.Q4.tolist()
        if np.any(self.G != 0.0):
            out["G"] = self.G.tolist()
        if np.any(self.F != 0.0):
            out["F"] = self.F.tolist()
        return out


@dataclass(frozen=True)
class Tolerances:
    """Numerical knobs used across the solvers."""

    truncation_order: int = 16
    convergence_tol: float = 1e-12
    root_tol: float = 1e-13
    identity_tol: float = 1e-9
    oracle_steps: int = 4096

    def __post_init__(self):
        for name in ("convergence_tol", "root_tol", "identity_tol"):
            if not getattr(self, name) > 0:
                raise ValidationError(f"tolerance {name} must be positive")
        if int(self.truncation_order) < 3:
            raise ValidationError("truncation_order must be at least 3")
        if int(self.oracle_steps) < 1:
            raise ValidationError("oracle_steps must be positive")

    @classmethod
    def from_dict(cls, data: dict | None) -> "Tolerances":
        if not data:
            return cls()
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ValidationError(f"unknown tolerance keys: {sorted(unknown)}")
        return cls(**data)

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)


def validate_system(raw: SystemSpec) -> SystemSpec:
    """Check the invariants of a system and return it unchanged.

    Nothing is symmetrized: an asymmetric input almost always means a typo in
    the configuration, so it is rejected with the offending matrix named.
    """
    if raw.f is None or int(raw.f) < 1:
        raise NonPositiveDimension(f"f must be a positive integer, got {raw.f}")
    f = int(raw.f)
    for name in ("A", "Q2", "Q4"):
        m = getattr(raw, name)
        if m.shape != (f, f):
            raise DimensionMismatch(f"{name} has shape {m.shape}, expected ({f}, {f})")
    for name in ("G", "F"):
        v = getattr(raw, name)
        if v.shape != (f,):
            raise DimensionMismatch(f"{name} has shape {v.shape}, expected ({f},)")
    for name in ("A", "Q2", "Q4", "G", "F"):
        if not np.all(np.isfinite(getattr(raw, name))):
            raise ValidationError(f"{name} contains non-finite entries")
    for name in ("A", "Q2", "Q4"):
        m = getattr(raw, name)
        asym = float(np.max(np.abs(m - m.T)))
        if asym > SYMMETRY_TOL:
            raise AsymmetricMatrix(name, asym)
    return raw
