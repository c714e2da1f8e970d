"""Shared helpers for the test suite: seeded random stable systems and small oracles."""
from __future__ import annotations

import math

import numpy as np
from numpy.polynomial.hermite import hermval

from floquet_modes.continued import mode_vectors, solve_modes
from floquet_modes.model import SystemSpec
from floquet_modes.oracle import StabilityClass, analyze

GENERIC_F1 = SystemSpec(A=[[0.5]], Q2=[[0.2]])
GENERIC_F2 = SystemSpec(A=[[0.5, 0.15], [0.15, 2.2]], Q2=[[0.25, 0.05], [0.05, 0.15]])
DRIVEN_F1 = SystemSpec(A=[[0.5]], Q2=[[0.2]], G=[1.0], F=[0.3])


def _sym(rng, f):
    M = rng.normal(size=(f, f))
    return 0.5 * (M + M.T)


def _well_separated(beta, gap):
    # the 2f oracle exponents come in +-beta pairs; keep one fractional distance per mode
    frac = np.sort(np.abs(beta.real - np.round(beta.real)))[::2]
    pairs = [(x, y) for i, x in enumerate(frac) for y in frac[i + 1:]]
    return (all(x > gap for x in frac)
            and all(y - x > gap and x + y < 1 - gap for x, y in pairs))


def random_stable_spec(rng, f, gap=0.03):
    """A Stable system with ``|Q2| <= 0.3 |A|`` and exponents well away from resonances."""
    while True:
        omega = rng.uniform(0.15, 1.85, size=f)
        O, _ = np.linalg.qr(rng.normal(size=(f, f)))
        A = O @ np.diag(omega**2) @ O.T
        A = 0.5 * (A + A.T)
        Q = _sym(rng, f)
        Q *= rng.uniform(0.05, 0.3) * np.linalg.norm(A, 2) / np.linalg.norm(Q, 2)
        spec = SystemSpec(A=A, Q2=Q)
        dec, stab = analyze(spec)
        if stab.cls is StabilityClass.STABLE and stab.integer_distance > gap and _well_separated(dec.exponents, gap):
            return spec


def random_stable_specs(n, seed, dims=(1, 2, 3)):
    rng = np.random.default_rng(seed)
    return [random_stable_spec(rng, dims[k % len(dims)]) for k in range(n)]


def mathieu_char_fraction(a, q, beta, depth=400):
    """Scalar Mathieu characteristic function in continued-fraction form.

    Zero exactly when ``beta`` is a characteristic exponent of
    ``u'' + (a - 2q cos 2t) u = 0``.  Both continued fractions are evaluated
    from the bottom up by backward recurrence, independently of the matrix code.
    """
    def tail(sign):
        # K = q / (a - (2k+beta)^2 - q K_next), k = sign*1, sign*2, ...
        acc = 0.0
        for k in range(depth, 0, -1):
            acc = q / (a - (2 * sign * k + beta) ** 2 - q * acc)
        return acc

    return a - beta**2 - q * (tail(+1) + tail(-1))


def mathieu_exponent(a, q):
    """Characteristic exponent in (0, 1) by root search on the scalar fraction."""
    from scipy.optimize import brentq

    grid = np.linspace(1e-3, 1 - 1e-3, 400)
    vals = [mathieu_char_fraction(a, q, b) for b in grid]
    for (b0, v0), (b1, v1) in zip(zip(grid, vals), zip(grid[1:], vals[1:])):
        if np.sign(v0) != np.sign(v1) and abs(v0) < 50 and abs(v1) < 50:
            return brentq(lambda b: mathieu_char_fraction(a, q, b), b0, b1, xtol=1e-15, rtol=1e-15)
    raise RuntimeError("no exponent bracket found")


def one_d_number_state(n, u, t, spec):
    """Number state from the periodic-function form: Phi(t) with Phi(0) = 1 and nu."""
    beta = solve_modes(spec).exponents[0]
    s = mode_vectors(beta, spec)
    C = s.coeffs[:, 0] / s.coeffs[:, 0].sum()
    k = s.orders
    nu = np.sum((2 * k + beta) * C)
    Phi = lambda x: np.sum(C * np.exp(2j * k * x))  # noqa: E731
    Phid = np.sum(2j * k * C * np.exp(2j * k * t))
    # continuous branch of arg Phi from t = 0
    grid = np.linspace(0, t, 400)
    arg = np.angle(Phi(0.0)) + np.sum(np.angle([Phi(b) / Phi(a) for a, b in zip(grid[:-1], grid[1:])]))
    sqrtPhi = np.sqrt(abs(Phi(t))) * np.exp(0.5j * arg)
    P = Phi(t)
    H = hermval(np.sqrt(nu / abs(P) ** 2) * u, [0] * n + [1])
    return (np.exp(-1j * n * arg) / (np.sqrt(2.0**n * math.factorial(n)) * sqrtPhi) * (nu / np.pi) ** 0.25
            * np.exp(-1j * (n + 0.5) * beta * t + 0.5 * (1j * Phid / P - beta) * u**2) * H)
