"""Pure numpy implementations of the hot kernels.

Used when the compiled extension is unavailable, and as the reference the
extension is tested against.  The two modules expose identical signatures.
"""
import numpy as np


def continued_inverse(Rs, P, S):
    """Nested inversions ``X[i] = (Rs[i] - P X[i+1] S)^-1`` from the innermost level out.

    Parameters
    ----------
    Rs : (depth, m, m) ndarray
        Diagonal blocks, outermost first.
    P, S : (m, m) ndarray
        Left and right coupling blocks.

    Returns
    -------
    X : (depth, m, m) ndarray
    conds : (depth,) ndarray
        1-norm condition number of each inverted bracket; ``inf`` marks an
        exactly singular bracket, after which the remaining levels are left zero.
    """
    Rs = np.asarray(Rs, dtype=float)
    depth, m, _ = Rs.shape
    X = np.zeros_like(Rs)
    conds = np.full(depth, np.inf)
    inner = np.zeros((m, m))
    for i in range(depth - 1, -1, -1):
        M = Rs[i] - P @ inner @ S
        try:
            Minv = np.linalg.inv(M)
        except np.linalg.LinAlgError:
            return X, conds
        conds[i] = np.abs(M).sum(axis=0).max() * np.abs(Minv).sum(axis=0).max()
        if not np.isfinite(conds[i]):
            conds[i] = np.inf
            return X, conds
        X[i] = Minv
        inner = Minv
    return X, conds


def rk4_propagate(A, Q2, Q4, Y0, t0, t1, steps):
    """Classical RK4 for ``Y' = Pi(t) Y`` with ``Pi = [[0, 1], [-K(t), 0]]``.

    ``K(t) = A - 2 Q2 cos 2t - 2 Q4 cos 4t``; ``Y0`` is ``(2f, m)``.
    """
    A = np.asarray(A, dtype=float)
    Q2 = np.asarray(Q2, dtype=float)
    Q4 = np.asarray(Q4, dtype=float)
    f = A.shape[0]
    Y = np.array(Y0, dtype=float)
    h = (t1 - t0) / steps

    def K(t):
        return A - 2.0 * np.cos(2.0 * t) * Q2 - 2.0 * np.cos(4.0 * t) * Q4

    def rhs(Kt, Z):
        return np.concatenate((Z[f:], -Kt @ Z[:f]), axis=0)

    for k in range(steps):
        t = t0 + k * h
        K0 = K(t)
        Kh = K(t + 0.5 * h)
        K1 = K(t + h)
        k1 = rhs(K0, Y)
        k2 = rhs(Kh, Y + 0.5 * h * k1)
        k3 = rhs(Kh, Y + 0.5 * h * k2)
        k4 = rhs(K1, Y + h * k3)
        Y = Y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    return Y
