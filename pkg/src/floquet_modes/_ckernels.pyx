# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot kernels; see ``_pykernels`` for the reference semantics."""
import numpy as np
cimport numpy as cnp
from libc.math cimport cos, fabs, INFINITY
from libc.stdlib cimport malloc, free

cnp.import_array()


cdef int _invert(double* M, double* out, double* work, Py_ssize_t m) noexcept nogil:
    # Gauss-Jordan with partial pivoting; M is destroyed. Returns 0 when singular.
    cdef Py_ssize_t i, j, k, piv
    cdef double best, v, tmp
    for i in range(m):
        for j in range(m):
            work[i * m + j] = M[i * m + j]
            out[i * m + j] = 1.0 if i == j else 0.0
    for k in range(m):
        piv = k
        best = fabs(work[k * m + k])
        for i in range(k + 1, m):
            v = fabs(work[i * m + k])
            if v > best:
                best = v
                piv = i
        if best == 0.0:
            return 0
        if piv != k:
            for j in range(m):
                tmp = work[k * m + j]; work[k * m + j] = work[piv * m + j]; work[piv * m + j] = tmp
                tmp = out[k * m + j]; out[k * m + j] = out[piv * m + j]; out[piv * m + j] = tmp
        v = 1.0 / work[k * m + k]
        for j in range(m):
            work[k * m + j] *= v
            out[k * m + j] *= v
        for i in range(m):
            if i != k:
                tmp = work[i * m + k]
                if tmp != 0.0:
                    for j in range(m):
                        work[i * m + j] -= tmp * work[k * m + j]
                        out[i * m + j] -= tmp * out[k * m + j]
    return 1


cdef double _norm1(double* M, Py_ssize_t m) noexcept nogil:
    cdef Py_ssize_t i, j
    cdef double best = 0.0, s
    for j in range(m):
        s = 0.0
        for i in range(m):
            s += fabs(M[i * m + j])
        if s > best:
            best = s
    return best


def continued_inverse(Rs, P, S):
    cdef const double[:, :, ::1] R = np.ascontiguousarray(Rs, dtype=np.float64)
    cdef const double[:, ::1] Pm = np.ascontiguousarray(P, dtype=np.float64)
    cdef const double[:, ::1] Sm = np.ascontiguousarray(S, dtype=np.float64)
    cdef Py_ssize_t depth = R.shape[0], m = R.shape[1]
    X_arr = np.zeros((depth, m, m))
    conds_arr = np.full(depth, np.inf)
    cdef double[:, :, ::1] X = X_arr
    cdef double[::1] conds = conds_arr
    cdef double* M = <double*> malloc(m * m * sizeof(double))
    cdef double* T = <double*> malloc(m * m * sizeof(double))
    cdef double* W = <double*> malloc(m * m * sizeof(double))
    cdef double* inner = <double*> malloc(m * m * sizeof(double))
    cdef Py_ssize_t lvl, i, j, k
    cdef double acc, c
    try:
        with nogil:
            for i in range(m * m):
                inner[i] = 0.0
            for lvl in range(depth - 1, -1, -1):
                # T = inner @ S
                for i in range(m):
                    for j in range(m):
                        acc = 0.0
                        for k in range(m):
                            acc += inner[i * m + k] * Sm[k, j]
                        T[i * m + j] = acc
                # M = R - P @ T
                for i in range(m):
                    for j in range(m):
                        acc = 0.0
                        for k in range(m):
                            acc += Pm[i, k] * T[k * m + j]
                        M[i * m + j] = R[lvl, i, j] - acc
                if _invert(M, inner, W, m) == 0:
                    break
                c = _norm1(M, m) * _norm1(inner, m)
                if not (c < INFINITY):
                    break
                conds[lvl] = c
                for i in range(m):
                    for j in range(m):
                        X[lvl, i, j] = inner[i * m + j]
    finally:
        free(M); free(T); free(W); free(inner)
    return X_arr, conds_arr


cdef void _rhs(double* K, double* Y, double* out, Py_ssize_t f, Py_ssize_t ncol) noexcept nogil:
    cdef Py_ssize_t i, j, k
    cdef double acc
    for i in range(f):
        for j in range(ncol):
            out[i * ncol + j] = Y[(f + i) * ncol + j]
    for i in range(f):
        for j in range(ncol):
            acc = 0.0
            for k in range(f):
                acc += K[i * f + k] * Y[k * ncol + j]
            out[(f + i) * ncol + j] = -acc


cdef void _kmat(const double* A, const double* Q2, const double* Q4, double t, double* K, Py_ssize_t f) noexcept nogil:
    cdef Py_ssize_t i
    cdef double c2 = 2.0 * cos(2.0 * t), c4 = 2.0 * cos(4.0 * t)
    for i in range(f * f):
        K[i] = A[i] - c2 * Q2[i] - c4 * Q4[i]


def rk4_propagate(A, Q2, Q4, Y0, double t0, double t1, Py_ssize_t steps):
    cdef const double[:, ::1] Am = np.ascontiguousarray(A, dtype=np.float64)
    cdef const double[:, ::1] Q2m = np.ascontiguousarray(Q2, dtype=np.float64)
    cdef const double[:, ::1] Q4m = np.ascontiguousarray(Q4, dtype=np.float64)
    Y_arr = np.array(Y0, dtype=np.float64, order="C", copy=True)
    cdef double[:, ::1] Y = Y_arr
    cdef Py_ssize_t f = Am.shape[0], ncol = Y.shape[1], n = 2 * f * ncol
    cdef double h = (t1 - t0) / steps
    cdef double t
    cdef Py_ssize_t s, i
    cdef double* buf = <double*> malloc((6 * n + 3 * f * f) * sizeof(double))
    cdef double* k1 = buf
    cdef double* k2 = buf + n
    cdef double* k3 = buf + 2 * n
    cdef double* k4 = buf + 3 * n
    cdef double* Z = buf + 4 * n
    cdef double* Yp = buf + 5 * n
    cdef double* K0 = buf + 6 * n
    cdef double* Kh = K0 + f * f
    cdef double* K1 = Kh + f * f
    try:
        with nogil:
            for i in range(n):
                Yp[i] = (&Y[0, 0])[i]
            for s in range(steps):
                t = t0 + s * h
                _kmat(&Am[0, 0], &Q2m[0, 0], &Q4m[0, 0], t, K0, f)
                _kmat(&Am[0, 0], &Q2m[0, 0], &Q4m[0, 0], t + 0.5 * h, Kh, f)
                _kmat(&Am[0, 0], &Q2m[0, 0], &Q4m[0, 0], t + h, K1, f)
                _rhs(K0, Yp, k1, f, ncol)
                for i in range(n):
                    Z[i] = Yp[i] + 0.5 * h * k1[i]
                _rhs(Kh, Z, k2, f, ncol)
                for i in range(n):
                    Z[i] = Yp[i] + 0.5 * h * k2[i]
                _rhs(Kh, Z, k3, f, ncol)
                for i in range(n):
                    Z[i] = Yp[i] + h * k3[i]
                _rhs(K1, Z, k4, f, ncol)
                for i in range(n):
                    Yp[i] = Yp[i] + (h / 6.0) * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i])
            for i in range(n):
                (&Y[0, 0])[i] = Yp[i]
    finally:
        free(buf)
    return Y_arr
