"""Compare the compiled and pure-numpy kernels on representative workloads.

Usage::

    python3 benchmarks/bench_kernels.py [--repeat 5]

Both implementations are imported directly, so the environment switch
``FLOQUET_MODES_PURE_PYTHON`` has no effect here.
"""
from __future__ import annotations

import argparse
import timeit

import numpy as np

from floquet_modes import _pykernels

try:
    from floquet_modes import _ckernels
except ImportError:  # extension not built
    _ckernels = None


def _continued_case(f, depth, beta=0.37):
    rng = np.random.default_rng(0)
    A = np.diag(rng.uniform(0.2, 3.0, size=f))
    Q = 0.1 * rng.normal(size=(f, f))
    Q = 0.5 * (Q + Q.T)
    Rs = np.stack([A - (2 * (n + 1) + beta) ** 2 * np.eye(f) for n in range(depth)])
    return (Rs, Q, Q)


def _rk4_case(f, steps):
    rng = np.random.default_rng(1)
    A = np.diag(rng.uniform(0.2, 3.0, size=f))
    Q2 = 0.1 * np.eye(f)
    Q4 = np.zeros((f, f))
    return (A, Q2, Q4, np.eye(2 * f), 0.0, np.pi, steps)


CASES = {
    "continued_inverse f=1 depth=32": ("continued_inverse", _continued_case(1, 32)),
    "continued_inverse f=3 depth=64": ("continued_inverse", _continued_case(3, 64)),
    "rk4_propagate f=1 steps=4096": ("rk4_propagate", _rk4_case(1, 4096)),
    "rk4_propagate f=3 steps=4096": ("rk4_propagate", _rk4_case(3, 4096)),
}


def _time(fn, args, repeat):
    number = 1
    while timeit.timeit(lambda: fn(*args), number=number) < 0.05:
        number *= 2
    return min(timeit.repeat(lambda: fn(*args), number=number, repeat=repeat)) / number


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeat", type=int, default=5)
    args = parser.parse_args(argv)
    if _ckernels is None:
        print("compiled extension not available; only the numpy kernels can be timed")
    print(f"{'case':34s} {'numpy [ms]':>12s} {'cython [ms]':>12s} {'speedup':>8s} {'max diff':>10s}")
    for name, (kernel, case) in CASES.items():
        py_fn = getattr(_pykernels, kernel)
        t_py = _time(py_fn, case, args.repeat)
        if _ckernels is None:
            print(f"{name:34s} {t_py * 1e3:12.3f}")
            continue
        c_fn = getattr(_ckernels, kernel)
        t_c = _time(c_fn, case, args.repeat)
        r_py, r_c = py_fn(*case), c_fn(*case)
        if isinstance(r_py, tuple):
            r_py, r_c = r_py[0], r_c[0]
        diff = float(np.max(np.abs(np.asarray(r_py) - np.asarray(r_c))))
        print(f"{name:34s} {t_py * 1e3:12.3f} {t_c * 1e3:12.3f} {t_py / t_c:8.1f} {diff:10.1e}")


if __name__ == "__main__":
    main()
