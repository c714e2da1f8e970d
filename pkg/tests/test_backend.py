"""The compiled kernels and the numpy fallback must agree."""
import os
import subprocess
import sys

import numpy as np
import pytest

from floquet_modes import _backend, _pykernels

ckernels = pytest.importorskip("floquet_modes._ckernels")


def _sym(rng, f):
    M = rng.normal(size=(f, f))
    return M + M.T


@pytest.mark.parametrize("f", [1, 2, 3])
def test_continued_inverse_agrees(f):
    rng = np.random.default_rng(f)
    levels = np.arange(1, 30)
    A = _sym(rng, f)
    Rs = np.stack([A - (2 * n + 0.37) ** 2 * np.eye(f) for n in levels])
    P, S = 0.3 * _sym(rng, f), 0.3 * _sym(rng, f)
    Xc, cc = ckernels.continued_inverse(Rs, P, S)
    Xp, cp = _pykernels.continued_inverse(Rs, P, S)
    np.testing.assert_allclose(Xc, Xp, rtol=1e-12, atol=1e-15)
    np.testing.assert_allclose(cc, cp, rtol=1e-8)


def test_singular_bracket_is_flagged_by_both():
    Rs = np.stack([np.zeros((2, 2)), np.eye(2)])
    P = np.zeros((2, 2))
    for kern in (ckernels, _pykernels):
        _, conds = kern.continued_inverse(Rs, P, P)
        assert not np.isfinite(conds[0])


@pytest.mark.parametrize("f", [1, 3])
def test_rk4_agrees(f):
    rng = np.random.default_rng(10 + f)
    A, Q2, Q4 = _sym(rng, f) + 3 * np.eye(f), 0.2 * _sym(rng, f), 0.1 * _sym(rng, f)
    Y0 = np.eye(2 * f)
    Yc = ckernels.rk4_propagate(A, Q2, Q4, Y0, 0.0, np.pi, 512)
    Yp = _pykernels.rk4_propagate(A, Q2, Q4, Y0, 0.0, np.pi, 512)
    np.testing.assert_allclose(Yc, Yp, rtol=1e-11, atol=1e-13)


def test_fallback_selected_by_environment():
    env = dict(os.environ, FLOQUET_MODES_PURE_PYTHON="1")
    out = subprocess.run(
        [sys.executable, "-c", "from floquet_modes import _backend; print(_backend.BACKEND)"],
        env=env, capture_output=True, text=True, check=True,
    )
    assert out.stdout.strip() == "python"
    assert _backend.BACKEND in ("cython", "python")
