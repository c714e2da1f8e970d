import numpy as np
import pytest
from _support import DRIVEN_F1
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import quad, solve_ivp

from floquet_modes.errors import SingularBlockSystem, UnsupportedSystem
from floquet_modes.inhomogeneous import action_alpha, ode_residual, periodic_solution
from floquet_modes.model import SystemSpec, Tolerances
from floquet_modes.oracle import monodromy

DRIVEN_F2 = SystemSpec(A=[[0.5, 0.15], [0.15, 2.2]], Q2=[[0.25, 0.05], [0.05, 0.15]], G=[1.0, -0.4], F=[0.3, 0.2])


def _forced_rhs(spec):
    f = spec.f

    def rhs(t, y):
        u, p = y[:f], y[f:]
        K = spec.A - 2 * spec.Q2 * np.cos(2 * t)
        return np.concatenate([p, -K @ u + spec.G + 2 * spec.F * np.cos(2 * t)])

    return rhs


def _periodic_orbit_oracle(spec):
    """Initial state of the pi-periodic orbit from the monodromy fixed-point condition."""
    f = spec.f
    sol = solve_ivp(_forced_rhs(spec), (0, np.pi), np.zeros(2 * f), rtol=1e-12, atol=1e-13, method="DOP853")
    Xi = monodromy(spec, steps=8192)
    return np.linalg.solve(np.eye(2 * f) - Xi, sol.y[:, -1])


def test_static_response():
    A = np.array([[0.8, 0.1], [0.1, 1.5]])
    G = np.array([1.0, -2.0])
    resp = periodic_solution(SystemSpec(A=A, Q2=np.zeros((2, 2)), G=G))
    np.testing.assert_allclose(resp.half_coeffs[0], np.linalg.solve(A, G), atol=1e-14)
    assert np.allclose(resp.half_coeffs[1:], 0)


def test_single_harmonic_response():
    A = np.array([[0.8, 0.1], [0.1, 1.5]])
    F = np.array([0.5, 0.25])
    resp = periodic_solution(SystemSpec(A=A, Q2=np.zeros((2, 2)), F=F))
    np.testing.assert_allclose(resp.half_coeffs[1], np.linalg.solve(A - 4 * np.eye(2), F), atol=1e-14)
    assert np.allclose(resp.half_coeffs[0], 0)
    assert np.allclose(resp.half_coeffs[2:], 0)


@pytest.mark.parametrize("spec", [DRIVEN_F1, DRIVEN_F2])
def test_driven_residual_and_orbit(spec):
    tol = Tolerances()
    resp = periodic_solution(spec, tol)
    ts = np.linspace(0, np.pi, 100)
    assert np.max(np.abs(ode_residual(resp, spec, ts))) <= 1e-8
    assert resp.residual <= tol.convergence_tol * (np.linalg.norm(spec.G) + np.linalg.norm(spec.F) + 1)
    phi_star = _periodic_orbit_oracle(spec)
    np.testing.assert_allclose(np.concatenate([resp.u(0.0), resp.u_dot(0.0)]), phi_star, atol=1e-9)


def test_long_time_average_matches_static_harmonic():
    spec = DRIVEN_F1
    resp = periodic_solution(spec)
    T = 200 * np.pi
    ts = np.linspace(0, T, 40001)
    sol = solve_ivp(_forced_rhs(spec), (0, T), [0.0, 0.0], t_eval=ts, rtol=1e-10, atol=1e-12)
    # the free oscillation is quasi-periodic with non-integer exponent and averages out
    assert np.mean(sol.y[0]) == pytest.approx(resp.half_coeffs[0][0], abs=5e-3)


def test_symmetric_harmonics():
    resp = periodic_solution(DRIVEN_F2)
    full = resp.coefficients
    np.testing.assert_array_equal(full, full[::-1])


def test_linearity():
    base = dict(A=DRIVEN_F2.A, Q2=DRIVEN_F2.Q2)
    r1 = periodic_solution(SystemSpec(**base, G=[1.0, 0.0], F=[0.0, 0.5]))
    r2 = periodic_solution(SystemSpec(**base, G=[0.0, -0.4], F=[0.3, -0.3]))
    r12 = periodic_solution(SystemSpec(**base, G=[1.0, -0.4], F=[0.3, 0.2]))
    n = min(r1.half_coeffs.shape[0], r2.half_coeffs.shape[0], r12.half_coeffs.shape[0])
    np.testing.assert_allclose(r12.half_coeffs[:n], r1.half_coeffs[:n] + r2.half_coeffs[:n], atol=1e-13)


def test_action_vanishes_without_drive():
    resp = periodic_solution(SystemSpec(A=[[0.5]], Q2=[[0.2]]))
    np.testing.assert_allclose(action_alpha(resp, np.linspace(0, 5, 7)), 0.0)


def test_static_action_grows_linearly():
    A = np.array([[0.8, 0.1], [0.1, 1.5]])
    G = np.array([1.0, -2.0])
    resp = periodic_solution(SystemSpec(A=A, Q2=np.zeros((2, 2)), G=G))
    rate = 0.5 * G @ np.linalg.solve(A, G)
    for t in (0.0, 0.7, 4.0):
        assert action_alpha(resp, t) == pytest.approx(rate * t, abs=1e-13)


@pytest.mark.parametrize("t", [np.pi, 1.3, 5.0])
def test_action_matches_quadrature(t):
    spec = DRIVEN_F1
    resp = periodic_solution(spec)

    def integrand(s):
        u, ud, udd = resp.u(s), resp.u_dot(s), resp.u_ddot(s)
        return 0.5 * (ud @ ud + u @ (udd + spec.G + 2 * spec.F * np.cos(2 * s)))

    ref = quad(integrand, 0, t, epsabs=1e-13, epsrel=1e-13, limit=200)[0]
    assert action_alpha(resp, t) == pytest.approx(ref, abs=1e-9)


@settings(max_examples=25, deadline=None)
@given(st.floats(-10, 10))
def test_action_secular_increment_is_constant(t):
    resp = periodic_solution(DRIVEN_F2)
    step = action_alpha(resp, t + np.pi) - action_alpha(resp, t)
    assert step == pytest.approx(resp.secular_rate * np.pi, abs=1e-10)


def test_resonant_static_response_is_singular():
    with pytest.raises(SingularBlockSystem):
        periodic_solution(SystemSpec(A=[[4.0]], Q2=[[0.0]], F=[1.0]))


def test_double_cosine_is_not_supported():
    with pytest.raises(UnsupportedSystem):
        periodic_solution(SystemSpec(A=[[0.5]], Q2=[[0.1]], Q4=[[0.05]], G=[1.0]))
