import numpy as np
import pytest
from _support import GENERIC_F2
from hypothesis import given, settings
from hypothesis import strategies as st

from floquet_modes import transform as tr
from floquet_modes.continued import ModeSet, solve_modes
from floquet_modes.errors import NonRealRoundTrip, SingularU
from floquet_modes.model import SystemSpec
from floquet_modes.oracle import integrate_matrizant, skew_form

B1, B2 = 0.5, 1.3
DECOUPLED = SystemSpec(A=np.diag([B1**2, B2**2]), Q2=np.zeros((2, 2)))


@pytest.fixture(scope="module")
def generic():
    return tr.solve_transform(GENERIC_F2)


@pytest.fixture(scope="module")
def decoupled():
    return tr.solve_transform(DECOUPLED)


def _unnormalized(modes: ModeSet) -> ModeSet:
    return ModeSet(modes.exponents, modes.coefficients, modes.truncation, modes.residuals,
                   modes.converged, modes.degenerate, False, modes.spec)


def test_raw_decoupled_matrices():
    modes = solve_modes(DECOUPLED)
    U, V = tr.assemble_uv(modes, 0.0)
    np.testing.assert_allclose(U, np.eye(2), atol=1e-12)
    np.testing.assert_allclose(V, 1j * np.diag([B1, B2]), atol=1e-12)
    np.testing.assert_allclose(tr.scaling_matrix(modes), np.diag([2 * B1, 2 * B2]), atol=1e-12)


def test_normalized_decoupled_matrices(decoupled):
    np.testing.assert_allclose(decoupled.U(0.0), np.diag(1 / np.sqrt([2 * B1, 2 * B2])), atol=1e-12)
    np.testing.assert_allclose(decoupled.V(0.0), 1j * np.diag(np.sqrt([B1 / 2, B2 / 2])), atol=1e-12)
    np.testing.assert_allclose(np.diag(decoupled.scale).real, 1 / np.sqrt([2 * B1, 2 * B2]), atol=1e-12)


def test_v_is_time_derivative_of_u_times_phase(generic):
    # V(t) e^{iBt} = d/dt [U(t) e^{iBt}]
    h, t = 1e-5, 0.9
    E = lambda s: np.diag(np.exp(1j * generic.exponents * s))  # noqa: E731
    fd = (generic.U(t + h) @ E(t + h) - generic.U(t - h) @ E(t - h)) / (2 * h)
    np.testing.assert_allclose(fd, generic.V(t) @ E(t), atol=1e-8)


def test_normalization_condition(generic):
    U0, V0 = generic.U(0.0), generic.V(0.0)
    np.testing.assert_allclose(V0.T @ U0, 0.5j * np.eye(2), atol=1e-10)


def test_normalize_is_idempotent(generic):
    again = tr.normalize(generic.modes)
    np.testing.assert_allclose(again.coefficients, generic.modes.coefficients, atol=1e-10)


@pytest.mark.parametrize("t", [0.0, np.pi / 3, np.pi])
def test_gamma_inverse_closed_form(generic, t):
    G = tr.gamma(generic, t)
    np.testing.assert_allclose(tr.gamma_inverse(generic, t) @ G, np.eye(4), atol=1e-9)
    np.testing.assert_allclose(np.linalg.inv(G), tr.gamma_inverse(generic, t), atol=1e-9)


@pytest.mark.parametrize("t", [0.0, np.pi / 3])
def test_gamma_symplectic_form(generic, t):
    G = tr.gamma(generic, t)
    target = np.block([[np.zeros((2, 2)), 1j * np.eye(2)], [-1j * np.eye(2), np.zeros((2, 2))]])
    np.testing.assert_allclose(G.T @ skew_form(2) @ G, target, atol=1e-9)


def test_zero_state_maps_to_zero(generic):
    m = tr.to_modes(generic, tr.PhaseState(np.zeros(2), np.zeros(2)), 0.4)
    assert np.allclose(m.vector, 0)
    assert np.allclose(tr.mode_actions(m), 0)


def test_decoupled_mode_variables(decoupled):
    m = tr.to_modes(decoupled, tr.PhaseState([1.0, 0.0], [0.0, 0.0]), 0.0)
    np.testing.assert_allclose(m.zeta, [np.sqrt(B1 / 2), 0], atol=1e-12)
    np.testing.assert_allclose(m.xi, [np.sqrt(B1 / 2), 0], atol=1e-12)
    np.testing.assert_allclose(tr.mode_actions(m), [B1 / 2, 0], atol=1e-12)


def test_round_trip_random_states(generic):
    rng = np.random.default_rng(5)
    for _ in range(100):
        phi = tr.PhaseState(rng.normal(size=2), rng.normal(size=2))
        t = rng.uniform(0, np.pi)
        back = tr.from_modes(generic, tr.to_modes(generic, phi, t), t)
        np.testing.assert_allclose(back.vector, phi.vector, atol=1e-10)


def test_from_modes_rejects_non_real(generic):
    with pytest.raises(NonRealRoundTrip):
        tr.from_modes(generic, tr.ModeState(np.array([1.0, 0]), np.array([0.0, 0])), 0.0)


def test_propagate_initial_and_harmonic(decoupled):
    s0 = tr.PhaseState([1.0, 0.0], [0.0, 0.0])
    np.testing.assert_allclose(tr.propagate(decoupled, s0, 0.0).vector, s0.vector, atol=1e-12)
    for t in (0.3, 2.0, 7.5):
        np.testing.assert_allclose(tr.propagate(decoupled, s0, t).u, [np.cos(B1 * t), 0.0], atol=1e-12)


def test_propagate_matches_integration(generic):
    phi0 = np.array([0.3, -0.2, 0.1, 0.5])
    direct = integrate_matrizant(GENERIC_F2, 2.5) @ phi0
    got = tr.propagate(generic, tr.PhaseState.from_vector(phi0), 2.5).vector
    np.testing.assert_allclose(got, direct, atol=1e-7)


def test_monodromy_reconstruction(generic):
    np.testing.assert_allclose(tr.propagator(generic, np.pi), integrate_matrizant(GENERIC_F2, np.pi), atol=1e-10)


def test_actions_conserved(generic):
    s0 = tr.PhaseState([0.4, -0.1], [0.2, 0.3])
    I0 = tr.mode_actions(tr.to_modes(generic, s0, 0.0))
    for t in np.linspace(0, 10 * np.pi, 23):
        I = tr.mode_actions(tr.to_modes(generic, tr.propagate(generic, s0, t), t))
        np.testing.assert_allclose(I, I0, atol=1e-8)


def test_generating_function_zero():
    flt = tr.solve_transform(GENERIC_F2)
    assert tr.generating_function(flt, np.zeros(2), np.zeros(2), 0.3) == 0


def test_generating_function_harmonic_scalar():
    beta = 0.7
    flt = tr.solve_transform(SystemSpec(A=[[beta**2]], Q2=[[0.0]]))
    u, z = 0.4, 0.3 - 0.2j
    expected = 0.5j * beta * u**2 - 1j * np.sqrt(2 * beta) * u * z + 0.5j * z**2
    assert tr.generating_function(flt, [u], [z], 1.1) == pytest.approx(expected, abs=1e-12)


def test_generating_function_gradient_is_momentum(generic):
    rng = np.random.default_rng(11)
    h = 1e-5
    for _ in range(5):
        t = rng.uniform(0, np.pi)
        state = tr.PhaseState(rng.normal(size=2), rng.normal(size=2))
        zeta = tr.to_modes(generic, state, t).zeta
        grad = np.array([
            (tr.generating_function(generic, state.u + h * e, zeta, t)
             - tr.generating_function(generic, state.u - h * e, zeta, t)) / (2 * h)
            for e in np.eye(2)
        ])
        assert np.max(np.abs(grad - state.p)) <= 1e-6


def test_singular_u_detected(generic):
    class Degenerate(tr.FLTransform):
        def U(self, t):
            return np.zeros((2, 2), dtype=complex)

    bad = Degenerate(generic.modes, generic.B, generic.scale, generic.U_blocks, generic.V_blocks)
    with pytest.raises(SingularU):
        tr.generating_function(bad, np.ones(2), np.ones(2), 0.0)


def test_identities_decoupled(decoupled):
    res = tr.check_canonical_identities(decoupled, [0.0, 0.5, 2.0])
    assert max(res.values()) <= 1e-12


def test_identities_generic(generic):
    res = tr.check_canonical_identities(generic, [0.0, 0.7, np.pi])
    assert max(res.values()) <= 1e-9, res


def test_unnormalized_modes_fail_normalization():
    raw = tr.build_transform(_unnormalized(solve_modes(GENERIC_F2)), normalize_modes=False)
    assert tr.check_canonical_identities(raw, [0.0])["normalization"] > 0.1


def test_arg_det_u_is_continuous_and_consistent(generic):
    ts = np.linspace(0, 3 * np.pi, 3001)
    arg = generic.arg_det_u(ts)
    assert np.max(np.abs(np.diff(arg))) < 0.05
    det = np.linalg.det(generic.U(ts))
    np.testing.assert_allclose(np.exp(1j * arg), det / np.abs(det), atol=1e-10)
    assert generic.arg_det_u(0.0) == pytest.approx(np.angle(np.linalg.det(generic.U(0.0))))


@settings(max_examples=20, deadline=None)
@given(st.floats(-20, 20), st.floats(-2, 2), st.floats(-2, 2), st.floats(-2, 2), st.floats(-2, 2))
def test_propagator_symplectic_everywhere(t, u1, u2, p1, p2):
    flt = tr.solve_transform(GENERIC_F2)
    P = tr.propagator(flt, t)
    J = skew_form(2)
    np.testing.assert_allclose(P.T @ J @ P, J, atol=1e-9)
    s0 = tr.PhaseState([u1, u2], [p1, p2])
    I0 = tr.mode_actions(tr.to_modes(flt, s0, 0.0))
    I = tr.mode_actions(tr.to_modes(flt, tr.propagate(flt, s0, t), t))
    np.testing.assert_allclose(I, I0, atol=1e-9 * (1 + np.abs(I0).max()))
