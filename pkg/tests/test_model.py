import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from floquet_modes.errors import AsymmetricMatrix, DimensionMismatch, NonPositiveDimension, ValidationError
from floquet_modes.model import SystemSpec, Tolerances, validate_system


def test_scalar_system_is_accepted():
    spec = validate_system(SystemSpec(A=[[0.5]], Q2=[[0.1]]))
    assert spec.f == 1
    assert not spec.has_q4 and not spec.is_driven
    np.testing.assert_array_equal(spec.Q4, [[0.0]])
    np.testing.assert_array_equal(spec.G, [0.0])


def test_asymmetric_q2_is_named():
    raw = SystemSpec(A=[[1, 0.2], [0.2, 2]], Q2=[[0.3, 0], [0.1, 0.3]])
    with pytest.raises(AsymmetricMatrix) as info:
        validate_system(raw)
    assert info.value.name == "Q2"
    assert info.value.asymmetry == pytest.approx(0.1)


def test_shape_mismatch():
    with pytest.raises(DimensionMismatch):
        validate_system(SystemSpec(A=np.eye(2), Q2=np.eye(3)))


def test_explicit_dimension_must_be_positive():
    with pytest.raises(NonPositiveDimension):
        validate_system(SystemSpec(A=[[1.0]], Q2=[[0.0]], f=0))


def test_non_finite_entries_rejected():
    with pytest.raises(ValidationError):
        validate_system(SystemSpec(A=[[np.nan]], Q2=[[0.0]]))


def test_arrays_are_frozen():
    spec = SystemSpec(A=[[0.5]], Q2=[[0.1]])
    with pytest.raises(ValueError):
        spec.A[0, 0] = 1.0


def test_dict_round_trip():
    spec = SystemSpec(A=[[0.5, 0.1], [0.1, 2.0]], Q2=[[0.1, 0], [0, 0.2]], G=[1.0, 0.0])
    back = SystemSpec.from_dict(spec.to_dict())
    for name in ("A", "Q2", "Q4", "G", "F"):
        np.testing.assert_array_equal(getattr(back, name), getattr(spec, name))


def test_missing_key_is_a_validation_error():
    with pytest.raises(ValidationError):
        SystemSpec.from_dict({"A": [[1.0]]})


def test_tolerances_reject_unknown_keys():
    with pytest.raises(ValidationError):
        Tolerances.from_dict({"root_tolerance": 1e-9})
    assert Tolerances.from_dict({"root_tol": 1e-12}).root_tol == 1e-12


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 4), st.integers(0, 2**32 - 1))
def test_symmetric_inputs_always_validate(f, seed):
    rng = np.random.default_rng(seed)
    M = rng.normal(size=(f, f))
    N = rng.normal(size=(f, f))
    spec = validate_system(SystemSpec(A=M + M.T, Q2=N + N.T))
    assert spec.f == f
