import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from qpc_monitor.errors import (
    NegativeRateError,
    NonFiniteError,
    TransmissionOutOfRange,
    ZeroCapacityError,
)
from qpc_monitor.model import (
    DetectorMicroParams,
    InitialCondition,
    SystemParams,
    build_initial,
    validate_params,
)


def test_regimes():
    assert validate_params(SystemParams(1.0, 32.0)).regime == "strong"
    assert validate_params(SystemParams(1.0, 1.0)).regime == "boundary"
    assert SystemParams(1.0, 0.1).regime == "weak"
    assert SystemParams(0.0, 1.0).regime == "decoupled"


@pytest.mark.parametrize("bad, exc", [
    (SystemParams(1.0, -1.0), NegativeRateError),
    (SystemParams(-1.0, 1.0), NegativeRateError),
    (SystemParams(1.0, math.nan), NonFiniteError),
    (SystemParams(1.0, 1.0, math.inf), NonFiniteError),
])
def test_invalid_params(bad, exc):
    with pytest.raises(exc):
        validate_params(bad)


@given(st.floats(0, 100), st.floats(0, 100), st.floats(-10, 10))
def test_validate_is_idempotent(w, d1, eps):
    p = SystemParams(w, d1, eps)
    assert validate_params(validate_params(p)) == p


@pytest.mark.parametrize("kind, expected", [
    ("left", (1.0, 0.0, 0.0)),
    ("right", (0.0, 1.0, 0.0)),
    ("ground", (0.5, 0.5, 0.5)),
    ("mixture", (0.5, 0.5, 0.0)),
])
def test_build_initial(kind, expected):
    state = build_initial(kind, 5)
    assert (state.s11[0], state.s22[0], state.s12[0]) == expected
    assert not np.any(state.s11[1:]) and not np.any(state.s22[1:])
    assert state.n_max == 5


@given(st.sampled_from(list(InitialCondition)), st.integers(1, 50))
def test_initial_trace_is_exactly_one(kind, cap):
    assert build_initial(kind, cap).trace == 1.0


def test_zero_capacity_rejected():
    with pytest.raises(ZeroCapacityError):
        build_initial("left", 0)


def test_ground_state_is_pure():
    rho = InitialCondition.GROUND.reduced()
    assert abs(rho.s12) ** 2 == rho.s11 * rho.s22
    assert rho.s21 == np.conj(rho.s12)
    m = rho.as_matrix()
    assert np.allclose(m, m.conj().T)


def test_state_arrays_are_read_only():
    state = build_initial("left", 3)
    with pytest.raises(ValueError):
        state.s11[0] = 0.5


def test_transmission_relation():
    # (2 pi)^2 coupling^2 rho_l rho_r = T, so coupling^2 rho^2 = 1/4pi^2 gives T = 1
    micro = DetectorMicroParams(coupling=1 / (2 * math.pi), rho_l=1.0, rho_r=1.0,
                                v_d=1.0)
    assert micro.transmission == pytest.approx(1.0, rel=1e-15)
    assert micro.penetration_rate == pytest.approx(micro.transmission / (2 * math.pi))


def test_transmission_out_of_range():
    with pytest.raises(TransmissionOutOfRange):
        DetectorMicroParams(coupling=1.0, rho_l=1.0, rho_r=1.0, v_d=1.0)
    with pytest.raises(TransmissionOutOfRange):
        DetectorMicroParams.from_transmission(1.5, 1.0)
