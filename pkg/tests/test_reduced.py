import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from numpy.testing import assert_allclose

from qpc_monitor.model import InitialCondition, ReducedDensityMatrix, SystemParams
from qpc_monitor.reduced import (
    ClosedFormSolution,
    closed_form_localized,
    evolve_reduced,
    ground_state_solution,
    slow_rate,
    zeno_time,
)

LEFT = InitialCondition.LEFT.reduced()
GROUND = InitialCondition.GROUND.reduced()


def test_undamped_rabi():
    t = np.linspace(0, 6, 25)
    s11 = [s.s11 for s in evolve_reduced(LEFT, SystemParams(1.0, 0.0), t)]
    assert_allclose(s11, np.cos(t) ** 2, atol=1e-13)


@pytest.mark.parametrize("g", [0.5, 1.0, 32.0])
def test_ground_state_pure_dephasing(g):
    t = np.linspace(0, 10, 41)
    states = evolve_reduced(GROUND, SystemParams(1.0, g), t)
    s11, s12 = ground_state_solution(SystemParams(1.0, g), t)
    assert all(s.s11 == 0.5 and s.s22 == 0.5 for s in states)
    assert_allclose([s.s12 for s in states], s12, atol=1e-12)
    assert_allclose(s12, 0.5 * np.exp(-g * t / 2), atol=0)


@pytest.mark.parametrize("init", list(InitialCondition))
def test_long_time_mixture(init):
    final = evolve_reduced(init.reduced(), SystemParams(1.0, 3.0, 0.7), [200.0])[0]
    assert final.s11 == pytest.approx(0.5, abs=1e-9)
    assert abs(final.s12) < 1e-9


@given(g=st.floats(0.0, 80.0), eps=st.floats(-5, 5), t=st.floats(0, 20),
       init=st.sampled_from(list(InitialCondition)))
def test_trace_and_positivity(g, eps, t, init):
    s = evolve_reduced(init.reduced(), SystemParams(1.0, g, eps), [t])[0]
    assert abs(s.s11 + s.s22 - 1) < 1e-13
    assert s.is_valid(1e-12)


def test_closed_form_initial_values():
    s11, s12 = closed_form_localized(SystemParams(1.0, 32.0), 0.0)
    assert s11 == pytest.approx(1.0, abs=1e-15) and s12 == 0


def test_rate_identities():
    for g in (1.0, 8.0, 32.0, 64.0):
        sol = ClosedFormSolution.from_params(SystemParams(1.0, g))
        assert sol.e_plus + sol.e_minus == pytest.approx(g / 2, rel=1e-14)
        assert sol.e_plus * sol.e_minus == pytest.approx(4.0, rel=1e-12)
    sol = ClosedFormSolution.from_params(SystemParams(1.0, 32.0))
    assert sol.e_minus.real == pytest.approx((32 - math.sqrt(960)) / 4, rel=1e-12)
    assert sol.prefactor_sigma12 == pytest.approx(2 / math.sqrt(960))


@pytest.mark.parametrize("g", [0.3, 1.0, 8.0, 8.0 + 1e-9, 20.0, 32.0])
def test_closed_form_satisfies_equations(g):
    p = SystemParams(1.0, g)
    h = 1e-6
    t = np.linspace(0.1, 10, 50)
    s11, s12 = closed_form_localized(p, t)
    d11 = (closed_form_localized(p, t + h)[0] - closed_form_localized(p, t - h)[0]) / (2 * h)
    d12 = (closed_form_localized(p, t + h)[1] - closed_form_localized(p, t - h)[1]) / (2 * h)
    # ds11 = i W (s12 - s21), ds12 = i W (s11 - s22) - g/2 s12
    assert np.max(np.abs(d11 - (-2 * s12.imag))) < 1e-6
    assert np.max(np.abs(d12 - (1j * (2 * s11 - 1) - g / 2 * s12))) < 1e-6


def test_coherence_slope_at_start():
    h = 1e-7
    for g in (1.0, 32.0):
        s12 = closed_form_localized(SystemParams(1.0, g), h)[1]
        assert s12 / h == pytest.approx(1j, rel=1e-5)


@given(g=st.floats(0.01, 100.0), t=st.floats(0, 10))
def test_closed_form_matches_exponential(g, t):
    p = SystemParams(1.0, g)
    ref = evolve_reduced(LEFT, p, [t])[0]
    s11, s12 = closed_form_localized(p, t)
    assert abs(s11 - ref.s11) < 1e-9
    assert abs(s12 - ref.s12) < 1e-9


def test_confluent_limit_is_continuous():
    t = np.linspace(0, 5, 11)
    at, _ = closed_form_localized(SystemParams(1.0, 8.0), t)
    near, _ = closed_form_localized(SystemParams(1.0, 8.0 + 1e-7), t)
    assert_allclose(at, near, atol=1e-7)


def test_closed_form_rejects_detuning():
    with pytest.raises(ValueError):
        closed_form_localized(SystemParams(1.0, 4.0, 0.5), 1.0)


def test_zeno_time_values():
    assert zeno_time(SystemParams(1.0, 32.0)) == pytest.approx(
        4 / (32 - math.sqrt(960)), rel=1e-12)
    assert zeno_time(SystemParams(1.0, 8.0)) == 0.5
    assert zeno_time(SystemParams(1.0, 2.0)) == 2.0
    assert zeno_time(SystemParams(1.0, 1e4)) == pytest.approx(1e4 / 8, rel=1e-6)


def _fitted_rate(g):
    tau = zeno_time(SystemParams(1.0, g))
    t = np.linspace(2 * tau, 10 * tau, 41)
    s11 = np.array([s.s11 for s in evolve_reduced(LEFT, SystemParams(1.0, g), t)])
    return -np.polyfit(t, np.log(np.abs(s11 - 0.5)), 1)[0]


def test_zeno_slowdown():
    gammas = [16.0, 32.0, 64.0, 128.0]
    rates = [_fitted_rate(g) for g in gammas]
    assert all(a > b for a, b in zip(rates, rates[1:]))
    for g, r in zip(gammas, rates):
        assert r == pytest.approx(slow_rate(SystemParams(1.0, g)), rel=1e-3)
    assert rates[-1] / (8 / gammas[-1]) == pytest.approx(1.0, abs=0.05)


def test_reduced_density_matrix_validity():
    assert ReducedDensityMatrix(0.5, 0.5, 0.5).is_valid()
    assert not ReducedDensityMatrix(0.5, 0.5, 0.6).is_valid()
    assert not ReducedDensityMatrix(0.7, 0.5, 0.0).is_valid()
