import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from franson.quantum import (
    MEASUREMENT_BASIS,
    ExperimentSetting,
    ProbabilityQuad,
    SettingPhases,
    TwoPhotonState,
    qm_probabilities,
    qm_probabilities_from_state,
    setting_from_arm_imbalance,
)

ATOL = 1e-12
LAMBDA = 0.3511

phases = st.floats(-math.pi, math.pi, exclude_max=True)


def quad(q):
    return np.array(q.as_tuple())


def hand_expanded_p1(phi_a, phi_b):
    # <c1|psi> = (1 - i e^{i(phi_a+phi_b)}) / (2 sqrt 2)  =>  |.|^2 = (1 + sin S)/4
    return 0.25 * (1.0 + math.sin(phi_a + phi_b))


@pytest.mark.parametrize(
    "total_phase, expected",
    [
        (math.pi / 2, (0.5, 0.0, 0.25, 0.25)),
        (0.0, (0.25, 0.25, 0.25, 0.25)),
        (3 * math.pi / 2, (0.0, 0.5, 0.25, 0.25)),
    ],
)
def test_closed_form_examples(total_phase, expected):
    q = qm_probabilities(ExperimentSetting.from_total_phase(total_phase, LAMBDA))
    np.testing.assert_allclose(quad(q), expected, atol=ATOL)


@pytest.mark.parametrize(
    "phi_a, phi_b, expected",
    [
        (math.pi / 4, math.pi / 4, (0.5, 0.0, 0.25, 0.25)),
        (0.0, 0.0, (0.25, 0.25, 0.25, 0.25)),
    ],
)
def test_projection_examples(phi_a, phi_b, expected):
    q = qm_probabilities_from_state(SettingPhases(phi_a, phi_b))
    np.testing.assert_allclose(quad(q), expected, atol=ATOL)
    assert q.p1 == pytest.approx(hand_expanded_p1(phi_a, phi_b), abs=ATOL)


def test_measurement_basis_is_orthonormal():
    np.testing.assert_allclose(MEASUREMENT_BASIS @ MEASUREMENT_BASIS.conj().T, np.eye(4), atol=1e-15)


def test_state_is_normalised_product():
    psi = TwoPhotonState.from_phases(SettingPhases(0.3, -1.2))
    assert np.vdot(psi.amplitudes, psi.amplitudes).real == pytest.approx(1.0, abs=ATOL)
    # a product state has a rank-1 coefficient matrix
    assert np.linalg.matrix_rank(psi.amplitudes.reshape(2, 2), tol=1e-12) == 1


def test_state_rejects_unnormalised_amplitudes():
    with pytest.raises(ValueError):
        TwoPhotonState(np.array([1, 1, 0, 0], dtype=complex))


@settings(max_examples=300, deadline=None)
@given(phases, phases)
def test_projection_matches_closed_form(phi_a, phi_b):
    proj = qm_probabilities_from_state(SettingPhases(phi_a, phi_b))
    closed = qm_probabilities(ExperimentSetting.from_total_phase(phi_a + phi_b, LAMBDA))
    assert proj.max_abs_diff(closed) <= ATOL


@settings(max_examples=300, deadline=None)
@given(phases, phases, st.floats(-10.0, 10.0))
def test_only_the_phase_sum_matters(phi_a, phi_b, shift):
    a = qm_probabilities_from_state(SettingPhases(phi_a, phi_b))
    b = qm_probabilities_from_state(SettingPhases(phi_a + shift, phi_b - shift))
    assert a.max_abs_diff(b) <= ATOL


@settings(max_examples=300, deadline=None)
@given(st.floats(0.0, 50.0))
def test_normalisation_and_fringe_symmetry(delta_l):
    setting = setting_from_arm_imbalance(delta_l, LAMBDA)
    q = qm_probabilities(setting)
    assert sum(q.as_tuple()) == pytest.approx(1.0, abs=ATOL)
    assert q.p3 == q.p4 == 0.25
    assert q.p1 + q.p2 == pytest.approx(0.5, abs=ATOL)
    shifted = qm_probabilities(ExperimentSetting.from_delta(setting.delta + math.pi, LAMBDA))
    assert q.p1 == pytest.approx(shifted.p2, abs=ATOL)


def test_oracle_equivalence_on_random_settings():
    rng = np.random.default_rng(12)
    worst = 0.0
    for phi_a, phi_b in rng.uniform(-np.pi, np.pi, (10_000, 2)):
        proj = qm_probabilities_from_state(SettingPhases(phi_a, phi_b))
        closed = qm_probabilities(ExperimentSetting.from_total_phase(phi_a + phi_b, LAMBDA))
        worst = max(worst, proj.max_abs_diff(closed))
    assert worst <= ATOL


def test_setting_from_arm_imbalance_examples():
    full = setting_from_arm_imbalance(0.3511, 0.3511)
    assert full.total_phase == pytest.approx(2 * math.pi, abs=1e-15)

    zero = setting_from_arm_imbalance(0.0, 0.3511)
    assert zero.total_phase == 0.0
    assert zero.delta == pytest.approx(-math.pi / 2, abs=1e-15)

    quarter = setting_from_arm_imbalance(0.3511 / 4, 0.3511)
    assert quarter.total_phase == pytest.approx(math.pi / 2, abs=1e-15)
    assert quarter.delta == pytest.approx(0.0, abs=1e-15)


@pytest.mark.parametrize("lambda_p", [0.0, -0.35, float("nan")])
def test_rejects_non_positive_wavelength(lambda_p):
    with pytest.raises(ValueError):
        setting_from_arm_imbalance(0.1, lambda_p)


def test_rejects_negative_imbalance():
    with pytest.raises(ValueError):
        setting_from_arm_imbalance(-0.1, LAMBDA)


@settings(max_examples=300, deadline=None)
@given(st.floats(0.0, 100.0), st.floats(0.1, 2.0))
def test_delta_is_wrapped_and_derived(delta_l, lambda_p):
    s = setting_from_arm_imbalance(delta_l, lambda_p)
    assert -math.pi <= s.delta < math.pi
    assert s.total_phase == 2 * math.pi * delta_l / lambda_p
    assert math.cos(s.delta) == pytest.approx(math.sin(s.total_phase), abs=1e-9)


@settings(max_examples=200, deadline=None)
@given(phases)
def test_from_delta_round_trips(delta):
    s = ExperimentSetting.from_delta(delta, LAMBDA)
    assert abs(math.remainder(s.delta - delta, 2 * math.pi)) < 1e-12


def test_quad_validation():
    with pytest.raises(ValueError):
        ProbabilityQuad(0.5, 0.5, 0.25, 0.25)
    with pytest.raises(ValueError):
        ProbabilityQuad(1.1, -0.1, 0.0, 0.0)
