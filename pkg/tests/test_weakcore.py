import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from weakamp.errors import DegeneratePostSelectionError, WeakRegimeWarning
from weakamp.weakcore import (
    GaussianMeter,
    Interaction,
    SystemState,
    phase_for_probability,
    pointer_shift_collimated,
    postselected_state,
    postselection_probability,
    preselected_state,
    weak_value,
)

from conftest import A, K0, K_500MV, PHI_2PCT, PHI_7P2

R2 = 1 / math.sqrt(2)


def brute_elements(phi):
    """(<f|A|i>, <f|i>) from explicit (ccw, cw) matrices, independent of SystemState."""
    psi_i = np.array([1j * np.exp(1j * phi / 2), np.exp(-1j * phi / 2)]) * R2
    psi_f = np.array([1, 1j]) * R2
    A_op = np.diag([-1.0, 1.0])
    return psi_f.conj() @ A_op @ psi_i, psi_f.conj() @ psi_i


def test_preselected_phi_zero():
    s = preselected_state(0.0)
    assert s.amp_ccw == pytest.approx(1j * R2, abs=1e-15)
    assert s.amp_cw == pytest.approx(R2, abs=1e-15)


def test_preselected_phi_pi():
    s = preselected_state(math.pi)
    assert s.amp_ccw == pytest.approx(-R2, abs=1e-15)
    assert s.amp_cw == pytest.approx(-1j * R2, abs=1e-15)


def test_postselected_state():
    f = postselected_state()
    assert f.amp_ccw == pytest.approx(R2)
    assert f.amp_cw == pytest.approx(1j * R2)


def test_bright_port_at_zero_phase():
    assert abs(postselected_state().inner(preselected_state(0.0))) < 1e-16


def test_overlap_pi_over_three():
    ov = postselected_state().inner(preselected_state(math.pi / 3))
    assert abs(ov) ** 2 == pytest.approx(0.25, abs=1e-12)


def test_unnormalized_state_rejected():
    with pytest.raises(ValueError):
        SystemState(1.0, 1.0)


def test_weak_value_unit_point():
    assert abs(weak_value(math.pi / 2)) == pytest.approx(1.0, abs=1e-12)


def test_weak_value_smallest_sbc_angle():
    assert abs(weak_value(PHI_7P2)) == pytest.approx(15.89, abs=0.01)


def test_weak_value_two_percent():
    assert abs(weak_value(PHI_2PCT)) == pytest.approx(6.998, abs=0.01)


def test_weak_value_sign_from_printed_states():
    # the printed states give +i cot(phi/2); only |A_w| is used downstream
    w = weak_value(PHI_2PCT)
    assert w.real == pytest.approx(0.0, abs=1e-12)
    assert w.imag == pytest.approx(1 / math.tan(PHI_2PCT / 2), rel=1e-12)


@pytest.mark.parametrize("phi", [0.0, 2 * math.pi, -4 * math.pi])
def test_weak_value_degenerate(phi):
    with pytest.raises(DegeneratePostSelectionError):
        weak_value(phi)


def test_postselection_probability_values():
    assert postselection_probability(0.0) == 0.0
    assert postselection_probability(math.pi) == pytest.approx(1.0, abs=1e-15)
    assert postselection_probability(math.radians(16.26)) == pytest.approx(0.0200, abs=2e-4)


def test_phase_for_probability_inverts():
    assert postselection_probability(phase_for_probability(0.02)) == pytest.approx(0.02, rel=1e-12)
    assert math.degrees(PHI_2PCT) == pytest.approx(16.26, abs=0.005)


def test_pointer_shift_collimated_values(meter):
    assert pointer_shift_collimated(Interaction(0.0, PHI_2PCT), meter) == 0.0
    assert pointer_shift_collimated(Interaction(20.94, PHI_2PCT), meter) == pytest.approx(120.0e-6, abs=0.5e-6)
    assert pointer_shift_collimated(Interaction(20.94, PHI_7P2), meter) == pytest.approx(272.6e-6, abs=1e-6)


def test_pointer_shift_warns_outside_weak_regime(meter):
    with pytest.warns(WeakRegimeWarning):
        pointer_shift_collimated(Interaction(K_500MV, 1e-4), meter)


def test_meter_paraxial_warning():
    with pytest.warns(WeakRegimeWarning):
        GaussianMeter(1e-6, 1e6)
    with pytest.raises(ValueError):
        GaussianMeter(-1.0, K0)


phis = st.floats(-2 * math.pi, 2 * math.pi, allow_nan=False)


@settings(max_examples=1000, deadline=None)
@given(phis)
def test_states_normalized(phi):
    for s in (preselected_state(phi), postselected_state()):
        assert abs(np.vdot(s.vector, s.vector) - 1) < 1e-12


@settings(max_examples=500, deadline=None)
@given(phis.filter(lambda p: abs(math.sin(p / 2)) > 1e-6))
def test_weak_value_matches_closed_form(phi):
    w = weak_value(phi)
    transition, overlap = brute_elements(phi)
    brute = transition / overlap
    assert abs(w.real) < 1e-10
    assert abs(abs(w) - abs(1 / math.tan(phi / 2))) <= 1e-10 * max(1.0, abs(w))
    assert abs(w - brute) <= 1e-10 * max(1.0, abs(w))


@settings(max_examples=500, deadline=None)
@given(phis)
def test_postselection_probability_matches_overlap(phi):
    p = abs(brute_elements(phi)[1]) ** 2
    assert abs(postselection_probability(phi) - p) < 1e-12
    ov = postselected_state().inner(preselected_state(phi))
    assert abs(postselection_probability(phi) - abs(ov) ** 2) < 1e-12


@given(st.floats(1e-4, 0.05))
def test_small_angle_limit(phi):
    approx = 2 / phi
    assert abs(1 / math.tan(phi / 2) - approx) / approx < phi**2 / 10


@given(st.lists(st.floats(1e-3, math.pi), min_size=2, max_size=2, unique=True))
def test_pointer_shift_increases_as_phase_decreases(pair):
    lo, hi = sorted(pair)
    meter = GaussianMeter(A, K0)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", WeakRegimeWarning)
        s_lo = pointer_shift_collimated(Interaction(1.0, lo), meter)
        s_hi = pointer_shift_collimated(Interaction(1.0, hi), meter)
    if math.isclose(lo, hi, rel_tol=1e-12):
        return
    assert s_lo > s_hi
