import math

import pytest
from hypothesis import given, settings, strategies as st

from weakamp.beamgeom import (
    OpticalLayout,
    amplification_factor,
    lens_factor,
    mirror_angle,
    momentum_kick,
    piezo_travel,
    pointer_shift_experimental,
    sigma_at_detector,
    signed_sigma_at_detector,
    unamplified_deflection,
)
from weakamp.weakcore import GaussianMeter, Interaction, pointer_shift_collimated

from conftest import A, K0, K_500MV, L_LM, L_MD, PHI_2PCT, PHI_7P2, SIGMA


def test_mirror_angle(piezo):
    assert mirror_angle(0.0, piezo) == 0.0
    assert mirror_angle(0.5, piezo) == pytest.approx(1.30e-6, abs=0.01e-6)
    # detection floor: 560 +- 40 frad reported
    assert mirror_angle(220e-9, piezo) == pytest.approx(572e-15, abs=0.5e-15)
    assert 520e-15 <= mirror_angle(220e-9, piezo) <= 600e-15


def test_piezo_travel(piezo):
    assert piezo_travel(0.0, piezo) == 0.0
    assert piezo_travel(220e-9, piezo) == pytest.approx(20.0e-15, rel=1e-3)
    assert piezo_travel(0.5, piezo) == pytest.approx(45.5e-9, rel=1e-12)


def test_momentum_kick():
    assert momentum_kick(0.0, K0) == 0.0
    assert momentum_kick(1.30e-6, 8.0553e6) == pytest.approx(20.94, abs=0.1)
    assert momentum_kick(572e-15, K0) == pytest.approx(9.22e-6, rel=1e-3)


def test_unamplified_deflection():
    assert unamplified_deflection(0.0, L_MD, K0) == 0.0
    d = unamplified_deflection(20.94, L_MD, K0)
    assert d == pytest.approx(2.96e-6, abs=0.005e-6)
    assert abs(d / 2.95e-6 - 1) < 0.01
    assert unamplified_deflection(9.22e-6, L_MD, K0) == pytest.approx(1.31e-12, abs=0.01e-12)


def test_lens_factor_values():
    # l_im = |s_i| with no mirror-detector distance reduces to 1
    unit = OpticalLayout(l_lm=0.6, l_md=1e-300, a=A, k0=K0, s_i=-0.3)
    assert lens_factor(unit) == pytest.approx(1.0, rel=1e-12)
    lay = OpticalLayout(l_lm=L_LM, l_md=L_MD, a=A, k0=K0, s_i=-0.30)
    assert lay.l_im == pytest.approx(0.18)
    assert lens_factor(lay) == pytest.approx(0.18 * 1.32 / 0.09, rel=1e-12)
    assert lens_factor(lay) == pytest.approx(2.64, rel=1e-12)


def test_lens_factor_quarters_when_image_distance_doubles():
    # hold l_im fixed by moving the lens
    near = OpticalLayout(l_lm=0.48, l_md=L_MD, a=A, k0=K0, s_i=-0.3)
    far = OpticalLayout(l_lm=0.78, l_md=L_MD, a=A, k0=K0, s_i=-0.6)
    assert far.l_im == pytest.approx(near.l_im)
    assert lens_factor(far) == pytest.approx(lens_factor(near) / 4, rel=1e-12)


def test_lens_factor_zero_image_distance():
    with pytest.raises(ZeroDivisionError):
        lens_factor(OpticalLayout(l_lm=L_LM, l_md=L_MD, a=A, k0=K0, s_i=0.0))
    with pytest.raises(ValueError):
        lens_factor(OpticalLayout(l_lm=L_LM, l_md=L_MD, a=A, k0=K0))


def test_sigma_at_detector():
    # unit magnification needs l_lm + s_i + l_md = |s_i|
    unity = OpticalLayout(l_lm=0.25, l_md=0.25, a=A, k0=K0, s_i=-0.25)
    assert unity.l_im + unity.l_md == pytest.approx(abs(unity.s_i))
    assert sigma_at_detector(unity) == pytest.approx(A)
    lay = OpticalLayout(l_lm=L_LM, l_md=L_MD, a=A, k0=K0, s_i=-0.48)
    assert sigma_at_detector(lay) == pytest.approx(1520e-6, rel=1e-12)
    lay = OpticalLayout(l_lm=L_LM, l_md=L_MD, a=A, k0=K0, s_i=-0.30)
    assert sigma_at_detector(lay) == pytest.approx(2816e-6, rel=1e-12)
    assert signed_sigma_at_detector(lay) < 0


def test_pointer_shift_experimental(layout):
    shift = pointer_shift_experimental(20.94, PHI_2PCT, SIGMA, layout)
    assert shift == pytest.approx(297e-6, abs=2e-6)
    assert pointer_shift_experimental(0.0, PHI_2PCT, SIGMA, layout) == 0.0
    with pytest.raises(ValueError):
        pointer_shift_experimental(20.94, PHI_2PCT, 0.5 * A, layout)


@given(st.floats(1e-3, 1e3), st.floats(0.01, 3.0), st.floats(0.05, 5.0), st.floats(0.05, 5.0))
def test_collimated_limit(k, phi, l_lm, l_md):
    lay = OpticalLayout(l_lm=l_lm, l_md=l_md, a=A, k0=K0)
    eq5 = 2 * k * A**2 / abs(math.tan(phi / 2))
    assert pointer_shift_experimental(k, phi, A, lay) == pytest.approx(eq5, rel=1e-12)


def test_amplification_factor():
    assert amplification_factor(297e-6, 2.96e-6) == pytest.approx(100.3, abs=0.05)
    assert amplification_factor(1.5, 1.5) == 1.0
    with pytest.raises(ZeroDivisionError):
        amplification_factor(1.0, 0.0)


def test_preset_amplification_bracket(layout):
    shift = pointer_shift_experimental(K_500MV, PHI_2PCT, SIGMA, layout)
    amp = amplification_factor(shift, unamplified_deflection(K_500MV, L_MD, K0))
    assert 70 <= amp <= 130
    assert amp == pytest.approx(100.3, abs=0.05)


@settings(max_examples=300, deadline=None)
@given(
    k=st.floats(1e-3, 100.0),
    phi=st.floats(0.02, 3.0),
    l_lm=st.floats(0.05, 2.0),
    l_md=st.floats(0.05, 3.0),
    s_i=st.one_of(st.floats(-1.0, -0.02), st.floats(0.02, 1.0)),
)
def test_experimental_form_equals_lens_factor_times_collimated(k, phi, l_lm, l_md, s_i):
    lay = OpticalLayout(l_lm=l_lm, l_md=l_md, a=A, k0=K0, s_i=s_i)
    sigma = signed_sigma_at_detector(lay)
    if abs(sigma) < A:
        return
    lhs = pointer_shift_experimental(k, phi, sigma, lay)
    rhs = lens_factor(lay) * 2 * k * A**2 / abs(math.tan(phi / 2))
    assert lhs == pytest.approx(rhs, rel=1e-10, abs=1e-10 * abs(rhs) + 1e-300)


def test_calibration_chain_end_to_end(piezo):
    k = momentum_kick(mirror_angle(0.5, piezo), K0)
    assert unamplified_deflection(k, L_MD, K0) == pytest.approx(2.95e-6, rel=0.01)


@given(st.floats(1e-9, 10.0))
def test_linearity_in_drive(v):
    from weakamp.beamgeom import PiezoCalibration

    cal = PiezoCalibration(91e-9, 0.035)
    lay = OpticalLayout(l_lm=L_LM, l_md=L_MD, a=A, k0=K0)
    k1 = momentum_kick(mirror_angle(v, cal), K0)
    k2 = momentum_kick(mirror_angle(2 * v, cal), K0)
    assert unamplified_deflection(k2, L_MD, K0) == pytest.approx(2 * unamplified_deflection(k1, L_MD, K0), rel=1e-14)
    assert pointer_shift_experimental(k2, PHI_2PCT, SIGMA, lay) == pytest.approx(
        2 * pointer_shift_experimental(k1, PHI_2PCT, SIGMA, lay), rel=1e-14)


@given(st.floats(1e-6, 1e4), st.floats(0.01, 3.0))
def test_amplification_independent_of_kick(k, phi):
    lay = OpticalLayout(l_lm=L_LM, l_md=L_MD, a=A, k0=K0)
    ref = pointer_shift_experimental(1.0, phi, SIGMA, lay) / unamplified_deflection(1.0, L_MD, K0)
    amp = amplification_factor(pointer_shift_experimental(k, phi, SIGMA, lay),
                               unamplified_deflection(k, L_MD, K0))
    assert amp == pytest.approx(ref, rel=1e-12)


def test_fig2_ratio_between_angles(layout):
    ratio = pointer_shift_experimental(1.0, PHI_7P2, SIGMA, layout) / pointer_shift_experimental(
        1.0, PHI_2PCT, SIGMA, layout)
    assert ratio == pytest.approx(2.27, abs=0.01)


def test_collimated_agrees_with_weakcore(layout):
    meter = GaussianMeter(A, K0)
    assert pointer_shift_experimental(K_500MV, PHI_2PCT, A, layout) == pytest.approx(
        pointer_shift_collimated(Interaction(K_500MV, PHI_2PCT), meter), rel=1e-12)
