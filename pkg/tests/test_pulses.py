import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.integrate import quad

from cavgrover.exceptions import InvalidParameterError
from cavgrover.pulses import (
    OFF,
    SECH,
    SQUARE,
    Pulse,
    Schedule,
    envelope,
    pulse_area,
    pulse_for_area,
)


def test_sech_peak_width_one_has_area_pi():
    p = Pulse(SECH, 1.0, 1.0)
    assert pulse_area(p) == pytest.approx(np.pi, abs=1e-12)
    # over +-10 widths: integral of sech is 4 atan(e^10) - pi, deficit ~ 1.8e-4
    num, _ = quad(p.value, -10, 10, limit=200, points=[0])
    assert num == pytest.approx(4 * math.atan(math.exp(10)) - np.pi, rel=1e-10)
    assert np.pi - num == pytest.approx(1.8e-4, rel=0.02)


def test_envelope_zero_outside_support():
    p = pulse_for_area(SECH, 2 * np.pi, 0.5, center=3.0)
    lo, hi = p.support
    assert (lo, hi) == (-2.0, 8.0)
    np.testing.assert_array_equal(envelope(p, [lo - 1e-9, hi + 1e-9, 100.0]), 0.0)
    assert envelope(p, 3.0) == pytest.approx(p.peak)


def test_scalar_and_vector_envelope_agree():
    p = pulse_for_area(SECH, np.pi, 0.7, center=1.3, window=6)
    t = np.linspace(-6, 8, 301)
    np.testing.assert_allclose([p.value(x) for x in t], p.envelope(t), rtol=1e-14, atol=0)


def test_energy_integral_matches_quadrature():
    p = pulse_for_area(SECH, 2 * np.pi, 0.4, center=2.0)
    for t in (0.5, 2.0, 3.1, 10.0):
        lo = p.support[0]
        ref, _ = quad(lambda s: p.value(s) ** 2, lo, min(t, p.support[1]), limit=200)
        assert p.energy_integral(t) == pytest.approx(ref, rel=1e-9, abs=1e-12)


def test_square_pulse():
    p = pulse_for_area(SQUARE, np.pi, 2.0, center=1.0)
    assert p.peak == pytest.approx(np.pi / 2)
    assert p.support == (0.0, 2.0)
    assert pulse_area(p) == pytest.approx(np.pi)


def test_zero_area_is_off():
    p = pulse_for_area(SECH, 0.0, 1.0)
    assert p.shape == OFF
    assert pulse_area(p) == 0.0
    np.testing.assert_array_equal(envelope(p, np.linspace(-5, 5, 11)), 0.0)


@pytest.mark.parametrize("kwargs", [dict(width=0.0), dict(width=-1.0), dict(area=-1.0)])
def test_invalid_pulse_arguments(kwargs):
    args = dict(shape=SECH, area=np.pi, width=1.0) | kwargs
    with pytest.raises(InvalidParameterError):
        pulse_for_area(**args)


def test_addressing_and_roundtrip():
    p = pulse_for_area(SECH, 2 * np.pi, 1.0, center=4.0, target=3, label="oracle1")
    assert not p.is_global and p.addressing == "local:3"
    assert pulse_for_area(SECH, np.pi, 1.0).addressing == "global"
    assert Pulse.from_dict(p.to_dict()) == p


@given(st.floats(0, 10 * np.pi), st.floats(0.01, 10), st.sampled_from([SECH, SQUARE]))
def test_area_roundtrip(area, width, shape):
    assert pulse_area(pulse_for_area(shape, area, width)) == pytest.approx(area, abs=1e-12, rel=1e-12)


@settings(max_examples=25, deadline=None)
@given(st.floats(0.1, 10 * np.pi), st.floats(0.05, 5))
def test_sech_numeric_area_within_truncation_deficit(area, width):
    p = pulse_for_area(SECH, area, width)
    lo, hi = p.support
    num, _ = quad(p.value, lo, hi, limit=400, points=[p.center])
    deficit = area * (2 - 4 * math.atan(math.exp(p.window)) / np.pi)
    assert abs(num - area) <= abs(deficit) * 1.01 + 1e-9


def test_schedule_sorting_and_sampling():
    a = pulse_for_area(SECH, np.pi, 0.1, center=2.0, label="b")
    b = pulse_for_area(SECH, np.pi, 0.1, center=1.0, label="a")
    s = Schedule((a, b), horizon=3.05, sample_dt=0.5)
    assert [p.label for p in s.pulses] == ["a", "b"]
    assert s.events == [(1.0, "a"), (2.0, "b")]
    np.testing.assert_allclose(s.sample_times(), [0, 0.5, 1, 1.5, 2, 2.5, 3, 3.05])
    assert Schedule.from_dict(s.to_dict()) == s


def test_schedule_horizon_must_cover_pulses():
    p = pulse_for_area(SECH, np.pi, 1.0, center=5.0)
    with pytest.raises(InvalidParameterError):
        Schedule((p,), horizon=10.0)
    with pytest.raises(InvalidParameterError):
        Schedule((), horizon=1.0, sample_dt=0.0)
