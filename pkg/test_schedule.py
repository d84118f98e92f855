"""
Tests for regularization schedules, their certificates and step sizes.
"""

import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from core.error_handling import InvalidScheduleError, StepBoundError
from core.models import GammaRule
from core.problems import INTEGRAL_SIGMA_INVERSE
from core.schedule import (
    a_at,
    check_step_bounds,
    gamma_for,
    gamma_max,
    make_power_schedule,
    make_tabulated_schedule,
    nu_at,
    nu_zero,
    phi,
    phi_half,
    schedule_values,
)

SWEEP_D = 0.1


class TestPowerSchedule:
    """a(t) = d / (c + t)^b sampled at t = n h."""

    def test_values(self):
        s, _ = make_power_schedule(d=4.0, c=4.0, b=0.5, h=1.0)
        assert a_at(s, 0) == 2.0
        assert s.a0 == 2.0
        assert math.isclose(a_at(s, 5), 4.0 / 3.0, rel_tol=1e-15)
        np.testing.assert_allclose(schedule_values(s, 3), [2.0, 4.0 / math.sqrt(5.0), 4.0 / math.sqrt(6.0)])

    def test_sweep_schedule_scale(self):
        s, _ = make_power_schedule(d=SWEEP_D, c=5.0, b=0.99, h=1.0)
        assert math.isclose(s.a0, 0.1 / 5 ** 0.99, rel_tol=1e-12)
        assert math.isclose(a_at(s, 95), 0.1 / 100 ** 0.99, rel_tol=1e-12)

    def test_scale_for_unit_tenth_start(self):
        s, cert = make_power_schedule(d=0.1 * 5 ** 0.99, c=5.0, b=0.99, h=1.0)
        assert math.isclose(a_at(s, 0), 0.1, rel_tol=1e-12)
        assert cert.eqsxa_ok
        assert not cert.remark36_ok

    def test_negative_index(self):
        s, _ = make_power_schedule(d=1.0, c=1.0, b=0.5, h=1.0)
        with pytest.raises(ValueError):
            a_at(s, -1)

    @pytest.mark.parametrize("d, c, b, h", [
        (1.0, 5.0, 1.0, 1.0),
        (1.0, 5.0, 0.0, 1.0),
        (1.0, 0.5, 0.5, 1.0),
        (0.0, 5.0, 0.5, 1.0),
        (1.0, 5.0, 0.5, 0.0),
        (math.nan, 5.0, 0.5, 1.0),
    ])
    def test_invalid_parameters(self, d, c, b, h):
        with pytest.raises(InvalidScheduleError):
            make_power_schedule(d=d, c=c, b=b, h=h)

    def test_nu(self):
        s, _ = make_power_schedule(d=3.0, c=5.0, b=0.5, h=1.0)
        assert math.isclose(nu_at(s, 0.0), 0.5 / (3.0 * math.sqrt(5.0)), rel_tol=1e-15)
        assert nu_zero(s) == nu_at(s, 0.0)
        assert nu_at(s, 10.0) < nu_at(s, 0.0)

    @given(
        d=st.floats(min_value=0.01, max_value=10.0),
        c=st.floats(min_value=1.0, max_value=50.0),
        b=st.floats(min_value=0.05, max_value=0.95),
        h=st.floats(min_value=0.01, max_value=2.0),
        n=st.integers(min_value=0, max_value=1000),
    )
    @settings(max_examples=100, deadline=None)
    def test_decrease_and_gap_bounds(self, d, c, b, h, n):
        """a_n decreases and 1/a_{n+1} - 1/a_n lies between h nu((n+1)h) and h nu(nh)."""
        s, _ = make_power_schedule(d=d, c=c, b=b, h=h)
        a_n, a_next = a_at(s, n), a_at(s, n + 1)
        assert 0 < a_next < a_n

        gap = 1.0 / a_next - 1.0 / a_n
        lower = h * nu_at(s, (n + 1) * h)
        upper = h * nu_at(s, n * h)
        assert lower * (1 - 1e-6) <= gap <= upper * (1 + 1e-6)


class TestCertificates:
    """Closed-form and sampled admissibility flags."""

    def test_certified_schedule(self):
        _, cert = make_power_schedule(d=3.0, c=5.0, b=0.5, h=1.0)
        assert cert.eqsxa_ok
        assert cert.theorem3_ok
        assert cert.remark36_ok
        assert not cert.sampled
        assert cert.messages == []

    def test_sweep_schedule_is_not_certified(self):
        s, cert = make_power_schedule(d=SWEEP_D, c=5.0, b=0.99, h=1.0)
        assert cert.eqsxa_ok
        assert not cert.theorem3_ok
        assert not cert.remark36_ok
        assert math.isclose(nu_zero(s), 9.9 * 5 ** -0.01, rel_tol=1e-12)
        assert any("nu(0)" in message for message in cert.messages)

    def test_small_offset_fails_sufficient_condition_only(self):
        # c = 2 is below the offset the sufficient condition needs
        _, cert = make_power_schedule(d=4.0, c=2.0, b=0.5, h=0.5)
        assert cert.theorem3_ok
        assert not cert.remark36_ok

    @given(
        c=st.floats(min_value=1.0, max_value=100.0),
        b=st.floats(min_value=0.05, max_value=0.95),
        d=st.floats(min_value=0.01, max_value=100.0),
        h=st.floats(min_value=0.01, max_value=2.0),
    )
    @settings(max_examples=200, deadline=None)
    def test_sufficient_condition_implies_admissibility(self, c, b, d, h):
        _, cert = make_power_schedule(d=d, c=c, b=b, h=h)
        if cert.remark36_ok:
            assert cert.theorem3_ok

    def test_tabulated_schedule(self):
        s, cert = make_tabulated_schedule([1.0, 0.5, 0.4], h=1.0)
        assert s.a0 == 1.0
        assert a_at(s, 2) == 0.4
        assert cert.sampled
        assert not cert.remark36_ok
        assert not cert.theorem3_ok
        assert nu_zero(s) == 1.0
        with pytest.raises(InvalidScheduleError):
            a_at(s, 3)

    def test_tabulated_power_law_samples(self):
        power, _ = make_power_schedule(d=3.0, c=5.0, b=0.5, h=1.0)
        s, cert = make_tabulated_schedule(schedule_values(power, 20), h=1.0)
        assert cert.eqsxa_ok
        assert cert.theorem3_ok
        assert not cert.remark36_ok

    def test_tabulated_rejects_non_decreasing(self):
        with pytest.raises(InvalidScheduleError):
            make_tabulated_schedule([0.5, 0.5], h=1.0)
        with pytest.raises(InvalidScheduleError):
            make_tabulated_schedule([1.0, -1.0], h=1.0)
        with pytest.raises(InvalidScheduleError):
            make_tabulated_schedule([1.0], h=1.0)


class TestStepSizes:
    """gamma_max, phi and the step-bound check."""

    def test_gamma_max(self):
        assert gamma_max(1.0, 0.5) == 1.0
        assert gamma_max(2.0, 0.0) == 1.0
        assert gamma_max(INTEGRAL_SIGMA_INVERSE, 0.1) > 1.0

    def test_phi(self):
        s, _ = make_power_schedule(d=4.0, c=4.0, b=0.5, h=1.0)
        assert phi(s, 0) == 2.0
        assert math.isclose(phi(s, 1), 2.0 + 4.0 / math.sqrt(5.0), rel_tol=1e-15)
        assert phi_half(s, 0) == 0.0
        assert math.isclose(phi_half(s, 1), 2.0 / math.sqrt(5.0), rel_tol=1e-15)

    def test_gamma_rules(self):
        s, _ = make_power_schedule(d=SWEEP_D, c=5.0, b=0.99, h=1.0)
        assert gamma_for(s, 3, GammaRule.CONSTANT_H, INTEGRAL_SIGMA_INVERSE) == 1.0
        assert gamma_for(s, 3, GammaRule.CONSTANT_H, INTEGRAL_SIGMA_INVERSE, gamma=0.5) == 0.5
        assert gamma_for(s, 0, GammaRule.CAPPED_ADAPTIVE, INTEGRAL_SIGMA_INVERSE, cap=1.0) == 1.0
        adaptive = gamma_for(s, 0, GammaRule.CAPPED_ADAPTIVE, INTEGRAL_SIGMA_INVERSE, cap=5.0)
        assert adaptive == gamma_max(INTEGRAL_SIGMA_INVERSE, s.a0)

    def test_check_step_bounds(self):
        s, _ = make_power_schedule(d=SWEEP_D, c=5.0, b=0.99, h=1.0)
        assert check_step_bounds(s, GammaRule.CONSTANT_H, INTEGRAL_SIGMA_INVERSE) == 1.0
        with pytest.raises(StepBoundError):
            check_step_bounds(s, GammaRule.CONSTANT_H, INTEGRAL_SIGMA_INVERSE, gamma=1.5)
        with pytest.raises(StepBoundError):
            check_step_bounds(s, GammaRule.CONSTANT_H, INTEGRAL_SIGMA_INVERSE, gamma=0.5)

    def test_large_initial_regularization_needs_small_step(self):
        s, _ = make_power_schedule(d=10.0, c=5.0, b=0.99, h=1.0)
        with pytest.raises(StepBoundError):
            check_step_bounds(s, GammaRule.CONSTANT_H, INTEGRAL_SIGMA_INVERSE)
        s, _ = make_power_schedule(d=10.0, c=5.0, b=0.99, h=0.3)
        assert check_step_bounds(s, GammaRule.CONSTANT_H, INTEGRAL_SIGMA_INVERSE) == 0.3
