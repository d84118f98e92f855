"""
Tests for the testbed problems and the noise generator.
"""

import math

import numpy as np
import pytest

from core.error_handling import ConfigError, DimensionError
from core.grid import norm, uniform_grid
from core.models import NoiseModel, NormMode
from core.problems import (
    INTEGRAL_SIGMA_INVERSE,
    KERNEL_NORM_BOUND,
    build_integral_problem,
    build_linear_spd_problem,
    build_problem,
    derivative_bound,
    exact_solution,
    kernel_matrix,
    make_noise,
    parse_noise_model,
    relative_error,
)


def kernel_of_ones(x):
    """int_0^1 e^{-|x-y|} dy."""
    return 2.0 - np.exp(-x) - np.exp(-(1.0 - x))


class TestExactSolution:
    """The unit step at x = 0.5."""

    def test_two_points(self):
        np.testing.assert_array_equal(exact_solution(2), [0.0, 1.0])

    def test_even_grid_has_no_midpoint(self):
        u = exact_solution(100)
        assert u.sum() == 50.0
        assert set(np.unique(u)) == {0.0, 1.0}

    def test_odd_grid_midpoint_value(self):
        assert exact_solution(101)[50] == 1.0
        assert exact_solution(101, midpoint_value=0.5)[50] == 0.5
        assert exact_solution(101, midpoint_value=0.5).sum() == 50.5


class TestIntegralProblem:
    """Kernel-plus-arctan^3 operator on the uniform grid."""

    def test_operator_vanishes_at_zero(self):
        problem = build_integral_problem(50)
        np.testing.assert_array_equal(problem.operator.apply(np.zeros(50)), np.zeros(50))

    def test_kernel_of_ones_matches_closed_form(self):
        errors = []
        for N in (101, 201):
            x = uniform_grid(N)
            errors.append(np.max(np.abs(kernel_matrix(N) @ np.ones(N) - kernel_of_ones(x))))
        assert errors[0] < 1e-4
        assert errors[0] / errors[1] > 3.0

    def test_problem_fields(self):
        problem = build_integral_problem(30)
        assert problem.kind == "integral"
        assert problem.sigma_inverse_bound == INTEGRAL_SIGMA_INVERSE
        assert problem.operator.dim == 30
        np.testing.assert_allclose(problem.f_exact, problem.operator.apply(problem.u_exact))
        assert math.isclose(problem.weights.sum(), 1.0, rel_tol=1e-14)

    def test_needs_two_points(self):
        with pytest.raises(DimensionError):
            build_integral_problem(1)

    def test_derivative_bound_below_carried_bound(self):
        bound = derivative_bound()
        assert KERNEL_NORM_BOUND + 0.9 < bound < INTEGRAL_SIGMA_INVERSE


class TestLinearProblem:
    """Diagonal closed-form testbed."""

    def test_spectrum(self):
        problem = build_linear_spd_problem(4, decay=1.0)
        np.testing.assert_allclose(np.diag(problem.kernel_matrix), [1.0, 0.5, 1.0 / 3.0, 0.25])
        assert problem.sigma_inverse_bound == 1.0
        assert problem.kind == "linear_spd"

    def test_dispatch(self):
        assert build_problem("linear_spd", 10).kind == "linear_spd"
        assert build_problem("integral", 10).kind == "integral"
        with pytest.raises(ConfigError):
            build_problem("heat", 10)
        with pytest.raises(ConfigError):
            build_linear_spd_problem(10, decay=0.0)


class TestNoise:
    """Calibrated relative noise."""

    @pytest.mark.parametrize("model", list(NoiseModel))
    @pytest.mark.parametrize("mode", list(NormMode))
    def test_noise_level_identity(self, model, mode):
        f = build_integral_problem(40).f_exact
        f_delta, spec = make_noise(f, model, 0.03, seed=2, mode=mode)
        assert math.isclose(norm(f_delta - f, mode), 0.03 * norm(f, mode), rel_tol=1e-12)
        assert math.isclose(spec.delta, 0.03 * norm(f, mode), rel_tol=1e-15)
        assert spec.redraws == 0

    def test_sinusoid_is_deterministic(self):
        f = build_integral_problem(40).f_exact
        first, spec = make_noise(f, NoiseModel.SINUSOID, 0.01, seed=1)
        second, _ = make_noise(f, NoiseModel.SINUSOID, 0.01, seed=99)
        np.testing.assert_array_equal(first, second)
        assert spec.seed is None

    def test_gaussian_is_seeded(self):
        f = build_integral_problem(40).f_exact
        first, spec = make_noise(f, NoiseModel.GAUSSIAN, 0.01, seed=4)
        again, _ = make_noise(f, NoiseModel.GAUSSIAN, 0.01, seed=4)
        other, _ = make_noise(f, NoiseModel.GAUSSIAN, 0.01, seed=5)
        np.testing.assert_array_equal(first, again)
        assert not np.array_equal(first, other)
        assert spec.seed == 4

    def test_rejects_zero_data_and_bad_level(self):
        with pytest.raises(ConfigError):
            make_noise(np.zeros(10), NoiseModel.GAUSSIAN, 0.01)
        with pytest.raises(ConfigError):
            make_noise(np.ones(10), NoiseModel.GAUSSIAN, 0.0)

    def test_parse_noise_model(self):
        assert parse_noise_model("Sinusoid") == NoiseModel.SINUSOID
        with pytest.raises(ConfigError):
            parse_noise_model("uniform")


def test_relative_error():
    assert relative_error(np.array([1.0, 1.0]), np.array([0.0, 2.0])) == math.sqrt(2.0) / 2.0
    with pytest.raises(DimensionError):
        relative_error(np.ones(3), np.zeros(3))
