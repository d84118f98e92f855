"""
Tests for the discretized Hilbert-space layer.
"""

import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from core.error_handling import ConfigError, DimensionError
from core.grid import as_grid_function, inner, norm, parse_norm_mode, trapezoid_weights, uniform_grid
from core.models import NormMode

finite = st.floats(min_value=-1e3, max_value=1e3, allow_nan=False, allow_infinity=False)


@st.composite
def vector_pairs(draw):
    size = draw(st.integers(min_value=2, max_value=40))
    u = draw(arrays(np.float64, size, elements=finite))
    v = draw(arrays(np.float64, size, elements=finite))
    return u, v


class TestGridConstruction:
    """Grid points and trapezoid weights."""

    def test_uniform_grid_endpoints(self):
        x = uniform_grid(5)
        np.testing.assert_array_equal(x, [0.0, 0.25, 0.5, 0.75, 1.0])

    def test_uniform_grid_needs_two_points(self):
        with pytest.raises(DimensionError):
            uniform_grid(1)

    def test_trapezoid_weights_sum_to_one(self):
        for N in (2, 3, 10, 101):
            assert math.isclose(trapezoid_weights(N).sum(), 1.0, rel_tol=1e-14)

    def test_trapezoid_weights_are_read_only(self):
        weights = trapezoid_weights(11)
        with pytest.raises(ValueError):
            weights[0] = 1.0

    def test_as_grid_function_rejects_non_finite(self):
        with pytest.raises(DimensionError):
            as_grid_function([0.0, np.nan, 1.0])
        with pytest.raises(DimensionError):
            as_grid_function([[1.0, 2.0]])
        with pytest.raises(DimensionError):
            as_grid_function([1.0], min_points=2)


class TestInnerProducts:
    """Inner products and norms in both conventions."""

    def test_euclidean_example(self):
        assert inner(np.array([1.0, 2.0, 3.0]), np.array([4.0, 5.0, 6.0])) == 32.0
        assert norm(np.array([3.0, 4.0])) == 5.0

    def test_trapezoid_norm_of_ones(self):
        """The weighted norm of the constant 1 approximates the L2[0,1] norm exactly."""
        for N in (2, 7, 100):
            assert math.isclose(norm(np.ones(N), NormMode.TRAPEZOID), 1.0, rel_tol=1e-14)

    def test_zero_vector_has_zero_norm(self):
        for mode in NormMode:
            assert norm(np.zeros(8), mode) == 0.0

    def test_length_mismatch(self):
        with pytest.raises(DimensionError):
            inner(np.ones(3), np.ones(4))

    def test_scalar_vectors_only_in_euclidean_mode(self):
        assert norm(np.array([-2.0])) == 2.0
        with pytest.raises(DimensionError):
            norm(np.array([1.0]), NormMode.TRAPEZOID)

    @given(vector_pairs(), st.sampled_from(list(NormMode)))
    @settings(max_examples=50, deadline=None)
    def test_cauchy_schwarz(self, pair, mode):
        u, v = pair
        bound = norm(u, mode) * norm(v, mode)
        assert abs(inner(u, v, mode)) <= bound * (1 + 1e-12) + 1e-12

    @given(vector_pairs(), st.sampled_from(list(NormMode)))
    @settings(max_examples=50, deadline=None)
    def test_triangle_inequality(self, pair, mode):
        u, v = pair
        assert norm(u + v, mode) <= (norm(u, mode) + norm(v, mode)) * (1 + 1e-12) + 1e-12

    def test_parse_norm_mode(self):
        assert parse_norm_mode("Trapezoid") == NormMode.TRAPEZOID
        assert parse_norm_mode(NormMode.EUCLIDEAN) == NormMode.EUCLIDEAN
        with pytest.raises(ConfigError):
            parse_norm_mode("l1")
