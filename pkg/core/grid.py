"""
Discretized Hilbert-space layer.

Grid functions are plain float64 numpy vectors sampled at x_i = i/(N-1).
Inner products and norms come in two conventions (see NormMode): the
Euclidean one used by default and the trapezoid-weighted one that
approximates the L^2[0,1] norm independently of N.
"""

import logging
from functools import lru_cache
from typing import Iterable, Union

import numpy as np

from .error_handling import ConfigError, DimensionError
from .models import NormMode

logger = logging.getLogger(__name__)

ArrayLike = Union[np.ndarray, Iterable[float]]


def uniform_grid(N: int) -> np.ndarray:
    """
    Uniform grid on [0, 1] with both endpoints.

    Args:
        N: Number of grid points, at least 2

    Returns:
        np.ndarray: x_i = i/(N-1), i = 0..N-1

    Raises:
        DimensionError: If N < 2
    """
    if N < 2:
        raise DimensionError(f"A grid on [0, 1] needs at least 2 points, got N={N}")
    return np.arange(N, dtype=np.float64) / (N - 1)


@lru_cache(maxsize=32)
def _cached_weights(N: int) -> np.ndarray:
    dx = 1.0 / (N - 1)
    weights = np.full(N, dx, dtype=np.float64)
    weights[0] = weights[-1] = dx / 2.0
    weights.setflags(write=False)
    return weights


def trapezoid_weights(N: int) -> np.ndarray:
    """
    Composite trapezoid weights on the uniform grid.

    The returned array is shared and read-only; copy it before mutating.

    Raises:
        DimensionError: If N < 2
    """
    if N < 2:
        raise DimensionError(f"Trapezoid weights need at least 2 points, got N={N}")
    return _cached_weights(N)


def as_grid_function(values: ArrayLike, min_points: int = 1) -> np.ndarray:
    """
    Validate and copy values into a grid function.

    Args:
        values: Sequence or array of samples
        min_points: Minimal accepted length

    Returns:
        np.ndarray: One-dimensional float64 copy of the values

    Raises:
        DimensionError: If the input is not one-dimensional, too short or
            contains NaN/Inf
    """
    try:
        u = np.array(values, dtype=np.float64)
    except (TypeError, ValueError) as e:
        raise DimensionError(f"Cannot interpret values as a real vector: {e}") from e

    if u.ndim != 1:
        raise DimensionError(f"Grid functions are one-dimensional, got shape {u.shape}")
    if u.size < min_points:
        raise DimensionError(f"Grid function needs at least {min_points} points, got {u.size}")
    if not np.all(np.isfinite(u)):
        bad = int(np.count_nonzero(~np.isfinite(u)))
        raise DimensionError(f"Grid function has {bad} non-finite entries")
    return u


def _check_pair(u: np.ndarray, v: np.ndarray, mode: NormMode) -> None:
    if u.shape != v.shape:
        raise DimensionError(f"Length mismatch: {u.shape[0] if u.ndim else 0} vs {v.shape[0] if v.ndim else 0}")
    if u.ndim != 1:
        raise DimensionError(f"Grid functions are one-dimensional, got shape {u.shape}")
    if mode == NormMode.TRAPEZOID and u.size < 2:
        raise DimensionError("Trapezoid-weighted inner product needs at least 2 points")


def inner(u: np.ndarray, v: np.ndarray, mode: NormMode = NormMode.EUCLIDEAN) -> float:
    """
    Inner product of two grid functions.

    Args:
        u: First grid function
        v: Second grid function of the same length
        mode: Euclidean sum or trapezoid-weighted quadrature

    Returns:
        float: <u, v> in the chosen convention

    Raises:
        DimensionError: On length mismatch
    """
    u = np.asarray(u, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    _check_pair(u, v, mode)
    if mode == NormMode.TRAPEZOID:
        return float(np.dot(trapezoid_weights(u.size) * u, v))
    return float(np.dot(u, v))


def norm(u: np.ndarray, mode: NormMode = NormMode.EUCLIDEAN) -> float:
    """Norm induced by ``inner``; zero exactly for the zero vector."""
    u = np.asarray(u, dtype=np.float64)
    if u.ndim != 1:
        raise DimensionError(f"Grid functions are one-dimensional, got shape {u.shape}")
    if mode == NormMode.TRAPEZOID:
        if u.size < 2:
            raise DimensionError("Trapezoid-weighted norm needs at least 2 points")
        return float(np.sqrt(np.dot(trapezoid_weights(u.size) * u, u)))
    return float(np.linalg.norm(u))


def parse_norm_mode(value: Union[str, NormMode]) -> NormMode:
    """Resolve a norm mode from its configuration spelling."""
    if isinstance(value, NormMode):
        return value
    try:
        return NormMode(str(value).strip().lower())
    except ValueError as e:
        choices = ", ".join(m.value for m in NormMode)
        raise ConfigError(f"Unknown norm mode '{value}' (expected one of: {choices})") from e
