"""
Operator abstraction and sampled verification of sigma-inverse monotonicity.

An operator is carried as an OperatorHandle: an evaluable map together
with an upper bound s on sigma_R^{-1}, valid on the ball B(0, R). The
checks in this module never prove anything; they sample the defining
inequality and report the worst case.
"""

import logging
import math
from typing import Callable, List, Optional, Sequence

import numpy as np

from .error_handling import (
    DimensionError,
    InvalidOperatorError,
    OperatorEvaluationError,
    UnsupportedOperationError,
)
from .grid import as_grid_function, inner, norm
from .models import NormMode, OperatorHandle, SigmaCheckReport

logger = logging.getLogger(__name__)

DEFAULT_SIGMA_TOLERANCE = 1e-10


def make_operator(
    apply: Callable[[np.ndarray], np.ndarray],
    sigma_inverse_bound: float,
    dim: int,
    ball_radius: float = math.inf,
    derivative_apply: Optional[Callable[[np.ndarray, np.ndarray], np.ndarray]] = None,
    name: str = "operator",
    metadata: Optional[dict] = None,
) -> OperatorHandle:
    """
    Build an OperatorHandle after validating its bounds.

    Args:
        apply: Map u -> F(u) on grid functions of length dim
        sigma_inverse_bound: Upper bound on sigma_R^{-1}, positive
        dim: Length of the grid functions the operator acts on
        ball_radius: Radius R on which the bound holds (inf for global)
        derivative_apply: Optional map (u, h) -> F'(u) h
        name: Label used in logs and reports
        metadata: Free-form construction details

    Returns:
        OperatorHandle: Immutable operator handle

    Raises:
        InvalidOperatorError: If a bound or the dimension is not positive
    """
    if not (sigma_inverse_bound > 0 and math.isfinite(sigma_inverse_bound)):
        raise InvalidOperatorError(f"sigma_inverse_bound must be positive and finite, got {sigma_inverse_bound}")
    if not ball_radius > 0:
        raise InvalidOperatorError(f"ball_radius must be positive, got {ball_radius}")
    if dim < 1:
        raise InvalidOperatorError(f"Operator dimension must be at least 1, got {dim}")

    return OperatorHandle(
        apply=apply,
        sigma_inverse_bound=float(sigma_inverse_bound),
        dim=int(dim),
        ball_radius=float(ball_radius),
        derivative_apply=derivative_apply,
        name=name,
        metadata=dict(metadata or {}),
    )


def sigma_inverse_from_derivative_bound(derivative_bound: float) -> float:
    """
    sigma_R^{-1} for a monotone operator with selfadjoint F' bounded by M(R).

    For such operators sigma_R = 1 / M(R), so the carried bound is M(R).

    Raises:
        InvalidOperatorError: If the bound is not positive
    """
    if not (derivative_bound > 0 and math.isfinite(derivative_bound)):
        raise InvalidOperatorError(f"Derivative bound must be positive and finite, got {derivative_bound}")
    return float(derivative_bound)


def make_linear_spd(eigenvalues: Sequence[float]) -> OperatorHandle:
    """
    Diagonal selfadjoint operator (A u)_i = lambda_i u_i.

    The sigma-inverse bound is the largest eigenvalue. Input that is not
    sorted in decreasing order is sorted before use; ``metadata["resorted"]``
    is set and the given order is kept in ``metadata["eigenvalues_input"]``.

    Args:
        eigenvalues: Nonnegative eigenvalues, at least one positive

    Returns:
        OperatorHandle: Linear operator with a global bound

    Raises:
        InvalidOperatorError: On negative eigenvalues or a nonpositive maximum
    """
    try:
        lam = as_grid_function(eigenvalues, min_points=1)
    except DimensionError as e:
        raise InvalidOperatorError(f"Invalid eigenvalues: {e}") from e

    if np.any(lam < 0):
        raise InvalidOperatorError(f"Eigenvalues must be nonnegative, got minimum {lam.min()}")
    lam_max = float(lam.max())
    if lam_max <= 0:
        raise InvalidOperatorError("Largest eigenvalue must be positive")

    given = lam.copy()
    resorted = bool(np.any(np.diff(lam) > 0))
    if resorted:
        logger.warning("Eigenvalues were not in decreasing order; sorting them")
        lam = np.sort(lam)[::-1].copy()

    lam.setflags(write=False)

    def apply(u: np.ndarray) -> np.ndarray:
        return lam * u

    def derivative_apply(u: np.ndarray, h: np.ndarray) -> np.ndarray:
        return lam * h

    return make_operator(
        apply=apply,
        sigma_inverse_bound=lam_max,
        dim=lam.size,
        ball_radius=math.inf,
        derivative_apply=derivative_apply,
        name="linear_spd",
        metadata={
            "eigenvalues": lam,
            "eigenvalues_input": given,
            "resorted": resorted,
        },
    )


def sample_ball(
    rng: np.random.Generator,
    dim: int,
    radius: float,
    mode: NormMode = NormMode.EUCLIDEAN,
) -> np.ndarray:
    """
    Draw one point uniformly from the ball of the given radius.

    A Gaussian direction is normalized in the chosen norm and scaled by
    radius * U^(1/dim).
    """
    direction = rng.standard_normal(dim)
    length = norm(direction, mode)
    while length == 0.0:
        direction = rng.standard_normal(dim)
        length = norm(direction, mode)
    magnitude = radius * rng.uniform() ** (1.0 / dim)
    return direction * (magnitude / length)


def _evaluate(op: OperatorHandle, u: np.ndarray, index: int) -> np.ndarray:
    try:
        value = np.asarray(op.apply(u), dtype=np.float64)
    except Exception as e:
        raise OperatorEvaluationError(f"Operator '{op.name}' failed on sample {index}: {e}", index) from e
    if value.shape != u.shape or not np.all(np.isfinite(value)):
        raise OperatorEvaluationError(
            f"Operator '{op.name}' returned an invalid value on sample {index}", index
        )
    return value


def check_sigma_inverse(
    op: OperatorHandle,
    sigma: float,
    radius: float,
    sample_count: int,
    seed: int,
    tolerance: float = DEFAULT_SIGMA_TOLERANCE,
    mode: NormMode = NormMode.EUCLIDEAN,
    keep_pairs: int = 10,
) -> SigmaCheckReport:
    """
    Sample <F(u)-F(v), u-v> >= sigma ||F(u)-F(v)||^2 on B(0, radius).

    The report carries the raw margin <dF, du> - sigma ||dF||^2. A pair
    violates the inequality when that margin is below
    -tolerance * (1 + ||dF||^2), so roundoff on large samples is not
    counted.

    Args:
        op: Operator to check
        sigma: Constant sigma (not its inverse); 0 checks plain monotonicity
        radius: Ball radius
        sample_count: Number of (u, v) pairs, at least 1
        seed: Seed of the PCG64 generator
        tolerance: Roundoff allowance relative to (1 + ||dF||^2)
        mode: Inner-product convention
        keep_pairs: Maximal number of violating pairs stored in the report

    Returns:
        SigmaCheckReport: Sample count, violations and worst margin

    Raises:
        OperatorEvaluationError: If the operator fails on a sample
    """
    if sample_count < 1:
        raise ValueError(f"sample_count must be at least 1, got {sample_count}")
    if sigma < 0 or not radius > 0:
        raise ValueError(f"Need sigma >= 0 and radius > 0, got sigma={sigma}, radius={radius}")

    rng = np.random.Generator(np.random.PCG64(seed))
    violations = 0
    worst = math.inf
    pairs: List = []

    for index in range(sample_count):
        u = sample_ball(rng, op.dim, radius, mode)
        v = sample_ball(rng, op.dim, radius, mode)
        dF = _evaluate(op, u, index) - _evaluate(op, v, index)
        dF_sq = inner(dF, dF, mode)
        margin = inner(dF, u - v, mode) - sigma * dF_sq
        worst = min(worst, margin)
        if margin < -tolerance * (1.0 + dF_sq):
            violations += 1
            if len(pairs) < keep_pairs:
                pairs.append((u, v))

    report = SigmaCheckReport(
        samples_tested=sample_count,
        violations=violations,
        worst_margin=float(worst),
        sigma=float(sigma),
        radius=float(radius),
        tolerance=float(tolerance),
        violating_pairs=pairs,
    )
    if violations:
        logger.warning(
            f"{op.name}: {violations}/{sample_count} sigma-inverse violations "
            f"(sigma={sigma:.6g}, worst margin {worst:.3e})"
        )
    else:
        logger.debug(f"{op.name}: sigma-inverse check passed, worst margin {worst:.3e}")
    return report


def check_monotone(
    op: OperatorHandle,
    radius: float,
    sample_count: int,
    seed: int,
    tolerance: float = DEFAULT_SIGMA_TOLERANCE,
    mode: NormMode = NormMode.EUCLIDEAN,
) -> SigmaCheckReport:
    """Sampled monotonicity, i.e. the sigma-inverse check with sigma = 0."""
    return check_sigma_inverse(op, 0.0, radius, sample_count, seed, tolerance, mode)


def derivative_finite_difference_check(
    op: OperatorHandle,
    u: np.ndarray,
    h: np.ndarray,
    eps_list: Sequence[float],
    mode: NormMode = NormMode.EUCLIDEAN,
) -> List[float]:
    """
    Forward-difference error of the derivative action for each epsilon.

    Returns ||(F(u + eps h) - F(u))/eps - F'(u) h|| / max(1, ||F'(u) h||);
    for a correct derivative these decay linearly in eps.

    Raises:
        UnsupportedOperationError: If the operator has no derivative action
    """
    if not op.has_derivative():
        raise UnsupportedOperationError(f"Operator '{op.name}' has no derivative_apply")
    if any(eps <= 0 for eps in eps_list):
        raise ValueError("Finite-difference steps must be positive")

    u = as_grid_function(u)
    h = as_grid_function(h)
    if u.size != op.dim or h.size != op.dim:
        raise DimensionError(f"Expected vectors of length {op.dim}, got {u.size} and {h.size}")

    Fu = op.apply(u)
    Jh = op.derivative_apply(u, h)
    scale = max(1.0, norm(Jh, mode))

    errors = []
    for eps in eps_list:
        quotient = (op.apply(u + eps * h) - Fu) / eps
        errors.append(norm(quotient - Jh, mode) / scale)

    logger.debug(f"{op.name}: finite-difference errors {['%.3e' % e for e in errors]}")
    return errors
