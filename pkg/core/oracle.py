"""
Ground-truth layer for the regularized equation F(V) + a V = f_delta.

Solutions are computed independently of the solver loop, by the
contraction map v <- v - gamma (F(v) + a v - f_delta) with
gamma = 1 / (sigma^{-1} + 2 a), or by a damped Newton method as a
cross-check. On top of the regularization path V_n = V(a_n) this module
evaluates the inequalities the convergence analysis relies on.
"""

import logging
import math
from typing import List, Optional, Sequence

import numpy as np
from scipy import linalg

from .error_handling import (
    InvalidScheduleError,
    NonConvergenceError,
    UnsupportedOperationError,
    handle_numerical_error,
)
from .grid import as_grid_function, norm
from .models import (
    LargeATrendPoint,
    LemmaRecord,
    LemmaReport,
    MinimalNormEstimate,
    NormMode,
    OperatorHandle,
    RegularizedSolution,
    ScheduleCertificate,
    ScheduleParams,
    SolveMethod,
)
from .schedule import Schedule, a_at, certify_schedule

logger = logging.getLogger(__name__)

CONTRACTION_MAX_ITER = 10 ** 6
NEWTON_MAX_ITER = 100
MONOTONE_RELATIVE_TOL = 1e-9

ASSERTED = "asserted"
RECORDED = "recorded"
SKIPPED = "skipped (hypothesis)"


def _residual(op: OperatorHandle, v: np.ndarray, a: float, f_delta: np.ndarray) -> np.ndarray:
    return op.apply(v) + a * v - f_delta


def _solve_contraction(op, a, f_delta, tol, v, max_iter, mode):
    gamma = 1.0 / (op.sigma_inverse_bound + 2.0 * a)
    r = _residual(op, v, a, f_delta)
    residual = norm(r, mode)
    iterations = 0
    while residual > tol:
        if iterations >= max_iter:
            raise NonConvergenceError(
                f"Contraction solve at a={a:.6g} stopped after {iterations} iterations "
                f"with residual {residual:.3e} > {tol:.3e}",
                last_residual=residual,
                a=a,
                iterations=iterations,
            )
        v = v - gamma * r
        r = _residual(op, v, a, f_delta)
        residual = norm(r, mode)
        iterations += 1
    return v, residual, iterations


def _jacobian(op: OperatorHandle, v: np.ndarray, a: float) -> np.ndarray:
    basis = np.eye(op.dim)
    columns = [op.derivative_apply(v, basis[j]) for j in range(op.dim)]
    return np.column_stack(columns) + a * basis


def _solve_newton(op, a, f_delta, tol, v, max_iter, mode):
    if not op.has_derivative():
        raise UnsupportedOperationError(f"Newton solve needs derivative_apply on '{op.name}'")

    r = _residual(op, v, a, f_delta)
    residual = norm(r, mode)
    iterations = 0
    while residual > tol:
        if iterations >= max_iter:
            raise NonConvergenceError(
                f"Newton solve at a={a:.6g} stopped after {iterations} iterations "
                f"with residual {residual:.3e} > {tol:.3e}",
                last_residual=residual,
                a=a,
                iterations=iterations,
            )
        direction = linalg.solve(_jacobian(op, v, a), -r)

        # backtracking on the residual norm
        t = 1.0
        while True:
            candidate = v + t * direction
            r_candidate = _residual(op, candidate, a, f_delta)
            residual_candidate = norm(r_candidate, mode)
            if residual_candidate <= (1.0 - 1e-4 * t) * residual or t < 1e-10:
                break
            t *= 0.5

        if residual_candidate >= residual:
            raise NonConvergenceError(
                f"Newton line search stalled at a={a:.6g} with residual {residual:.3e}",
                last_residual=residual,
                a=a,
                iterations=iterations,
            )
        v, r, residual = candidate, r_candidate, residual_candidate
        iterations += 1
    return v, residual, iterations


@handle_numerical_error("oracle")
def solve_regularized(
    op: OperatorHandle,
    a: float,
    f_delta: np.ndarray,
    tol: float,
    method: SolveMethod = SolveMethod.CONTRACTION,
    v0: Optional[np.ndarray] = None,
    max_iter: Optional[int] = None,
    mode: NormMode = NormMode.EUCLIDEAN,
) -> RegularizedSolution:
    """
    Solve F(V) + a V = f_delta to residual tolerance tol.

    Args:
        op: Operator
        a: Regularization parameter, positive
        f_delta: Right-hand side
        tol: Residual tolerance, positive
        method: Contraction map (default) or damped Newton
        v0: Start vector; zero when omitted
        max_iter: Iteration cap (10^6 for contraction, 100 for Newton)
        mode: Norm in which the residual is measured

    Returns:
        RegularizedSolution: V with its residual and iteration count

    Raises:
        NonConvergenceError: If the cap is reached before tol
        UnsupportedOperationError: For Newton without derivative_apply
    """
    if not a > 0:
        raise ValueError(f"Regularization parameter must be positive, got {a}")
    if not tol > 0:
        raise ValueError(f"Tolerance must be positive, got {tol}")

    f_delta = as_grid_function(f_delta)
    v = np.zeros(op.dim) if v0 is None else as_grid_function(v0)

    if method == SolveMethod.NEWTON:
        cap = NEWTON_MAX_ITER if max_iter is None else max_iter
        V, residual, iterations = _solve_newton(op, a, f_delta, tol, v, cap, mode)
    else:
        cap = CONTRACTION_MAX_ITER if max_iter is None else max_iter
        V, residual, iterations = _solve_contraction(op, a, f_delta, tol, v, cap, mode)

    logger.debug(f"{method.value} solve at a={a:.6g}: residual {residual:.3e} in {iterations} iterations")
    return RegularizedSolution(a=a, V=V, residual=residual, iterations=iterations, tol=tol, method=method)


def regularized_path(
    op: OperatorHandle,
    s: Schedule,
    f_delta: np.ndarray,
    n_max: int,
    tol: float,
    method: SolveMethod = SolveMethod.CONTRACTION,
    warm_start: bool = True,
    mode: NormMode = NormMode.EUCLIDEAN,
) -> List[RegularizedSolution]:
    """
    V_n for n = 0..n_max, each solving F(V_n) + a_n V_n = f_delta.

    With warm_start each solve starts from V_{n-1}; otherwise every point
    starts from zero and the points are independent.

    Raises:
        NonConvergenceError: Naming the failing path index and a_n
    """
    if n_max < 0:
        raise ValueError(f"n_max must be nonnegative, got {n_max}")

    path: List[RegularizedSolution] = []
    previous: Optional[np.ndarray] = None
    for n in range(n_max + 1):
        a_n = a_at(s, n)
        try:
            solution = solve_regularized(op, a_n, f_delta, tol, method, v0=previous, mode=mode)
        except NonConvergenceError as e:
            raise NonConvergenceError(
                f"Path point n={n}: {e}", last_residual=e.last_residual, a=a_n, iterations=e.iterations
            ) from e
        path.append(solution)
        if warm_start:
            previous = solution.V
    return path


def minimal_norm_estimate(
    op: OperatorHandle,
    f: np.ndarray,
    a_list: Sequence[float],
    tol: float,
    method: SolveMethod = SolveMethod.CONTRACTION,
    mode: NormMode = NormMode.EUCLIDEAN,
) -> MinimalNormEstimate:
    """
    Approximate the minimal-norm solution by V_a for decreasing a.

    The gaps ||V_{a_k} - V_{a_{k+1}}|| are reported; ``cauchy_ok`` is False
    (with a warning) when they fail to decrease.
    """
    a_values = [float(a) for a in a_list]
    if not a_values or any(a <= 0 for a in a_values):
        raise ValueError("a_list must be a nonempty list of positive values")
    if any(later >= earlier for earlier, later in zip(a_values, a_values[1:])):
        raise ValueError("a_list must be strictly decreasing")

    solutions = []
    previous = None
    for a in a_values:
        solution = solve_regularized(op, a, f, tol, method, v0=previous, mode=mode)
        solutions.append(solution.V)
        previous = solution.V

    gaps = [norm(v - w, mode) for v, w in zip(solutions, solutions[1:])]
    slack = 10.0 * tol / a_values[-1]
    cauchy_ok = all(later <= earlier + slack for earlier, later in zip(gaps, gaps[1:]))
    if not cauchy_ok:
        logger.warning(f"Minimal-norm estimate: gaps are not decreasing {['%.3e' % g for g in gaps]}")

    return MinimalNormEstimate(estimate=solutions[-1], a_values=a_values, gaps=gaps, cauchy_ok=cauchy_ok)


def large_a_trend(
    op: OperatorHandle,
    f_delta: np.ndarray,
    a_values: Sequence[float],
    tol: float,
    mode: NormMode = NormMode.EUCLIDEAN,
    method: SolveMethod = SolveMethod.CONTRACTION,
) -> List[LargeATrendPoint]:
    """a ||V_a|| and ||F(V_a) - f_delta|| for growing a."""
    points = []
    for a in a_values:
        solution = solve_regularized(op, a, f_delta, tol, method, mode=mode)
        points.append(LargeATrendPoint(
            a=float(a),
            a_times_norm=a * norm(solution.V, mode),
            discrepancy=norm(op.apply(solution.V) - f_delta, mode),
        ))
    return points


def _slack(lhs: float, rhs: float, accuracy: float) -> float:
    return (lhs - rhs - accuracy) / (1.0 + abs(rhs))


def check_large_a_trend(
    points: Sequence[LargeATrendPoint],
    zero_residual: float,
    tol: float,
    check_tol: float = 1e-8,
) -> List[LemmaRecord]:
    """
    Rows for the large-a behaviour of V_a.

    ``large_a_norm_bound`` asserts a ||V_a|| <= ||F(0) - f_delta||;
    ``large_a_discrepancy_trend`` records that ||F(V_a) - f_delta|| grows
    towards ||F(0) - f_delta|| as a increases.
    """
    n_range = (0, max(len(points) - 1, 0))
    bound = _record(
        "large_a_norm_bound", n_range,
        [_slack(p.a_times_norm, zero_residual, tol) for p in points],
        check_tol,
    )
    trend = [
        _slack(earlier.discrepancy, later.discrepancy, tol)
        for earlier, later in zip(points, points[1:])
    ]
    trend.extend(_slack(p.discrepancy, zero_residual, tol) for p in points)
    return [bound, _record("large_a_discrepancy_trend", n_range, trend, check_tol, RECORDED)]


def _record(name: str, n_range, slacks: List[float], tolerance: float, status: str = ASSERTED) -> LemmaRecord:
    worst = max(slacks) if slacks else 0.0
    return LemmaRecord(
        name=name,
        n_range=n_range,
        max_violation=float(worst),
        tolerance=tolerance,
        passed=worst <= tolerance,
        status=status,
    )


def perturbation_bound_check(
    op: OperatorHandle,
    f: np.ndarray,
    f_delta: np.ndarray,
    delta: float,
    a_values: Sequence[float],
    tol: float,
    y_norm: Optional[float] = None,
    check_tol: float = 1e-8,
    mode: NormMode = NormMode.EUCLIDEAN,
    method: SolveMethod = SolveMethod.CONTRACTION,
) -> LemmaReport:
    """
    ||V_{delta,a} - V_{0,a}|| <= delta / a, and ||V_{0,a}|| <= ||y|| when y_norm is given.

    Both regularized equations are solved at every a.
    """
    report = LemmaReport()
    scale = 4.0 * tol * max(1.0, op.sigma_inverse_bound)
    perturbation, clean_norm = [], []
    for a in a_values:
        noisy = solve_regularized(op, a, f_delta, tol, method, mode=mode)
        clean = solve_regularized(op, a, f, tol, method, v0=noisy.V, mode=mode)
        perturbation.append(_slack(norm(noisy.V - clean.V, mode), delta / a, scale / a))
        if y_norm is not None:
            clean_norm.append(_slack(norm(clean.V, mode), y_norm, scale / a))

    n_range = (0, len(a_values) - 1)
    report.add(_record("perturbation_bound", n_range, perturbation, check_tol))
    if y_norm is not None:
        report.add(_record("clean_norm_bound", n_range, clean_norm, check_tol))
    return report


def verify_lemma_suite(
    op: OperatorHandle,
    s: Schedule,
    f_delta: np.ndarray,
    delta: float,
    y_norm: float,
    n_max: int,
    tol: float,
    check_tol: float = 1e-8,
    method: SolveMethod = SolveMethod.CONTRACTION,
    mode: NormMode = NormMode.EUCLIDEAN,
    certificate: Optional[ScheduleCertificate] = None,
) -> LemmaReport:
    """
    Evaluate the path inequalities for n = 0..n_max.

    Every inequality lhs <= rhs is measured as the normalized slack
    (lhs - rhs - accuracy_n) / (1 + |rhs|), where accuracy_n bounds the
    effect of the oracle tolerance at a_n; a row passes when its largest
    slack is at most its tolerance. Rows:

      residual_decreasing, norm_increasing  l_n = ||F(V_n) - f_delta|| decreases, k_n = ||V_n|| increases
      residual_identity       l_n = a_n ||V_n||
      noise_norm_bound        ||V_n|| <= ||y|| + delta / a_n
      path_step_bound         ||V_n - V_{n+1}|| <= ((a_n - a_{n+1}) / a_n) ||V_{n+1}||
      residual_at_zero_bound  a_n ||V_n|| <= ||F(0) - f_delta||
      weighted_sum_bound      e^{-phi_n} sum_{i<n} e^{phi_{i+1}} (a_i - a_{i+1}) ||V_i|| <= a_n ||V_n|| / 2,
                              phi_n = sum_{i=1..n} a_i h / 2; asserted only for schedules
                              meeting a(0) h <= 2 and nu(0) <= 1/10
      residual_limit_bound    l_n^2 <= (a_n ||y|| + delta) l_n + a_n ||y|| delta
      residual_below_delta    l_{n_max} <= delta (recorded)

    When ||F(0) - f_delta|| = 0 the path is identically zero and the
    monotonicity rows are skipped.
    """
    if certificate is None:
        if isinstance(s, ScheduleParams):
            certificate = certify_schedule(s)
        else:
            raise InvalidScheduleError("A certificate is required for tabulated schedules")

    path = regularized_path(op, s, f_delta, n_max, tol, method, mode=mode)
    a = [solution.a for solution in path]
    V = [solution.V for solution in path]
    k = [norm(v, mode) for v in V]
    ell = [norm(op.apply(v) - f_delta, mode) for v in V]
    accuracy = [4.0 * tol * max(1.0, op.sigma_inverse_bound) / a_n for a_n in a]
    zero_residual = norm(op.apply(np.zeros(op.dim)) - f_delta, mode)

    full = (0, n_max)
    pairs = (0, max(n_max - 1, 0))
    report = LemmaReport()

    if zero_residual == 0.0:
        report.add(LemmaRecord("residual_decreasing", pairs, 0.0, MONOTONE_RELATIVE_TOL, True, SKIPPED))
        report.add(LemmaRecord("norm_increasing", pairs, 0.0, MONOTONE_RELATIVE_TOL, True, SKIPPED))
    else:
        report.add(_record(
            "residual_decreasing", pairs,
            [_slack(ell[n + 1], ell[n], accuracy[n + 1]) for n in range(n_max)],
            MONOTONE_RELATIVE_TOL,
        ))
        report.add(_record(
            "norm_increasing", pairs,
            [_slack(k[n], k[n + 1], accuracy[n + 1]) for n in range(n_max)],
            MONOTONE_RELATIVE_TOL,
        ))

    report.add(_record(
        "residual_identity", full,
        [_slack(abs(ell[n] - a[n] * k[n]), 0.0, 2.0 * tol) for n in range(n_max + 1)],
        check_tol,
    ))
    report.add(_record(
        "noise_norm_bound", full,
        [_slack(k[n], y_norm + delta / a[n], accuracy[n]) for n in range(n_max + 1)],
        check_tol,
    ))
    report.add(_record(
        "path_step_bound", pairs,
        [
            _slack(norm(V[n] - V[n + 1], mode), (a[n] - a[n + 1]) / a[n] * k[n + 1], 2.0 * accuracy[n + 1])
            for n in range(n_max)
        ],
        check_tol,
    ))
    report.add(_record(
        "residual_at_zero_bound", full,
        [_slack(a[n] * k[n], zero_residual, tol) for n in range(n_max + 1)],
        check_tol,
    ))

    half_step = 0.5 * s.h
    phi = np.concatenate(([0.0], np.cumsum(half_step * np.asarray(a[1:]))))
    weighted = []
    for n in range(1, n_max + 1):
        terms = [
            math.exp(phi[i + 1] - phi[n]) * (a[i] - a[i + 1]) * k[i]
            for i in range(n)
        ]
        weighted.append(_slack(math.fsum(terms), 0.5 * a[n] * k[n], accuracy[n]))
    report.add(_record(
        "weighted_sum_bound", (1, max(n_max, 1)), weighted, check_tol,
        ASSERTED if certificate.theorem3_ok else RECORDED,
    ))

    report.add(_record(
        "residual_limit_bound", full,
        [
            _slack(ell[n] ** 2, (a[n] * y_norm + delta) * ell[n] + a[n] * y_norm * delta,
                   accuracy[n] * (2.0 * ell[n] + a[n] * y_norm + delta))
            for n in range(n_max + 1)
        ],
        check_tol,
    ))
    report.add(_record(
        "residual_below_delta", (n_max, n_max),
        [_slack(ell[n_max], delta, accuracy[n_max])],
        check_tol,
        RECORDED,
    ))

    failures = report.failures()
    if failures:
        logger.warning(f"Lemma suite: {len(failures)} asserted rows failed: {[r.name for r in failures]}")
    else:
        logger.info(f"Lemma suite: all asserted rows passed for n = 0..{n_max}")
    return report
