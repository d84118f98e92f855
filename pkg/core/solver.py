"""
Iterative regularization with discrepancy-principle stopping.

Iteration:
    u_{n+1} = u_n - gamma_n [F(u_n) + a_n (u_n - u_bar) - f_delta]

The discrepancy ||F(u_n) - f_delta|| is evaluated before each step and
the run stops at the first n where it drops to C delta^zeta or below.
"""

import logging
import math
from typing import Optional

import numpy as np

from .error_handling import (
    ConfigError,
    DimensionError,
    DivergenceError,
    NonConvergenceError,
    StepBoundError,
    handle_numerical_error,
)
from .grid import as_grid_function, norm
from .models import (
    NormMode,
    OperatorHandle,
    RunReport,
    ScheduleCertificate,
    SolverConfig,
    StopReason,
    U0Source,
)
from .monitoring import RunMonitor
from .operators import sample_ball
from .problems import relative_error
from .schedule import Schedule, a_at, check_step_bounds, gamma_for, gamma_max

logger = logging.getLogger(__name__)

MINIMAL_NORM_CLAIM = "minimal-norm solution"
SOLUTION_CLAIM = "solution"


def step(
    u: np.ndarray,
    a: float,
    gamma: float,
    f_delta: np.ndarray,
    op: OperatorHandle,
    shift: Optional[np.ndarray] = None,
    Fu: Optional[np.ndarray] = None,
    n: int = 0,
) -> np.ndarray:
    """
    One step u - gamma [F(u) + a (u - shift) - f_delta].

    Args:
        u: Current iterate
        a: Regularization parameter a_n
        gamma: Step size, positive
        f_delta: Noisy data
        op: Operator
        shift: Optional shift u_bar (zero when absent)
        Fu: F(u) if already evaluated; otherwise evaluated here once
        n: Index of the produced iterate, for error reporting

    Returns:
        np.ndarray: Next iterate

    Raises:
        DivergenceError: If the result is not finite
    """
    if not gamma > 0:
        raise StepBoundError(f"Step size must be positive, got {gamma}")
    if u.shape != f_delta.shape:
        raise DimensionError(f"Iterate has length {u.size}, data has length {f_delta.size}")

    if Fu is None:
        Fu = op.apply(u)
    offset = u if shift is None else u - shift
    u_next = u - gamma * (Fu + a * offset - f_delta)

    if not np.all(np.isfinite(u_next)):
        u_norm = float(np.linalg.norm(u[np.isfinite(u)])) if np.any(np.isfinite(u)) else math.inf
        raise DivergenceError(f"Iterate u_{n} is not finite", n=n, u_norm=u_norm)
    return u_next


def fixed_point_initializer(
    op: OperatorHandle,
    a0: float,
    f_delta: np.ndarray,
    v0: np.ndarray,
    gamma: float,
    tol: float,
    max_iter: int,
    mode: NormMode = NormMode.EUCLIDEAN,
    shift: Optional[np.ndarray] = None,
) -> np.ndarray:
    """
    Approximate the regularized solution at a0 by fixed-point iteration.

    Iterates v <- v - gamma (F(v) + a0 (v - shift) - f_delta) until the
    residual is at most tol. The map is a contraction for
    0 < gamma < 2 / (sigma^{-1} + 2 a0).

    Raises:
        StepBoundError: If gamma is outside the contraction range
        NonConvergenceError: If max_iter iterations do not reach tol
    """
    bound = gamma_max(op.sigma_inverse_bound, a0)
    if not 0 < gamma < bound:
        raise StepBoundError(f"Fixed-point step gamma={gamma:.6g} must lie in (0, {bound:.6g})")

    v = as_grid_function(v0)
    for k in range(max_iter + 1):
        offset = v if shift is None else v - shift
        r = op.apply(v) + a0 * offset - f_delta
        residual = norm(r, mode)
        if residual <= tol:
            logger.debug(f"Fixed-point initializer converged in {k} iterations (residual {residual:.3e})")
            return v
        if k == max_iter:
            break
        v = v - gamma * r
        if not np.all(np.isfinite(v)):
            raise NonConvergenceError("Fixed-point iterate became non-finite", residual, a0, k)

    raise NonConvergenceError(
        f"Fixed-point initializer did not reach tol={tol:.3e} in {max_iter} iterations "
        f"(last residual {residual:.3e})",
        last_residual=residual,
        a=a0,
        iterations=max_iter,
    )


def check_theorem3_start(
    u0: np.ndarray,
    op: OperatorHandle,
    a0: float,
    f_delta: np.ndarray,
    delta: float,
    cfg: SolverConfig,
    V0_norm: Optional[float] = None,
) -> bool:
    """
    Start condition on u0 for the minimal-norm convergence claim.

    True iff psi_0 = ||F(u0) + a0 u0 - f_delta|| <= theta delta^zeta, or
    psi_0 <= a0 ||V_0|| / 8. Without V0_norm only the first test is made.
    """
    offset = u0 if cfg.shift is None else u0 - cfg.shift
    psi0 = norm(op.apply(u0) + a0 * offset - f_delta, cfg.norm_mode)
    if psi0 <= cfg.theta * delta ** cfg.zeta:
        return True
    if V0_norm is not None and psi0 <= a0 * V0_norm / 8.0:
        return True
    return False


def _validate_config(cfg: SolverConfig, delta: float) -> float:
    if not cfg.C > 1:
        raise ConfigError(f"Stopping constant C must exceed 1, got {cfg.C}")
    if not 0 < cfg.zeta <= 1:
        raise ConfigError(f"Stopping exponent zeta must lie in (0, 1], got {cfg.zeta}")
    if not 0 < cfg.theta < cfg.C:
        raise ConfigError(f"theta must lie in (0, C), got {cfg.theta}")
    if cfg.max_iter < 0:
        raise ConfigError(f"max_iter must be nonnegative, got {cfg.max_iter}")
    if not (delta >= 0 and math.isfinite(delta)):
        raise ConfigError(f"Noise level delta must be finite and nonnegative, got {delta}")
    threshold = cfg.threshold(delta)
    if not threshold > delta:
        raise ConfigError(
            f"Stopping threshold C delta^zeta = {threshold:.6g} must exceed delta = {delta:.6g}"
        )
    return threshold


def _resolve_vector(value: Optional[np.ndarray], dim: int, label: str) -> Optional[np.ndarray]:
    if value is None:
        return None
    vector = as_grid_function(value)
    if vector.size != dim:
        raise DimensionError(f"{label} has length {vector.size}, operator expects {dim}")
    return vector


def _resolve_u0(
    op: OperatorHandle,
    s: Schedule,
    f_delta: np.ndarray,
    delta: float,
    cfg: SolverConfig,
    shift: Optional[np.ndarray],
) -> np.ndarray:
    given = _resolve_vector(cfg.u0, op.dim, "u0")
    if cfg.u0_source == U0Source.GIVEN:
        if given is None:
            raise ConfigError("u0_source is 'given' but no u0 vector was supplied")
        return given
    if cfg.u0_source == U0Source.FIXED_POINT:
        a0 = a_at(s, 0)
        start = given if given is not None else np.zeros(op.dim)
        return fixed_point_initializer(
            op,
            a0,
            f_delta,
            start,
            gamma=1.0 / (op.sigma_inverse_bound + 2.0 * a0),
            tol=cfg.theta * delta ** cfg.zeta,
            max_iter=cfg.max_iter,
            mode=cfg.norm_mode,
            shift=shift,
        )
    return np.zeros(op.dim)


@handle_numerical_error("solver")
def run(
    op: OperatorHandle,
    f_delta: np.ndarray,
    delta: float,
    s: Schedule,
    cfg: SolverConfig,
    certificate: Optional[ScheduleCertificate] = None,
    u_exact: Optional[np.ndarray] = None,
    V0_norm: Optional[float] = None,
) -> RunReport:
    """
    Run the regularized iteration until the discrepancy principle stops it.

    Args:
        op: Operator with its sigma-inverse bound
        f_delta: Noisy data
        delta: Noise level ||f_delta - f||
        s: Regularization schedule
        cfg: Solver configuration
        certificate: Schedule certificate echoed into the report
        u_exact: Reference solution for the relative error
        V0_norm: ||V_0|| from the oracle, enabling the second start test

    Returns:
        RunReport: Dense traces, stopping index and final iterate

    Raises:
        ConfigError: If C delta^zeta <= delta or a parameter is out of range
        StepBoundError: If gamma_n violates h <= gamma_n <= 2 / (sigma^{-1} + 2 a_n)
        DivergenceError: If an iterate becomes non-finite (partial report attached)
    """
    f_delta = as_grid_function(f_delta)
    if f_delta.size != op.dim:
        raise DimensionError(f"Data has length {f_delta.size}, operator expects {op.dim}")

    threshold = _validate_config(cfg, delta)
    sigma_inverse = op.sigma_inverse_bound
    check_step_bounds(s, cfg.gamma_rule, sigma_inverse, cfg.gamma, cfg.gamma_cap)

    shift = _resolve_vector(cfg.shift, op.dim, "shift")
    u0 = _resolve_u0(op, s, f_delta, delta, cfg, shift)
    mode = cfg.norm_mode

    monitor = RunMonitor(op.ball_radius, cfg.stagnation_window, name=op.name)
    report = RunReport(
        n_delta=None,
        stop_reason=StopReason.MAX_ITER,
        delta=delta,
        threshold=threshold,
        discrepancy_trace=[],
        residual_trace=[],
        a_trace=[],
        gamma_trace=[],
        u_norm_trace=[],
        offset_norm_trace=[],
        final_iterate=u0,
        certificate_echo=certificate,
        iterates=[] if cfg.record_iterates else None,
    )

    monitor.start()
    u = u0
    n = 0
    try:
        while True:
            a_n = a_at(s, n)
            Fu = op.apply(u)
            if not np.all(np.isfinite(Fu)):
                raise DivergenceError(f"F(u_{n}) is not finite", n=n, u_norm=norm(u, mode))

            misfit = Fu - f_delta
            offset = u if shift is None else u - shift
            discrepancy = norm(misfit, mode)
            u_norm = norm(u, mode)
            gamma_n = gamma_for(s, n, cfg.gamma_rule, sigma_inverse, cfg.gamma, cfg.gamma_cap)

            report.a_trace.append(a_n)
            report.gamma_trace.append(gamma_n)
            report.discrepancy_trace.append(discrepancy)
            report.residual_trace.append(norm(misfit + a_n * offset, mode))
            report.u_norm_trace.append(u_norm)
            report.offset_norm_trace.append(u_norm if shift is None else norm(offset, mode))
            if report.iterates is not None:
                report.iterates.append(u.copy())
            monitor.observe(n, u_norm, discrepancy)

            if discrepancy <= threshold:
                report.n_delta = n
                report.stop_reason = StopReason.DISCREPANCY
                break
            if n >= cfg.max_iter:
                report.stop_reason = StopReason.MAX_ITER
                break

            logger.debug(f"n={n} a_n={a_n:.6g} gamma_n={gamma_n:.6g} discrepancy={discrepancy:.6g}")
            u = step(u, a_n, gamma_n, f_delta, op, shift, Fu=Fu, n=n + 1)
            n += 1
    except DivergenceError as e:
        report.final_iterate = u
        report.runtime_ms = monitor.stop()
        report.max_u_norm = monitor.observation.max_u_norm
        e.partial_report = report
        raise

    report.final_iterate = u
    report.runtime_ms = monitor.stop()
    report.max_u_norm = monitor.observation.max_u_norm
    report.ball_exceeded = monitor.ball_exceeded

    report.theorem3_start_ok = check_theorem3_start(u0, op, a_at(s, 0), f_delta, delta, cfg, V0_norm)
    if certificate is not None and certificate.theorem3_ok and report.theorem3_start_ok:
        report.convergence_claim = MINIMAL_NORM_CLAIM
    else:
        report.convergence_claim = SOLUTION_CLAIM

    if u_exact is not None:
        report.rel_error = relative_error(u, u_exact, mode)

    if report.stopped_by_discrepancy():
        logger.info(
            f"{op.name}: discrepancy stop at n_delta={report.n_delta} "
            f"(threshold {threshold:.6g}, {report.runtime_ms:.1f} ms)"
        )
    else:
        logger.warning(
            f"{op.name}: no discrepancy stop within max_iter={cfg.max_iter} "
            f"(last discrepancy {report.discrepancy_trace[-1]:.6g}, threshold {threshold:.6g})"
        )
    return report


def check_residual_recursion(report: RunReport) -> float:
    """
    Largest normalized violation of the one-step residual recursion.

    psi_{n+1} <= (1 - gamma_n a_{n+1}) psi_n + (a_n - a_{n+1}) ||u_n - u_bar||,
    each violation divided by (1 + right-hand side). Nonpositive when the
    recursion holds along the whole trace.
    """
    psi = report.residual_trace
    a = report.a_trace
    gamma = report.gamma_trace
    offsets = report.offset_norm_trace

    worst = -math.inf
    for n in range(len(psi) - 1):
        rhs = (1.0 - gamma[n] * a[n + 1]) * psi[n] + (a[n] - a[n + 1]) * offsets[n]
        worst = max(worst, (psi[n + 1] - rhs) / (1.0 + abs(rhs)))
    return worst if math.isfinite(worst) else 0.0


def check_contraction(
    op: OperatorHandle,
    gamma: float,
    a: float,
    radius: float,
    sample_count: int,
    seed: int,
    mode: NormMode = NormMode.EUCLIDEAN,
) -> float:
    """
    Largest violation of ||w - (gamma / (1 - gamma a)) (F(u) - F(v))|| <= ||w||, w = u - v.

    Pairs are sampled uniformly in B(0, radius); each violation is divided
    by max(1, ||w||).

    Raises:
        StepBoundError: If gamma exceeds 2 / (sigma^{-1} + 2 a)
    """
    if not 0 < gamma <= gamma_max(op.sigma_inverse_bound, a):
        raise StepBoundError(f"gamma={gamma:.6g} is not admissible for a={a:.6g}")

    rng = np.random.Generator(np.random.PCG64(seed))
    t = gamma / (1.0 - gamma * a)
    worst = -math.inf
    for _ in range(sample_count):
        u = sample_ball(rng, op.dim, radius, mode)
        v = sample_ball(rng, op.dim, radius, mode)
        w = u - v
        w_norm = norm(w, mode)
        lhs = norm(w - t * (op.apply(u) - op.apply(v)), mode)
        worst = max(worst, (lhs - w_norm) / max(1.0, w_norm))
    return worst
