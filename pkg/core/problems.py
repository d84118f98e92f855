"""
Testbed problems.

The integral problem discretizes F(u)(x) = int_0^1 e^{-|x-y|} u(y) dy + arctan^3(u(x))
with the trapezoid rule applied on the integration variable (Nystrom form).
Its exact solution is the unit step at x = 0.5. A diagonal linear problem
with closed-form regularized solutions is provided for verification runs.
"""

import logging
import math
from typing import Optional, Tuple, Union

import numpy as np
from scipy.optimize import minimize_scalar

from .error_handling import ConfigError, DimensionError
from .grid import as_grid_function, norm, trapezoid_weights, uniform_grid
from .models import IntegralProblem, NoiseModel, NoiseSpec, NormMode
from .operators import make_linear_spd, make_operator

logger = logging.getLogger(__name__)

KERNEL_NORM_BOUND = math.sqrt(2.0 / math.pi)
INTEGRAL_SIGMA_INVERSE = 1.0 + KERNEL_NORM_BOUND
SINUSOID_FREQUENCY = 3.0 * math.pi
MAX_NOISE_REDRAWS = 100


def exact_solution(N: int, midpoint_value: float = 1.0) -> np.ndarray:
    """
    Unit step: 0 for x < 0.5, 1 for x > 0.5.

    A grid point landing exactly on 0.5 (odd N) takes ``midpoint_value``.
    """
    x = uniform_grid(N)
    u = np.where(x > 0.5, 1.0, 0.0)
    u[x == 0.5] = midpoint_value
    return u


def kernel_matrix(N: int) -> np.ndarray:
    """Nystrom matrix K_ij = w_j e^{-|x_i - x_j|} with trapezoid weights w."""
    x = uniform_grid(N)
    K = np.exp(-np.abs(x[:, None] - x[None, :])) * trapezoid_weights(N)[None, :]
    K.setflags(write=False)
    return K


def cubic_arctan(u: np.ndarray) -> np.ndarray:
    return np.arctan(u) ** 3


def cubic_arctan_slope(u: np.ndarray) -> np.ndarray:
    """Pointwise derivative 3 arctan^2(u) / (1 + u^2)."""
    return 3.0 * np.arctan(u) ** 2 / (1.0 + u * u)


def derivative_bound() -> float:
    """
    Numerical bound on ||F'(u)|| for the integral problem.

    Adds the kernel bound sqrt(2/pi) to the maximum of the pointwise
    slope 3 arctan^2(x) / (1 + x^2), located by bounded scalar search.
    The result stays below INTEGRAL_SIGMA_INVERSE.
    """
    result = minimize_scalar(
        lambda t: -float(cubic_arctan_slope(np.array(t))),
        bounds=(0.0, 10.0),
        method="bounded",
        options={"xatol": 1e-10},
    )
    slope_max = -float(result.fun)
    return KERNEL_NORM_BOUND + slope_max


def build_integral_problem(N: int, midpoint_value: float = 1.0) -> IntegralProblem:
    """
    Build the discretized integral-equation testbed.

    Args:
        N: Number of grid points, at least 2
        midpoint_value: Value of the exact solution at x = 0.5 when it is a grid point

    Returns:
        IntegralProblem: Grid, kernel, exact data and the operator handle

    Raises:
        DimensionError: If N < 2
    """
    if N < 2:
        raise DimensionError(f"Integral problem needs N >= 2, got N={N}")

    x = uniform_grid(N)
    weights = trapezoid_weights(N)
    K = kernel_matrix(N)

    def apply(u: np.ndarray) -> np.ndarray:
        return K @ u + cubic_arctan(u)

    def derivative_apply(u: np.ndarray, h: np.ndarray) -> np.ndarray:
        return cubic_arctan_slope(u) * h + K @ h

    operator = make_operator(
        apply=apply,
        sigma_inverse_bound=INTEGRAL_SIGMA_INVERSE,
        dim=N,
        ball_radius=math.inf,
        derivative_apply=derivative_apply,
        name=f"integral_arctan3_N{N}",
        metadata={"kernel": "exp(-|x-y|)", "quadrature": "trapezoid"},
    )

    u_exact = exact_solution(N, midpoint_value)
    f_exact = operator.apply(u_exact)
    logger.debug(f"Built integral problem with N={N}, ||f||={np.linalg.norm(f_exact):.6g}")

    return IntegralProblem(
        N=N,
        x=x,
        weights=weights,
        kernel_matrix=K,
        u_exact=u_exact,
        f_exact=f_exact,
        operator=operator,
        sigma_inverse_bound=INTEGRAL_SIGMA_INVERSE,
        kind="integral",
    )


def build_linear_spd_problem(N: int, decay: float = 2.0, midpoint_value: float = 1.0) -> IntegralProblem:
    """
    Diagonal testbed with eigenvalues (i + 1)^(-decay).

    Regularized solutions are (Lambda + a I)^{-1} f_delta in closed form,
    which makes this the reference problem for lemma verification.
    """
    if N < 2:
        raise DimensionError(f"Linear problem needs N >= 2, got N={N}")
    if not decay > 0:
        raise ConfigError(f"Spectrum decay must be positive, got {decay}")

    eigenvalues = (np.arange(N, dtype=np.float64) + 1.0) ** (-decay)
    operator = make_linear_spd(eigenvalues)
    u_exact = exact_solution(N, midpoint_value)

    return IntegralProblem(
        N=N,
        x=uniform_grid(N),
        weights=trapezoid_weights(N),
        kernel_matrix=np.diag(eigenvalues),
        u_exact=u_exact,
        f_exact=operator.apply(u_exact),
        operator=operator,
        sigma_inverse_bound=operator.sigma_inverse_bound,
        kind="linear_spd",
    )


def build_problem(kind: str, N: int, spectrum_decay: float = 2.0, midpoint_value: float = 1.0) -> IntegralProblem:
    """Dispatch on the configured problem kind."""
    if kind == "integral":
        return build_integral_problem(N, midpoint_value)
    if kind == "linear_spd":
        return build_linear_spd_problem(N, spectrum_decay, midpoint_value)
    raise ConfigError(f"Unknown problem kind '{kind}' (expected 'integral' or 'linear_spd')")


def parse_noise_model(value: Union[str, NoiseModel]) -> NoiseModel:
    if isinstance(value, NoiseModel):
        return value
    try:
        return NoiseModel(str(value).strip().lower())
    except ValueError as e:
        raise ConfigError(f"Unknown noise model '{value}' (expected 'gaussian' or 'sinusoid')") from e


def make_noise(
    f: np.ndarray,
    model: NoiseModel,
    delta_rel: float,
    seed: Optional[int] = 0,
    mode: NormMode = NormMode.EUCLIDEAN,
) -> Tuple[np.ndarray, NoiseSpec]:
    """
    Perturb exact data to a prescribed relative noise level.

    f_delta = f + kappa * f_noise with kappa = delta_rel ||f|| / ||f_noise||,
    so ||f_delta - f|| = delta_rel ||f||. Gaussian draws come from a PCG64
    generator; a zero-norm draw is replaced by a draw with the next seed.

    Args:
        f: Exact data, nonzero
        model: Gaussian or sinusoid noise
        delta_rel: Relative noise level, positive
        seed: Seed of the Gaussian generator (ignored for sinusoid noise)
        mode: Norm in which the noise level is measured

    Returns:
        Tuple of f_delta and the NoiseSpec describing the perturbation

    Raises:
        ConfigError: If f is zero or delta_rel is not positive
    """
    f = as_grid_function(f, min_points=2)
    f_norm = norm(f, mode)
    if f_norm == 0.0:
        raise ConfigError("Exact data f must be nonzero to calibrate relative noise")
    if not (delta_rel > 0 and math.isfinite(delta_rel)):
        raise ConfigError(f"delta_rel must be positive, got {delta_rel}")

    redraws = 0
    if model == NoiseModel.SINUSOID:
        f_noise = np.sin(SINUSOID_FREQUENCY * uniform_grid(f.size))
        if norm(f_noise, mode) == 0.0:
            raise ConfigError("Sinusoid noise vanishes on this grid")
    else:
        draw_seed = 0 if seed is None else int(seed)
        f_noise = np.random.Generator(np.random.PCG64(draw_seed)).standard_normal(f.size)
        while norm(f_noise, mode) == 0.0:
            redraws += 1
            if redraws > MAX_NOISE_REDRAWS:
                raise ConfigError("Gaussian noise generator kept producing zero vectors")
            logger.warning(f"Zero-norm noise draw for seed {draw_seed}; redrawing with seed {draw_seed + 1}")
            draw_seed += 1
            f_noise = np.random.Generator(np.random.PCG64(draw_seed)).standard_normal(f.size)

    delta = delta_rel * f_norm
    kappa = delta / norm(f_noise, mode)
    f_delta = f + kappa * f_noise

    spec = NoiseSpec(
        model=model,
        delta_rel=float(delta_rel),
        delta=float(delta),
        kappa=float(kappa),
        seed=seed if model == NoiseModel.GAUSSIAN else None,
        redraws=redraws,
    )
    return f_delta, spec


def relative_error(u: np.ndarray, u_exact: np.ndarray, mode: NormMode = NormMode.EUCLIDEAN) -> float:
    """||u - u_exact|| / ||u_exact||."""
    reference = norm(u_exact, mode)
    if reference == 0.0:
        raise DimensionError("Reference solution has zero norm")
    return norm(np.asarray(u) - np.asarray(u_exact), mode) / reference
