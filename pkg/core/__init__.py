"""Core components of the iterative regularization toolkit."""

from .models import (
    GammaRule,
    IntegralProblem,
    LemmaRecord,
    LemmaReport,
    NoiseModel,
    NoiseSpec,
    NormMode,
    OperatorHandle,
    RegularizedSolution,
    RunReport,
    ScheduleCertificate,
    ScheduleParams,
    SigmaCheckReport,
    SolveMethod,
    SolverConfig,
    StopReason,
    TabulatedSchedule,
    U0Source,
)
from .error_handling import (
    ConfigError,
    DimensionError,
    DivergenceError,
    InvalidOperatorError,
    InvalidScheduleError,
    IterRegError,
    NonConvergenceError,
    OperatorEvaluationError,
    StepBoundError,
    UnsupportedOperationError,
)
from .grid import inner, norm, trapezoid_weights, uniform_grid
from .operators import check_sigma_inverse, derivative_finite_difference_check, make_linear_spd
from .schedule import a_at, gamma_max, make_power_schedule, phi
from .solver import check_theorem3_start, fixed_point_initializer, run, step
from .oracle import minimal_norm_estimate, regularized_path, solve_regularized, verify_lemma_suite
from .problems import build_integral_problem, exact_solution, make_noise

__all__ = [
    'GammaRule',
    'IntegralProblem',
    'LemmaRecord',
    'LemmaReport',
    'NoiseModel',
    'NoiseSpec',
    'NormMode',
    'OperatorHandle',
    'RegularizedSolution',
    'RunReport',
    'ScheduleCertificate',
    'ScheduleParams',
    'SigmaCheckReport',
    'SolveMethod',
    'SolverConfig',
    'StopReason',
    'TabulatedSchedule',
    'U0Source',
    'ConfigError',
    'DimensionError',
    'DivergenceError',
    'InvalidOperatorError',
    'InvalidScheduleError',
    'IterRegError',
    'NonConvergenceError',
    'OperatorEvaluationError',
    'StepBoundError',
    'UnsupportedOperationError',
    'inner',
    'norm',
    'trapezoid_weights',
    'uniform_grid',
    'check_sigma_inverse',
    'derivative_finite_difference_check',
    'make_linear_spd',
    'a_at',
    'gamma_max',
    'make_power_schedule',
    'phi',
    'check_theorem3_start',
    'fixed_point_initializer',
    'run',
    'step',
    'minimal_norm_estimate',
    'regularized_path',
    'solve_regularized',
    'verify_lemma_suite',
    'build_integral_problem',
    'exact_solution',
    'make_noise',
]
