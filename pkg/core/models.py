"""
Data models for the iterative regularization toolkit.

This module contains the core data structures used throughout the toolkit
for representing operators, regularization schedules, solver configuration,
run traces, oracle solutions and verification reports.
"""

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Callable, Dict, List, Optional, Tuple

import numpy as np


class NormMode(Enum):
    """Inner-product convention on grid functions."""
    EUCLIDEAN = "euclidean"
    TRAPEZOID = "trapezoid"


class StopReason(Enum):
    """Why a solver run ended."""
    DISCREPANCY = "discrepancy"
    MAX_ITER = "max_iter"


class U0Source(Enum):
    """Where the initial iterate comes from."""
    ZERO = "zero"
    GIVEN = "given"
    FIXED_POINT = "fixed_point"


class GammaRule(Enum):
    """Step-size rule for gamma_n."""
    CONSTANT_H = "constant"
    CAPPED_ADAPTIVE = "auto"


class NoiseModel(Enum):
    """Synthetic noise families for the integral-equation testbed."""
    GAUSSIAN = "gaussian"
    SINUSOID = "sinusoid"


class SolveMethod(Enum):
    """Solvers available to the oracle for the regularized equation."""
    CONTRACTION = "contraction"
    NEWTON = "newton"


@dataclass(frozen=True)
class OperatorHandle:
    """
    Evaluable nonlinear map on grid functions.

    The handle carries an upper bound on sigma_R^{-1} valid on the ball
    B(0, ball_radius); ``math.inf`` as radius means the bound is global.
    ``derivative_apply(u, h)`` returns the action of F'(u) on h when known.
    """
    apply: Callable[[np.ndarray], np.ndarray]
    sigma_inverse_bound: float
    dim: int
    ball_radius: float = math.inf
    derivative_apply: Optional[Callable[[np.ndarray, np.ndarray], np.ndarray]] = None
    name: str = "operator"
    metadata: Dict[str, Any] = field(default_factory=dict)

    def __call__(self, u: np.ndarray) -> np.ndarray:
        return self.apply(u)

    def has_derivative(self) -> bool:
        """Check if the derivative action is available."""
        return self.derivative_apply is not None


@dataclass
class SigmaCheckReport:
    """
    Result of sampling the sigma-inverse inequality on a ball.

    worst_margin is the raw minimum of <dF, du> - sigma ||dF||^2. A sample
    is a violation when its margin drops below -tolerance * (1 + ||dF||^2).
    """
    samples_tested: int
    violations: int
    worst_margin: float
    sigma: float
    radius: float
    tolerance: float
    violating_pairs: List[Tuple[np.ndarray, np.ndarray]] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return self.violations == 0


@dataclass(frozen=True)
class ScheduleParams:
    """Power-law regularization schedule a(t) = d / (c + t)^b with step h."""
    d: float
    c: float
    b: float
    h: float

    @property
    def a0(self) -> float:
        return self.d / self.c ** self.b


@dataclass(frozen=True)
class TabulatedSchedule:
    """User-supplied schedule values a_0, a_1, ... with step h."""
    values: Tuple[float, ...]
    h: float

    @property
    def a0(self) -> float:
        return self.values[0]


@dataclass
class ScheduleCertificate:
    """
    Admissibility flags of a regularization schedule.

    ``sampled`` is True when the flags were obtained from tabulated values
    rather than the closed-form power-law expressions.
    """
    eqsxa_ok: bool
    theorem3_ok: bool
    remark36_ok: bool
    messages: List[str] = field(default_factory=list)
    sampled: bool = False


@dataclass
class SolverConfig:
    """
    Configuration of a single solver run.

    ``gamma`` is the constant step under the constant rule (None means h);
    ``gamma_cap`` bounds the step under the capped-adaptive rule.
    """
    C: float = 1.01
    zeta: float = 0.99
    theta: float = 1.0
    gamma_rule: GammaRule = GammaRule.CONSTANT_H
    gamma: Optional[float] = None
    gamma_cap: float = 1.0
    max_iter: int = 100_000
    u0_source: U0Source = U0Source.ZERO
    u0: Optional[np.ndarray] = None
    shift: Optional[np.ndarray] = None
    norm_mode: NormMode = NormMode.EUCLIDEAN
    record_iterates: bool = False
    stagnation_window: int = 500

    def threshold(self, delta: float) -> float:
        """Discrepancy threshold C * delta^zeta."""
        return self.C * delta ** self.zeta


@dataclass
class RunReport:
    """
    Full trace of a solver run.

    Traces are indexed by n = 0..last, where last is n_delta for a
    discrepancy stop and max_iter otherwise.
    """
    n_delta: Optional[int]
    stop_reason: StopReason
    delta: float
    threshold: float
    discrepancy_trace: List[float]
    residual_trace: List[float]
    a_trace: List[float]
    gamma_trace: List[float]
    u_norm_trace: List[float]
    offset_norm_trace: List[float]
    final_iterate: np.ndarray
    certificate_echo: Optional[ScheduleCertificate] = None
    theorem3_start_ok: Optional[bool] = None
    rel_error: Optional[float] = None
    max_u_norm: float = 0.0
    ball_exceeded: bool = False
    convergence_claim: str = "solution"
    runtime_ms: float = 0.0
    iterates: Optional[List[np.ndarray]] = None

    @property
    def iterations(self) -> int:
        """Number of steps taken."""
        return len(self.discrepancy_trace) - 1

    def stopped_by_discrepancy(self) -> bool:
        return self.stop_reason == StopReason.DISCREPANCY


@dataclass
class RegularizedSolution:
    """Oracle solution V of F(V) + a V = f_delta."""
    a: float
    V: np.ndarray
    residual: float
    iterations: int
    tol: float
    method: SolveMethod = SolveMethod.CONTRACTION


@dataclass
class MinimalNormEstimate:
    """Estimate of the minimal-norm solution from a decreasing a-sequence."""
    estimate: np.ndarray
    a_values: List[float]
    gaps: List[float]
    cauchy_ok: bool


@dataclass
class LargeATrendPoint:
    """One sample of the large-a behaviour of the regularized solution."""
    a: float
    a_times_norm: float
    discrepancy: float


@dataclass
class LemmaRecord:
    """
    One verified inequality along the regularization path.

    ``status`` is "asserted", "recorded" (evaluated but not required to
    pass) or "skipped (hypothesis)".
    """
    name: str
    n_range: Tuple[int, int]
    max_violation: float
    tolerance: float
    passed: bool
    status: str = "asserted"


@dataclass
class LemmaReport:
    """Collection of lemma records for one verification run."""
    records: List[LemmaRecord] = field(default_factory=list)

    def add(self, record: LemmaRecord) -> None:
        self.records.append(record)

    def get(self, name: str) -> LemmaRecord:
        for record in self.records:
            if record.name == name:
                return record
        raise KeyError(name)

    def all_asserted_pass(self) -> bool:
        """Check if every asserted inequality passed."""
        return all(r.passed for r in self.records if r.status == "asserted")

    def failures(self) -> List[LemmaRecord]:
        return [r for r in self.records if r.status == "asserted" and not r.passed]


@dataclass
class IntegralProblem:
    """
    Discretized testbed problem F(u) = f on a uniform grid.

    ``kind`` is "integral" for the kernel-plus-arctan^3 operator and
    "linear_spd" for the diagonal closed-form testbed.
    """
    N: int
    x: np.ndarray
    weights: np.ndarray
    kernel_matrix: np.ndarray
    u_exact: np.ndarray
    f_exact: np.ndarray
    operator: OperatorHandle
    sigma_inverse_bound: float
    kind: str = "integral"


@dataclass
class NoiseSpec:
    """Calibrated noise: f_delta = f + kappa * f_noise."""
    model: NoiseModel
    delta_rel: float
    delta: float
    kappa: float
    seed: Optional[int] = None
    redraws: int = 0
