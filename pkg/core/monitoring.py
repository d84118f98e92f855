"""
Run Monitoring Module

Tracks the health of a single solver run: wall-clock time, excursions of
the iterates outside the ball on which the operator bound is certified,
and stagnation of the discrepancy.
"""

import logging
import math
import time
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Dict, List, Optional


class RunHealth(Enum):
    """Health status of a solver run."""
    HEALTHY = "healthy"
    DEGRADED = "degraded"
    CRITICAL = "critical"
    UNKNOWN = "unknown"


@dataclass
class RunObservation:
    """Findings collected while a run progresses."""
    max_u_norm: float = 0.0
    first_excursion: Optional[int] = None
    stagnation_warnings: List[int] = field(default_factory=list)
    runtime_ms: float = 0.0
    metadata: Dict[str, Any] = field(default_factory=dict)


class RunMonitor:
    """
    Observes one solver run.

    The monitor never stops a run; it logs warnings and exposes what it
    saw so the solver can put it into the RunReport.
    """

    def __init__(self, ball_radius: float = math.inf, stagnation_window: int = 500, name: str = "run"):
        """
        Initialize run monitor.

        Args:
            ball_radius: Radius on which the operator bound holds
            stagnation_window: Iterations without discrepancy decrease that trigger a warning
            name: Label used in log messages
        """
        self.logger = logging.getLogger(self.__class__.__name__)
        self.ball_radius = ball_radius
        self.stagnation_window = max(1, int(stagnation_window))
        self.name = name
        self.observation = RunObservation()

        self._start: Optional[float] = None
        self._best_discrepancy = math.inf
        self._best_index = 0

    def start(self) -> None:
        self._start = time.perf_counter()

    def stop(self) -> float:
        """Stop the clock and return the elapsed time in milliseconds."""
        if self._start is not None:
            self.observation.runtime_ms = (time.perf_counter() - self._start) * 1000.0
        return self.observation.runtime_ms

    def observe(self, n: int, u_norm: float, discrepancy: float) -> None:
        """Record iterate norm and discrepancy of step n."""
        if u_norm > self.observation.max_u_norm:
            self.observation.max_u_norm = u_norm
        if u_norm > self.ball_radius and self.observation.first_excursion is None:
            self.observation.first_excursion = n
            self.logger.warning(
                f"{self.name}: ||u_{n}|| = {u_norm:.6g} left the ball of radius {self.ball_radius:.6g} "
                f"on which the operator bound is certified"
            )

        if discrepancy < self._best_discrepancy:
            self._best_discrepancy = discrepancy
            self._best_index = n
        elif n - self._best_index >= self.stagnation_window and (n - self._best_index) % self.stagnation_window == 0:
            self.observation.stagnation_warnings.append(n)
            self.logger.warning(
                f"{self.name}: discrepancy has not decreased for {n - self._best_index} iterations "
                f"(best {self._best_discrepancy:.6g} at n={self._best_index})"
            )

    @property
    def ball_exceeded(self) -> bool:
        return self.observation.first_excursion is not None

    def get_health(self) -> RunHealth:
        """Overall health of the observed run."""
        if self._start is None:
            return RunHealth.UNKNOWN
        if not math.isfinite(self.observation.max_u_norm):
            return RunHealth.CRITICAL
        if self.ball_exceeded or self.observation.stagnation_warnings:
            return RunHealth.DEGRADED
        return RunHealth.HEALTHY

    def get_summary(self) -> Dict[str, Any]:
        return {
            "name": self.name,
            "health": self.get_health().value,
            "runtime_ms": self.observation.runtime_ms,
            "max_u_norm": self.observation.max_u_norm,
            "first_excursion": self.observation.first_excursion,
            "stagnation_warnings": len(self.observation.stagnation_warnings),
        }
