"""
Test suite for error handling, graceful degradation and run monitoring.

This test suite validates the exception hierarchy, the centralized error
handler, fallback handling for sweeps and the per-run health monitor.
"""

import math
import os
import tempfile

import pytest

from core.error_handling import (
    ConfigError,
    DivergenceError,
    ErrorCategory,
    ErrorHandler,
    ErrorSeverity,
    GracefulDegradation,
    IterRegError,
    NonConvergenceError,
    StepBoundError,
    get_error_handler,
    handle_numerical_error,
)
from core.monitoring import RunHealth, RunMonitor


class TestExceptionHierarchy:
    """Test cases for the toolkit exceptions."""

    def test_step_bound_error_is_config_error(self):
        """Step-bound violations are configuration errors."""
        error = StepBoundError("gamma too large")
        assert isinstance(error, ConfigError)
        assert isinstance(error, IterRegError)
        assert error.error_category == ErrorCategory.CONFIGURATION_ERROR

    def test_divergence_error_carries_state(self):
        """Divergence errors carry the step index and iterate norm."""
        error = DivergenceError("boom", n=7, u_norm=1e300)
        assert error.n == 7
        assert error.u_norm == 1e300
        assert error.partial_report is None
        assert error.error_category == ErrorCategory.DIVERGENCE

    def test_non_convergence_error_carries_residual(self):
        """Non-convergence errors carry the last residual and a."""
        error = NonConvergenceError("cap reached", last_residual=1e-3, a=0.5, iterations=10)
        assert error.last_residual == 1e-3
        assert error.a == 0.5
        assert error.iterations == 10


class TestErrorHandler:
    """Test cases for the ErrorHandler class."""

    def test_error_handler_initialization(self):
        """Test error handler initializes correctly."""
        with tempfile.NamedTemporaryFile(delete=False) as temp_log:
            handler = ErrorHandler(temp_log.name)
            assert handler is not None
            assert len(handler.error_history) == 0
            assert len(handler.error_counts) == 0

        os.unlink(temp_log.name)

    def test_handle_error_basic(self):
        """Test basic error handling functionality."""
        handler = ErrorHandler()

        test_exception = ConfigError("stop.C must exceed 1")
        error_context = handler.handle_error(
            exception=test_exception,
            category=ErrorCategory.CONFIGURATION_ERROR,
            severity=ErrorSeverity.MEDIUM,
            component="test_component",
            operation="test_operation"
        )

        assert error_context.category == ErrorCategory.CONFIGURATION_ERROR
        assert error_context.severity == ErrorSeverity.MEDIUM
        assert error_context.component == "test_component"
        assert error_context.operation == "test_operation"
        assert error_context.original_exception == test_exception
        assert len(handler.error_history) == 1

    def test_error_counting(self):
        """Test error counting functionality."""
        handler = ErrorHandler()

        for i in range(3):
            handler.handle_error(
                exception=ValueError(f"Error {i}"),
                category=ErrorCategory.DIMENSION_ERROR,
                severity=ErrorSeverity.LOW,
                component="test_component",
                operation="test_operation"
            )

        assert handler.error_counts["dimension_error:test_component"] == 3

    def test_user_message_generation(self):
        """Test automatic user message generation."""
        handler = ErrorHandler()

        error_context = handler.handle_error(
            exception=DivergenceError("u_12 is not finite", n=12, u_norm=math.inf),
            category=ErrorCategory.DIVERGENCE,
            severity=ErrorSeverity.HIGH,
            component="solver",
            operation="run"
        )

        assert "diverged" in error_context.user_message.lower()
        assert "u_12 is not finite" in error_context.user_message
        assert '"n": 12' in error_context.technical_details
        assert error_context.recovery_suggestions

    def test_error_summary(self):
        """Test error summary generation."""
        handler = ErrorHandler()

        handler.handle_error(
            ValueError("Error 1"), ErrorCategory.INVALID_SCHEDULE,
            ErrorSeverity.LOW, "comp1", "op1"
        )
        handler.handle_error(
            ValueError("Error 2"), ErrorCategory.NON_CONVERGENCE,
            ErrorSeverity.MEDIUM, "comp2", "op2"
        )

        summary = handler.get_error_summary()
        assert summary["total_errors"] == 2
        assert summary["by_category"]["invalid_schedule"] == 1
        assert summary["by_category"]["non_convergence"] == 1

    def test_empty_summary(self):
        """Test summary without recorded errors."""
        assert ErrorHandler().get_error_summary()["total_errors"] == 0


class TestHandleNumericalError:
    """Test cases for the handle_numerical_error decorator."""

    def test_attaches_context_and_reraises(self):
        """Toolkit errors are recorded and re-raised with their context."""
        @handle_numerical_error("test_component")
        def failing():
            raise NonConvergenceError("cap", last_residual=1.0, a=0.1)

        with pytest.raises(NonConvergenceError) as info:
            failing()

        context = info.value.error_context
        assert context.component == "test_component"
        assert context.operation == "failing"
        assert context.category == ErrorCategory.NON_CONVERGENCE
        assert context.severity == ErrorSeverity.HIGH

    def test_passes_other_exceptions_untouched(self):
        """Non-toolkit exceptions are not recorded."""
        @handle_numerical_error("test_component")
        def failing():
            raise KeyError("x")

        with pytest.raises(KeyError) as info:
            failing()
        assert not hasattr(info.value, "error_context")

    def test_global_handler_is_shared(self):
        """get_error_handler returns one instance."""
        assert get_error_handler() is get_error_handler()


class TestGracefulDegradation:
    """Test cases for graceful degradation functionality."""

    def test_successful_primary_function(self):
        """Test successful execution of primary function."""
        degradation = GracefulDegradation(ErrorHandler())

        result = degradation.execute_with_fallback("row", lambda x: x * 2, 21)
        assert result == 42
        assert degradation.get_health()["row"]["failed"] == 0

    def test_fallback_receives_error(self):
        """Test fallback execution when primary fails."""
        degradation = GracefulDegradation(ErrorHandler())

        def primary(delta_rel, seed):
            raise DivergenceError("diverged", n=3, u_norm=1e308)

        def fallback(delta_rel, seed, error=None):
            return {"delta_rel": delta_rel, "seed": seed, "status": f"error:{type(error).__name__}"}

        degradation.register_fallback("row", fallback)
        result = degradation.execute_with_fallback("row", primary, 0.01, 4)

        assert result == {"delta_rel": 0.01, "seed": 4, "status": "error:DivergenceError"}
        health = degradation.get_health()["row"]
        assert health["failed"] == 1
        assert health["degraded"] is True

    def test_no_fallback_available(self):
        """Test behavior when no fallback is registered."""
        degradation = GracefulDegradation(ErrorHandler())

        def primary():
            raise ConfigError("bad")

        with pytest.raises(ConfigError):
            degradation.execute_with_fallback("unregistered", primary)


class TestRunMonitor:
    """Test cases for the RunMonitor class."""

    def test_unknown_before_start(self):
        """A monitor that never started reports unknown health."""
        assert RunMonitor().get_health() == RunHealth.UNKNOWN

    def test_healthy_run(self):
        """Decreasing discrepancy inside the ball is healthy."""
        monitor = RunMonitor(ball_radius=10.0)
        monitor.start()
        for n, discrepancy in enumerate([1.0, 0.5, 0.25]):
            monitor.observe(n, 1.0 + n, discrepancy)
        runtime = monitor.stop()

        assert runtime >= 0.0
        assert monitor.get_health() == RunHealth.HEALTHY
        assert monitor.observation.max_u_norm == 3.0
        assert not monitor.ball_exceeded

    def test_ball_excursion(self):
        """Leaving the certified ball degrades health and records the step."""
        monitor = RunMonitor(ball_radius=2.0)
        monitor.start()
        monitor.observe(0, 1.0, 1.0)
        monitor.observe(1, 3.0, 0.5)
        monitor.observe(2, 4.0, 0.4)

        assert monitor.ball_exceeded
        assert monitor.observation.first_excursion == 1
        assert monitor.get_health() == RunHealth.DEGRADED

    def test_stagnation_warning(self):
        """A discrepancy that stops decreasing triggers a warning per window."""
        monitor = RunMonitor(stagnation_window=5)
        monitor.start()
        for n in range(16):
            monitor.observe(n, 1.0, 1.0)

        assert monitor.observation.stagnation_warnings == [5, 10, 15]
        assert monitor.get_summary()["stagnation_warnings"] == 3
