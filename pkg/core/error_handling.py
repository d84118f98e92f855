"""
Error Handling Module

This module provides the exception hierarchy, centralized error handling,
logging and graceful degradation for the iterative regularization toolkit.
"""

import json
import logging
import os
import traceback
import uuid
from dataclasses import dataclass, field
from datetime import datetime
from enum import Enum
from functools import wraps
from typing import Any, Callable, Dict, List, Optional


class ErrorSeverity(Enum):
    """Error severity levels for classification and handling."""
    LOW = "low"
    MEDIUM = "medium"
    HIGH = "high"
    CRITICAL = "critical"


class ErrorCategory(Enum):
    """Categories of errors for better handling and reporting."""
    DIMENSION_ERROR = "dimension_error"
    INVALID_OPERATOR = "invalid_operator"
    INVALID_SCHEDULE = "invalid_schedule"
    CONFIGURATION_ERROR = "configuration_error"
    DIVERGENCE = "divergence"
    NON_CONVERGENCE = "non_convergence"
    UNSUPPORTED_OPERATION = "unsupported_operation"
    OPERATOR_EVALUATION = "operator_evaluation"
    IO_ERROR = "io_error"
    SYSTEM_ERROR = "system_error"


class IterRegError(Exception):
    """Base class of all toolkit errors."""
    error_category = ErrorCategory.SYSTEM_ERROR


class DimensionError(IterRegError):
    """Grid functions of mismatched length or with non-finite entries."""
    error_category = ErrorCategory.DIMENSION_ERROR


class InvalidOperatorError(IterRegError):
    """Operator construction with inadmissible spectral data or bounds."""
    error_category = ErrorCategory.INVALID_OPERATOR


class InvalidScheduleError(IterRegError):
    """Schedule parameters that cannot satisfy the admissibility conditions."""
    error_category = ErrorCategory.INVALID_SCHEDULE


class ConfigError(IterRegError):
    """Invalid run configuration."""
    error_category = ErrorCategory.CONFIGURATION_ERROR


class StepBoundError(ConfigError):
    """Step size outside h <= gamma_n <= 2 / (sigma^{-1} + 2 a_n)."""


class UnsupportedOperationError(IterRegError):
    """Operation requires a capability the operator does not provide."""
    error_category = ErrorCategory.UNSUPPORTED_OPERATION


class OperatorEvaluationError(IterRegError):
    """Operator evaluation failed while sampling."""
    error_category = ErrorCategory.OPERATOR_EVALUATION

    def __init__(self, message: str, sample_index: int):
        super().__init__(message)
        self.sample_index = sample_index


class DivergenceError(IterRegError):
    """An iterate became non-finite."""
    error_category = ErrorCategory.DIVERGENCE

    def __init__(self, message: str, n: int, u_norm: float, partial_report: Any = None):
        super().__init__(message)
        self.n = n
        self.u_norm = u_norm
        self.partial_report = partial_report


class NonConvergenceError(IterRegError):
    """A fixed-point or oracle iteration hit its iteration cap."""
    error_category = ErrorCategory.NON_CONVERGENCE

    def __init__(self, message: str, last_residual: float, a: Optional[float] = None,
                 iterations: int = 0):
        super().__init__(message)
        self.last_residual = last_residual
        self.a = a
        self.iterations = iterations


@dataclass
class ErrorContext:
    """Context information for error handling and reporting."""
    error_id: str
    timestamp: datetime
    category: ErrorCategory
    severity: ErrorSeverity
    component: str
    operation: str
    original_exception: Optional[Exception] = None
    user_message: str = ""
    technical_details: str = ""
    recovery_suggestions: List[str] = field(default_factory=list)
    metadata: Dict[str, Any] = field(default_factory=dict)


class ErrorHandler:
    """
    Centralized error handler with error processing, user-facing
    messages and per-category bookkeeping.
    """

    def __init__(self, log_file: Optional[str] = None):
        """
        Initialize error handler with logging configuration.

        Args:
            log_file: Optional log file path for error logging
        """
        self.logger = self._setup_logging(log_file)
        self.error_history: List[ErrorContext] = []
        self.error_counts: Dict[str, int] = {}

    def _setup_logging(self, log_file: Optional[str] = None) -> logging.Logger:
        """Set up logging for error handling."""
        logger = logging.getLogger("IterReg.ErrorHandler")
        logger.setLevel(logging.INFO)

        if logger.handlers:
            return logger

        console_handler = logging.StreamHandler()
        console_handler.setLevel(logging.WARNING)
        console_handler.setFormatter(logging.Formatter(
            '%(asctime)s - %(name)s - %(levelname)s - %(message)s'
        ))
        logger.addHandler(console_handler)
        logger.propagate = False

        if log_file:
            try:
                directory = os.path.dirname(log_file)
                if directory:
                    os.makedirs(directory, exist_ok=True)
                file_handler = logging.FileHandler(log_file)
                file_handler.setLevel(logging.INFO)
                file_handler.setFormatter(logging.Formatter(
                    '%(asctime)s - %(name)s - %(levelname)s - %(funcName)s:%(lineno)d - %(message)s'
                ))
                logger.addHandler(file_handler)
            except OSError as e:
                logger.warning(f"Failed to set up file logging: {e}")

        return logger

    def handle_error(
        self,
        exception: Exception,
        category: ErrorCategory,
        severity: ErrorSeverity,
        component: str,
        operation: str,
        user_message: str = "",
        recovery_suggestions: Optional[List[str]] = None,
        metadata: Optional[Dict[str, Any]] = None
    ) -> ErrorContext:
        """
        Handle an error with processing and logging.

        Args:
            exception: The original exception
            category: Error category for classification
            severity: Error severity level
            component: Component where error occurred
            operation: Operation being performed when error occurred
            user_message: User-facing error message
            recovery_suggestions: List of recovery suggestions
            metadata: Additional metadata for error context

        Returns:
            ErrorContext: Processed error context
        """
        error_context = ErrorContext(
            error_id=self._generate_error_id(),
            timestamp=datetime.now(),
            category=category,
            severity=severity,
            component=component,
            operation=operation,
            original_exception=exception,
            user_message=user_message or self._generate_user_message(exception, category),
            technical_details=self._extract_technical_details(exception),
            recovery_suggestions=recovery_suggestions or self._get_recovery_suggestions(category),
            metadata=metadata or {}
        )

        self._log_error(error_context)
        self.error_history.append(error_context)

        error_key = f"{category.value}:{component}"
        self.error_counts[error_key] = self.error_counts.get(error_key, 0) + 1

        return error_context

    def _generate_error_id(self) -> str:
        """Generate unique error ID for tracking."""
        return str(uuid.uuid4())[:8]

    def _generate_user_message(self, exception: Exception, category: ErrorCategory) -> str:
        """Generate a readable error message based on exception and category."""
        user_messages = {
            ErrorCategory.DIMENSION_ERROR: "Grid functions do not match in length or contain non-finite values.",
            ErrorCategory.INVALID_OPERATOR: "The operator definition is not admissible.",
            ErrorCategory.INVALID_SCHEDULE: "The regularization schedule violates its admissibility conditions.",
            ErrorCategory.CONFIGURATION_ERROR: "Run configuration is invalid.",
            ErrorCategory.DIVERGENCE: "The iteration diverged.",
            ErrorCategory.NON_CONVERGENCE: "An inner iteration did not reach its tolerance.",
            ErrorCategory.UNSUPPORTED_OPERATION: "The operator does not support this operation.",
            ErrorCategory.OPERATOR_EVALUATION: "Evaluating the operator failed.",
            ErrorCategory.IO_ERROR: "Reading or writing a data file failed.",
            ErrorCategory.SYSTEM_ERROR: "An unexpected error occurred.",
        }

        base_message = user_messages.get(category, "An unexpected error occurred.")
        detail = str(exception)
        return f"{base_message} {detail}" if detail else base_message

    def _extract_technical_details(self, exception: Exception) -> str:
        """Extract technical details from exception for logging and debugging."""
        details = {
            "exception_type": type(exception).__name__,
            "exception_message": str(exception),
            "traceback": traceback.format_exc()
        }

        for attribute in ("n", "u_norm", "last_residual", "a", "iterations", "sample_index"):
            if hasattr(exception, attribute):
                value = getattr(exception, attribute)
                details[attribute] = value if isinstance(value, (int, float, type(None))) else str(value)

        return json.dumps(details, indent=2, default=str)

    def _get_recovery_suggestions(self, category: ErrorCategory) -> List[str]:
        """Get recovery suggestions based on error category."""
        suggestions = {
            ErrorCategory.CONFIGURATION_ERROR: [
                "Check the configuration keys and value ranges",
                "Check the step size against 2 / (sigma^{-1} + 2 a_0)",
            ],
            ErrorCategory.INVALID_SCHEDULE: [
                "Use b in (0, 1), c >= 1 and d > 0",
            ],
            ErrorCategory.DIVERGENCE: [
                "Reduce the step size gamma",
                "Check the sigma-inverse bound of the operator",
            ],
            ErrorCategory.NON_CONVERGENCE: [
                "Loosen the tolerance or raise the iteration cap",
                "Use the damped Newton oracle for small a",
            ],
            ErrorCategory.UNSUPPORTED_OPERATION: [
                "Provide derivative_apply when building the operator",
            ],
        }

        return suggestions.get(category, ["Check the input data and try again"])

    def _log_error(self, error_context: ErrorContext) -> None:
        """Log error with appropriate level and formatting."""
        log_message = (
            f"[{error_context.error_id}] {error_context.component}.{error_context.operation} - "
            f"{error_context.category.value} ({error_context.severity.value}): "
            f"{error_context.user_message}"
        )

        if error_context.severity == ErrorSeverity.CRITICAL:
            self.logger.critical(log_message)
            self.logger.critical(f"Technical details: {error_context.technical_details}")
        elif error_context.severity == ErrorSeverity.HIGH:
            self.logger.error(log_message)
            self.logger.debug(f"Technical details: {error_context.technical_details}")
        elif error_context.severity == ErrorSeverity.MEDIUM:
            self.logger.warning(log_message)
            self.logger.debug(f"Technical details: {error_context.technical_details}")
        else:
            self.logger.info(log_message)

    def get_error_summary(self) -> Dict[str, Any]:
        """Get summary of error statistics."""
        total_errors = len(self.error_history)
        if total_errors == 0:
            return {"total_errors": 0, "message": "No errors recorded"}

        category_counts: Dict[str, int] = {}
        severity_counts: Dict[str, int] = {}
        component_counts: Dict[str, int] = {}

        for error in self.error_history:
            category_counts[error.category.value] = category_counts.get(error.category.value, 0) + 1
            severity_counts[error.severity.value] = severity_counts.get(error.severity.value, 0) + 1
            component_counts[error.component] = component_counts.get(error.component, 0) + 1

        return {
            "total_errors": total_errors,
            "by_category": category_counts,
            "by_severity": severity_counts,
            "by_component": component_counts,
            "most_recent": self.error_history[-1].timestamp.isoformat()
        }


class GracefulDegradation:
    """
    Keeps batch work alive when individual units fail.

    A component registers a fallback that turns the failure into a
    recorded result; the fallback receives the original arguments plus the
    exception as ``error``.
    """

    def __init__(self, error_handler: ErrorHandler):
        """
        Initialize graceful degradation handler.

        Args:
            error_handler: Error handler for logging and processing
        """
        self.error_handler = error_handler
        self.fallback_strategies: Dict[str, Callable] = {}
        self.component_status: Dict[str, List[bool]] = {}

    def register_fallback(self, component: str, fallback_func: Callable) -> None:
        """
        Register a fallback strategy for a component.

        Args:
            component: Component name
            fallback_func: Fallback function to use when component fails
        """
        self.fallback_strategies[component] = fallback_func
        self.error_handler.logger.debug(f"Registered fallback strategy for {component}")

    def execute_with_fallback(self, component: str, primary_func: Callable, *args, **kwargs) -> Any:
        """
        Execute function with fallback strategy if primary fails.

        Args:
            component: Component name
            primary_func: Primary function to execute
            *args: Function arguments
            **kwargs: Function keyword arguments

        Returns:
            Result from primary function or fallback
        """
        try:
            result = primary_func(*args, **kwargs)
            self.component_status.setdefault(component, []).append(True)
            return result
        except Exception as e:
            self.component_status.setdefault(component, []).append(False)
            category = getattr(e, "error_category", ErrorCategory.SYSTEM_ERROR)
            self.error_handler.handle_error(
                exception=e,
                category=category,
                severity=ErrorSeverity.MEDIUM,
                component=component,
                operation="primary_execution",
            )

            if component not in self.fallback_strategies:
                self.error_handler.logger.error(f"No fallback strategy available for {component}")
                raise

            return self.fallback_strategies[component](*args, error=e, **kwargs)

    def get_health(self) -> Dict[str, Any]:
        """Summarize successes and failures per component."""
        summary = {}
        for component, outcomes in self.component_status.items():
            succeeded = sum(1 for ok in outcomes if ok)
            summary[component] = {
                "total": len(outcomes),
                "succeeded": succeeded,
                "failed": len(outcomes) - succeeded,
                "degraded": succeeded < len(outcomes),
            }
        return summary


_global_error_handler: Optional[ErrorHandler] = None


def get_error_handler() -> ErrorHandler:
    """Get or create global error handler instance."""
    global _global_error_handler
    if _global_error_handler is None:
        log_file = os.getenv("ITERREG_LOG_FILE") or None
        _global_error_handler = ErrorHandler(log_file)
    return _global_error_handler


def handle_numerical_error(component: str) -> Callable:
    """Decorator recording toolkit errors of a numerical entry point before re-raising."""
    def decorator(func: Callable) -> Callable:
        @wraps(func)
        def wrapper(*args, **kwargs):
            try:
                return func(*args, **kwargs)
            except IterRegError as e:
                severity = (ErrorSeverity.MEDIUM if isinstance(e, ConfigError)
                            else ErrorSeverity.HIGH)
                e.error_context = get_error_handler().handle_error(
                    exception=e,
                    category=e.error_category,
                    severity=severity,
                    component=component,
                    operation=func.__name__,
                )
                raise
        return wrapper
    return decorator
