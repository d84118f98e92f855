"""
Configuration management for the iterative regularization toolkit.

Run configurations are flat text files of ``dotted.key = value`` lines.
Every key has a default; unknown and duplicated keys are rejected.
Ambient keys (output directory, logging) can also be set through the
environment or a ``.env`` file.
"""

import logging
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable, Dict, List, Mapping, Optional, Tuple

from dotenv import load_dotenv

from core.error_handling import ConfigError
from core.grid import parse_norm_mode
from core.models import GammaRule, NoiseModel, NormMode, SolveMethod, SolverConfig, U0Source
from core.problems import parse_noise_model

# Load environment variables from .env file if it exists
load_dotenv()

logger = logging.getLogger(__name__)

ENVIRONMENT_KEYS = {
    "ITERREG_OUTPUT_DIR": "output.dir",
    "ITERREG_LOG_LEVEL": "logging.level",
    "ITERREG_LOG_FILE": "logging.file",
}

LOG_LEVELS = {"DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL"}
PROBLEM_KINDS = {"integral", "linear_spd"}
DATA_SOURCES = {"noisy", "exact", "at_zero"}


@dataclass
class ValidationResult:
    """Result of configuration validation."""
    is_valid: bool
    error_message: Optional[str] = None


def _parse_bool(text: str) -> bool:
    value = text.strip().lower()
    if value in {"true", "yes", "on", "1"}:
        return True
    if value in {"false", "no", "off", "0"}:
        return False
    raise ValueError(f"expected a boolean, got '{text}'")


def _parse_int_list(text: str) -> List[int]:
    """Comma-separated integers; ``a..b`` expands to the inclusive range."""
    values: List[int] = []
    for item in text.split(","):
        item = item.strip()
        if not item:
            continue
        if ".." in item:
            start, stop = item.split("..", 1)
            values.extend(range(int(start), int(stop) + 1))
        else:
            values.append(int(item))
    return values


def _parse_float_list(text: str) -> List[float]:
    return [float(item) for item in text.split(",") if item.strip()]


def _parse_optional_float(text: str) -> Optional[float]:
    text = text.strip()
    return None if text == "" else float(text)


def _parse_str(text: str) -> str:
    return text.strip()


# key -> (parser, default)
CONFIG_SCHEMA: Dict[str, Tuple[Callable[[str], Any], Any]] = {
    "schedule.d": (float, 0.1),
    "schedule.c": (float, 5.0),
    "schedule.b": (float, 0.99),
    "schedule.h": (float, 1.0),
    "schedule.a0": (_parse_optional_float, None),
    "stop.C": (float, 1.01),
    "stop.zeta": (float, 0.99),
    "stop.theta": (float, 1.0),
    "solver.max_iter": (int, 100_000),
    "solver.gamma": (_parse_str, "h"),
    "solver.gamma_cap": (float, 1.0),
    "solver.u0": (_parse_str, "zero"),
    "solver.shift": (_parse_str, ""),
    "solver.norm": (_parse_str, "euclidean"),
    "solver.record_iterates": (_parse_bool, False),
    "problem.kind": (_parse_str, "integral"),
    "problem.N": (int, 100),
    "problem.noise": (_parse_str, "gaussian"),
    "problem.delta_rel": (float, 0.01),
    "problem.seed": (int, 0),
    "problem.spectrum_decay": (float, 2.0),
    "problem.midpoint_value": (float, 1.0),
    "problem.data": (_parse_str, "noisy"),
    "oracle.tol": (float, 1e-11),
    "oracle.check_tol": (float, 1e-8),
    "oracle.method": (_parse_str, "contraction"),
    "verify.n_max": (int, 200),
    "output.dir": (_parse_str, "./out"),
    "output.timing": (_parse_bool, False),
    "experiment.seeds": (_parse_int_list, list(range(10))),
    "experiment.delta_rels": (_parse_float_list, [0.05, 0.03, 0.02, 0.01, 0.003, 0.001]),
    "experiment.workers": (int, 1),
    "logging.level": (_parse_str, "INFO"),
    "logging.file": (_parse_str, ""),
}

DEFAULT_CONFIG: Dict[str, Any] = {key: default for key, (_, default) in CONFIG_SCHEMA.items()}


@dataclass
class RunConfig:
    """Typed run configuration; one attribute per configuration key."""
    schedule_d: float
    schedule_c: float
    schedule_b: float
    schedule_h: float
    stop_C: float
    stop_zeta: float
    stop_theta: float
    solver_max_iter: int
    solver_gamma: str
    solver_gamma_cap: float
    solver_u0: str
    solver_shift: str
    solver_norm: str
    solver_record_iterates: bool
    problem_kind: str
    problem_N: int
    problem_noise: str
    problem_delta_rel: float
    problem_seed: int
    problem_spectrum_decay: float
    problem_midpoint_value: float
    problem_data: str
    oracle_tol: float
    oracle_check_tol: float
    oracle_method: str
    verify_n_max: int
    output_dir: str
    output_timing: bool
    experiment_seeds: List[int]
    experiment_delta_rels: List[float]
    experiment_workers: int
    logging_level: str
    logging_file: str
    schedule_a0: Optional[float] = None
    source_path: Optional[str] = None
    explicit_keys: List[str] = field(default_factory=list)

    @property
    def norm_mode(self) -> NormMode:
        return parse_norm_mode(self.solver_norm)

    @property
    def noise_model(self) -> NoiseModel:
        return parse_noise_model(self.problem_noise)

    @property
    def solve_method(self) -> SolveMethod:
        return SolveMethod(self.oracle_method.lower())

    def gamma_setting(self) -> Tuple[GammaRule, Optional[float]]:
        """Resolve solver.gamma into a rule and an optional constant step."""
        text = self.solver_gamma.strip().lower()
        if text == "auto":
            return GammaRule.CAPPED_ADAPTIVE, None
        if text in {"h", ""}:
            return GammaRule.CONSTANT_H, None
        return GammaRule.CONSTANT_H, float(text)

    def resolve_path(self, value: str) -> Path:
        """Interpret a file value relative to the configuration file."""
        path = Path(value)
        if not path.is_absolute() and self.source_path:
            path = Path(self.source_path).parent / path
        return path

    def as_dict(self) -> Dict[str, Any]:
        """Dotted-key view of the configuration."""
        return {key: getattr(self, _attribute(key)) for key in CONFIG_SCHEMA}


def _attribute(key: str) -> str:
    return key.replace(".", "_")


def parse_config_text(text: str, source: str = "<config>") -> Dict[str, Any]:
    """
    Parse flat ``key = value`` text into typed values.

    Raises:
        ConfigError: On malformed lines, unknown or duplicate keys, or bad values
    """
    values: Dict[str, Any] = {}
    for line_number, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{source}:{line_number}: expected 'key = value', got '{raw.strip()}'")
        key, value = (part.strip() for part in line.split("=", 1))
        if key not in CONFIG_SCHEMA:
            raise ConfigError(f"{source}:{line_number}: unknown configuration key '{key}'")
        if key in values:
            raise ConfigError(f"{source}:{line_number}: duplicate configuration key '{key}'")
        values[key] = _coerce(key, value, f"{source}:{line_number}")
    return values


def _coerce(key: str, value: Any, where: str) -> Any:
    parser, _ = CONFIG_SCHEMA[key]
    if not isinstance(value, str):
        return value
    try:
        return parser(value)
    except ValueError as e:
        raise ConfigError(f"{where}: invalid value for '{key}': {e}") from e


def load_configuration(
    config_path: Optional[str] = None,
    overrides: Optional[Mapping[str, Any]] = None,
    environ: Optional[Mapping[str, str]] = None,
) -> RunConfig:
    """
    Load a run configuration.

    Precedence: overrides > environment > file > defaults.

    Args:
        config_path: Path of the flat configuration file (defaults only when None)
        overrides: Dotted keys set on the command line
        environ: Environment mapping; os.environ when None

    Returns:
        RunConfig: Loaded configuration object

    Raises:
        ConfigError: If the file is unreadable or contains invalid entries
    """
    values = dict(DEFAULT_CONFIG)
    explicit: List[str] = []

    if config_path is not None:
        try:
            text = Path(config_path).read_text(encoding="utf-8")
        except OSError as e:
            raise ConfigError(f"Cannot read configuration file {config_path}: {e}") from e
        file_values = parse_config_text(text, source=str(config_path))
        values.update(file_values)
        explicit.extend(file_values)

    env = os.environ if environ is None else environ
    for variable, key in ENVIRONMENT_KEYS.items():
        if env.get(variable):
            values[key] = _coerce(key, env[variable], variable)

    for key, value in (overrides or {}).items():
        if key not in CONFIG_SCHEMA:
            raise ConfigError(f"Unknown configuration key '{key}'")
        values[key] = _coerce(key, value, "override")
        if key not in explicit:
            explicit.append(key)

    if values["schedule.a0"] is not None:
        if "schedule.d" in explicit:
            raise ConfigError("Set either schedule.d or schedule.a0, not both")
        values["schedule.d"] = values["schedule.a0"] * values["schedule.c"] ** values["schedule.b"]

    config = RunConfig(
        **{_attribute(key): value for key, value in values.items()},
        source_path=str(config_path) if config_path is not None else None,
        explicit_keys=explicit,
    )
    logger.debug(f"Loaded configuration from {config_path or 'defaults'}")
    return config


def validate_configuration(config: RunConfig) -> ValidationResult:
    """
    Validate ranges and choices of a run configuration.

    Args:
        config: Configuration object to validate

    Returns:
        ValidationResult: Validation result with success status and error details
    """
    # Schedule
    if not config.schedule_d > 0:
        return ValidationResult(False, f"schedule.d must be positive, got {config.schedule_d}")
    if not config.schedule_c >= 1:
        return ValidationResult(False, f"schedule.c must be at least 1, got {config.schedule_c}")
    if not 0 < config.schedule_b < 1:
        return ValidationResult(False, f"schedule.b must lie in (0, 1), got {config.schedule_b}")
    if not config.schedule_h > 0:
        return ValidationResult(False, f"schedule.h must be positive, got {config.schedule_h}")

    # Stopping rule
    if not config.stop_C > 1:
        return ValidationResult(False, f"stop.C must exceed 1, got {config.stop_C}")
    if not 0 < config.stop_zeta <= 1:
        return ValidationResult(False, f"stop.zeta must lie in (0, 1], got {config.stop_zeta}")
    if not 0 < config.stop_theta < config.stop_C:
        return ValidationResult(False, f"stop.theta must lie in (0, stop.C), got {config.stop_theta}")

    # Solver
    if config.solver_max_iter < 0:
        return ValidationResult(False, f"solver.max_iter must be nonnegative, got {config.solver_max_iter}")
    try:
        _, gamma = config.gamma_setting()
    except ValueError:
        return ValidationResult(False, f"solver.gamma must be 'h', 'auto' or a decimal, got '{config.solver_gamma}'")
    if gamma is not None and not gamma > 0:
        return ValidationResult(False, f"solver.gamma must be positive, got {gamma}")
    if not config.solver_gamma_cap > 0:
        return ValidationResult(False, f"solver.gamma_cap must be positive, got {config.solver_gamma_cap}")
    try:
        config.norm_mode
    except ConfigError as e:
        return ValidationResult(False, f"solver.norm: {e}")
    if not config.solver_u0:
        return ValidationResult(False, "solver.u0 must be 'zero', 'fixed_point' or a vector file path")

    # Problem
    if config.problem_kind not in PROBLEM_KINDS:
        return ValidationResult(False, f"problem.kind must be one of {sorted(PROBLEM_KINDS)}, got '{config.problem_kind}'")
    if config.problem_N < 2:
        return ValidationResult(False, f"problem.N must be at least 2, got {config.problem_N}")
    try:
        config.noise_model
    except ConfigError as e:
        return ValidationResult(False, f"problem.noise: {e}")
    if not 0 < config.problem_delta_rel < 1:
        return ValidationResult(False, f"problem.delta_rel must lie in (0, 1), got {config.problem_delta_rel}")
    if config.problem_data not in DATA_SOURCES:
        return ValidationResult(False, f"problem.data must be one of {sorted(DATA_SOURCES)}, got '{config.problem_data}'")
    if not config.problem_spectrum_decay > 0:
        return ValidationResult(False, f"problem.spectrum_decay must be positive, got {config.problem_spectrum_decay}")

    # Oracle and verification
    if not config.oracle_tol > 0 or not config.oracle_check_tol > 0:
        return ValidationResult(False, "oracle.tol and oracle.check_tol must be positive")
    if config.oracle_method.lower() not in {m.value for m in SolveMethod}:
        return ValidationResult(False, f"oracle.method must be 'contraction' or 'newton', got '{config.oracle_method}'")
    if config.verify_n_max < 0:
        return ValidationResult(False, f"verify.n_max must be nonnegative, got {config.verify_n_max}")

    # Experiment sweep
    if not config.experiment_seeds:
        return ValidationResult(False, "experiment.seeds must not be empty")
    if not config.experiment_delta_rels:
        return ValidationResult(False, "experiment.delta_rels must not be empty")
    for delta_rel in config.experiment_delta_rels:
        if not 0 < delta_rel < 1:
            return ValidationResult(False, f"experiment.delta_rels entries must lie in (0, 1), got {delta_rel}")
    if config.experiment_workers < 1:
        return ValidationResult(False, f"experiment.workers must be at least 1, got {config.experiment_workers}")

    if config.logging_level.upper() not in LOG_LEVELS:
        return ValidationResult(False, f"logging.level must be one of {sorted(LOG_LEVELS)}, got '{config.logging_level}'")

    return ValidationResult(is_valid=True)


def build_solver_config(
    config: RunConfig,
    u0: Optional[Any] = None,
    shift: Optional[Any] = None,
) -> SolverConfig:
    """
    Translate a RunConfig into the solver's configuration.

    ``solver.u0`` other than 'zero' and 'fixed_point' is a vector file;
    the caller passes the loaded vectors in.
    """
    rule, gamma = config.gamma_setting()
    u0_key = config.solver_u0.lower()
    if u0_key == "zero":
        source = U0Source.ZERO
    elif u0_key == "fixed_point":
        source = U0Source.FIXED_POINT
    else:
        source = U0Source.GIVEN

    return SolverConfig(
        C=config.stop_C,
        zeta=config.stop_zeta,
        theta=config.stop_theta,
        gamma_rule=rule,
        gamma=gamma,
        gamma_cap=config.solver_gamma_cap,
        max_iter=config.solver_max_iter,
        u0_source=source,
        u0=u0,
        shift=shift,
        norm_mode=config.norm_mode,
        record_iterates=config.solver_record_iterates,
    )
