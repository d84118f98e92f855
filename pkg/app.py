"""
Iterative Regularization Toolkit - Command-Line Entry Point

Subcommands:
    solve    one regularized iteration with discrepancy-principle stopping
    table1   sweep of noise levels and seeds with median summary
    verify   oracle-based verification of the path inequalities

Exit statuses follow the subcommand documentation in ``build_parser``.
"""

import argparse
import logging
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np

from config.settings import RunConfig, build_solver_config, load_configuration, validate_configuration
from core import oracle, solver
from core.error_handling import (
    ConfigError,
    DimensionError,
    DivergenceError,
    GracefulDegradation,
    InvalidOperatorError,
    InvalidScheduleError,
    NonConvergenceError,
    get_error_handler,
)
from core.grid import norm
from core.models import (
    IntegralProblem,
    NoiseSpec,
    RunReport,
    ScheduleCertificate,
    ScheduleParams,
    SolverConfig,
    StopReason,
)
from core.problems import build_problem, make_noise
from core.schedule import a_at, make_power_schedule
from utils.report_writer import (
    summarize_table1,
    write_certificate_txt,
    write_lemmas_csv,
    write_profile_csv,
    write_report_txt,
    write_table1_csv,
    write_table1_summary,
    write_trace_csv,
)
from utils.vector_io import read_vector, write_vector

logger = logging.getLogger("iterreg")

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_NOT_REACHED = 2
EXIT_NUMERICAL = 3

LARGE_A_VALUES = (10.0, 1e2, 1e3, 1e4)

SETUP_ERRORS = (ConfigError, InvalidScheduleError, InvalidOperatorError, DimensionError, OSError)


@dataclass
class Experiment:
    """Everything a run needs, built once from the configuration."""
    config: RunConfig
    problem: IntegralProblem
    schedule: ScheduleParams
    certificate: ScheduleCertificate
    solver_config: SolverConfig
    f_delta: np.ndarray
    noise: Optional[NoiseSpec]
    delta: float


def _configure_logging(config: RunConfig) -> None:
    level = getattr(logging, config.logging_level.upper(), logging.INFO)
    logging.basicConfig(
        level=level,
        format='%(asctime)s - %(name)s - %(levelname)s - %(message)s',
        stream=sys.stderr,
    )
    root = logging.getLogger()
    root.setLevel(level)
    if config.logging_file and not any(
        isinstance(h, logging.FileHandler) and h.baseFilename == str(Path(config.logging_file).resolve())
        for h in root.handlers
    ):
        handler = logging.FileHandler(config.logging_file)
        handler.setFormatter(logging.Formatter(
            '%(asctime)s - %(name)s - %(levelname)s - %(funcName)s:%(lineno)d - %(message)s'
        ))
        root.addHandler(handler)


def _load(args: argparse.Namespace) -> RunConfig:
    """Load, override and validate the configuration named on the command line."""
    overrides: Dict[str, Any] = {}
    if args.out is not None:
        overrides["output.dir"] = args.out
    if args.seed is not None:
        overrides["problem.seed"] = args.seed
        overrides["experiment.seeds"] = [args.seed]

    config = load_configuration(args.config, overrides)
    validation = validate_configuration(config)
    if not validation.is_valid:
        raise ConfigError(validation.error_message)
    _configure_logging(config)
    Path(config.output_dir).mkdir(parents=True, exist_ok=True)
    return config


def _load_optional_vector(config: RunConfig, value: str, length: int) -> Optional[np.ndarray]:
    if value.lower() in {"", "zero", "fixed_point"}:
        return None
    return read_vector(config.resolve_path(value), expected_length=length)


def _data(config: RunConfig, problem: IntegralProblem, delta_rel: float, seed: int) -> Tuple[np.ndarray, Optional[NoiseSpec], float]:
    """Right-hand side per problem.data: noisy, exact, or F(0)."""
    if config.problem_data == "exact":
        return problem.f_exact.copy(), None, 0.0
    if config.problem_data == "at_zero":
        return problem.operator.apply(np.zeros(problem.N)), None, 0.0
    f_delta, noise = make_noise(problem.f_exact, config.noise_model, delta_rel, seed, config.norm_mode)
    return f_delta, noise, noise.delta


def _prepare(config: RunConfig, delta_rel: Optional[float] = None, seed: Optional[int] = None,
             problem: Optional[IntegralProblem] = None) -> Experiment:
    if problem is None:
        problem = build_problem(
            config.problem_kind, config.problem_N, config.problem_spectrum_decay, config.problem_midpoint_value
        )
    schedule, certificate = make_power_schedule(
        config.schedule_d, config.schedule_c, config.schedule_b, config.schedule_h
    )
    solver_config = build_solver_config(
        config,
        u0=_load_optional_vector(config, config.solver_u0, problem.N),
        shift=_load_optional_vector(config, config.solver_shift, problem.N),
    )
    f_delta, noise, delta = _data(
        config,
        problem,
        config.problem_delta_rel if delta_rel is None else delta_rel,
        config.problem_seed if seed is None else seed,
    )
    return Experiment(config, problem, schedule, certificate, solver_config, f_delta, noise, delta)


def _v0_norm(experiment: Experiment) -> Optional[float]:
    """||V_0|| at a_0 for the second start test; None when the oracle does not converge."""
    config = experiment.config
    try:
        solution = oracle.solve_regularized(
            experiment.problem.operator,
            a_at(experiment.schedule, 0),
            experiment.f_delta,
            config.oracle_tol,
            config.solve_method,
            mode=config.norm_mode,
        )
    except NonConvergenceError as e:
        logger.warning(f"Could not compute ||V_0||: {e}")
        return None
    return norm(solution.V, config.norm_mode)


def _run(experiment: Experiment, V0_norm: Optional[float] = None) -> RunReport:
    return solver.run(
        experiment.problem.operator,
        experiment.f_delta,
        experiment.delta,
        experiment.schedule,
        experiment.solver_config,
        certificate=experiment.certificate,
        u_exact=experiment.problem.u_exact,
        V0_norm=V0_norm,
    )


def _write_solve_outputs(out_dir: Path, experiment: Experiment, report: RunReport,
                         V0_norm: Optional[float] = None) -> None:
    config = experiment.config
    write_trace_csv(out_dir / "trace.csv", report)
    write_vector(out_dir / "final.txt", report.final_iterate)
    write_profile_csv(out_dir / "profile.csv", experiment.problem.x, experiment.problem.u_exact, report.final_iterate)

    extra: Dict[str, Any] = {
        "problem_kind": experiment.problem.kind,
        "N": experiment.problem.N,
        "norm": config.norm_mode.value,
    }
    if experiment.noise is not None:
        extra.update({
            "noise": experiment.noise.model.value,
            "delta_rel": experiment.noise.delta_rel,
            "kappa": experiment.noise.kappa,
            "seed": experiment.noise.seed,
            "noise_redraws": experiment.noise.redraws,
        })
    extra["V0_norm"] = V0_norm
    if config.output_timing:
        extra["runtime_ms"] = report.runtime_ms
    write_report_txt(out_dir / "report.txt", report, extra)


def cmd_solve(args: argparse.Namespace) -> int:
    """
    Single solve.

    Returns:
        int: 0 on a discrepancy stop, 2 on max_iter, 1 on configuration
        errors, 3 on divergence or a failed fixed-point start
    """
    try:
        config = _load(args)
        experiment = _prepare(config)
    except SETUP_ERRORS as e:
        logger.error(f"Configuration error: {e}")
        return EXIT_CONFIG

    out_dir = Path(config.output_dir)
    V0_norm = _v0_norm(experiment)
    try:
        report = _run(experiment, V0_norm)
    except DivergenceError as e:
        logger.error(f"Iteration diverged at n={e.n} with ||u|| = {e.u_norm:.6g}")
        if e.partial_report is not None and e.partial_report.discrepancy_trace:
            write_trace_csv(out_dir / "trace.csv", e.partial_report)
        return EXIT_NUMERICAL
    except NonConvergenceError as e:
        logger.error(f"Numerical failure: {e}")
        return EXIT_NUMERICAL
    except SETUP_ERRORS as e:
        logger.error(f"Configuration error: {e}")
        return EXIT_CONFIG

    _write_solve_outputs(out_dir, experiment, report, V0_norm)
    if report.stop_reason == StopReason.DISCREPANCY:
        logger.info(f"n_delta = {report.n_delta}, rel_error = {report.rel_error:.6g}")
        return EXIT_OK
    logger.warning(f"Discrepancy principle not met within {config.solver_max_iter} iterations")
    return EXIT_NOT_REACHED


def _table1_row(config: RunConfig, problem: IntegralProblem, delta_rel: float, seed: int) -> Dict[str, Any]:
    experiment = _prepare(config, delta_rel, seed, problem)
    report = _run(experiment)
    return {
        "delta_rel": delta_rel,
        "seed": seed,
        "n_delta": report.n_delta,
        "rel_error": report.rel_error,
        "runtime_ms": report.runtime_ms if config.output_timing else 0,
        "status": "ok" if report.stopped_by_discrepancy() else "max_iter",
        "experiment": experiment,
        "report": report,
    }


def _table1_failed_row(config: RunConfig, problem: IntegralProblem, delta_rel: float, seed: int,
                       error: Optional[Exception] = None) -> Dict[str, Any]:
    reason = type(error).__name__ if error is not None else "unknown"
    return {
        "delta_rel": delta_rel,
        "seed": seed,
        "n_delta": None,
        "rel_error": None,
        "runtime_ms": 0,
        "status": f"error:{reason}",
    }


def cmd_table1(args: argparse.Namespace) -> int:
    """
    Noise-level sweep.

    Failed rows are recorded with an ``error:<reason>`` status and the
    sweep continues.

    Returns:
        int: 0 when the sweep completed, 1 on configuration errors
    """
    try:
        config = _load(args)
        problem = build_problem(
            config.problem_kind, config.problem_N, config.problem_spectrum_decay, config.problem_midpoint_value
        )
        # fail fast on configuration problems shared by every row
        _prepare(config, config.experiment_delta_rels[0], config.experiment_seeds[0], problem)
    except SETUP_ERRORS as e:
        logger.error(f"Configuration error: {e}")
        return EXIT_CONFIG

    degradation = GracefulDegradation(get_error_handler())
    degradation.register_fallback("table1_row", _table1_failed_row)

    tasks: List[Tuple[float, int]] = [
        (delta_rel, seed) for delta_rel in config.experiment_delta_rels for seed in config.experiment_seeds
    ]

    def run_task(task: Tuple[float, int]) -> Dict[str, Any]:
        delta_rel, seed = task
        return degradation.execute_with_fallback("table1_row", _table1_row, config, problem, delta_rel, seed)

    if config.experiment_workers > 1:
        with ThreadPoolExecutor(max_workers=config.experiment_workers) as pool:
            rows = list(pool.map(run_task, tasks))
    else:
        rows = [run_task(task) for task in tasks]

    out_dir = Path(config.output_dir)
    write_table1_csv(out_dir / "table1.csv", rows)
    summary = summarize_table1(rows)
    write_table1_summary(out_dir / "table1_summary.csv", summary)

    if len(rows) == 1 and "report" in rows[0]:
        _write_solve_outputs(out_dir, rows[0]["experiment"], rows[0]["report"])

    health = degradation.get_health().get("table1_row", {})
    logger.info(
        f"Sweep finished: {len(rows)} runs, {health.get('failed', 0)} failed; "
        f"results in {out_dir / 'table1.csv'}"
    )
    for record in summary.to_dict("records"):
        logger.info(
            f"delta_rel={record['delta_rel']}: median n_delta={record['median_n_delta']}, "
            f"median rel_error={record['median_rel_error']} "
            f"(reference {record['paper_n_delta']}, {record['paper_rel_error']})"
        )
    return EXIT_OK


def cmd_verify(args: argparse.Namespace) -> int:
    """
    Lemma verification along the regularization path.

    Returns:
        int: 0 when every asserted row passes, 2 when one fails,
        1 on configuration errors, 3 when the oracle does not converge
    """
    try:
        config = _load(args)
        experiment = _prepare(config)
    except SETUP_ERRORS as e:
        logger.error(f"Configuration error: {e}")
        return EXIT_CONFIG

    out_dir = Path(config.output_dir)
    write_certificate_txt(out_dir / "schedule_certificate.txt", experiment.schedule, experiment.certificate)

    problem = experiment.problem
    op = problem.operator
    mode = config.norm_mode
    y_norm = norm(problem.u_exact, mode)

    try:
        report = oracle.verify_lemma_suite(
            op,
            experiment.schedule,
            experiment.f_delta,
            experiment.delta,
            y_norm,
            config.verify_n_max,
            config.oracle_tol,
            check_tol=config.oracle_check_tol,
            method=config.solve_method,
            mode=mode,
            certificate=experiment.certificate,
        )
        zero_residual = norm(op.apply(np.zeros(problem.N)) - experiment.f_delta, mode)
        trend = oracle.large_a_trend(
            op, experiment.f_delta, LARGE_A_VALUES, config.oracle_tol, mode, config.solve_method
        )
        for record in oracle.check_large_a_trend(trend, zero_residual, config.oracle_tol, config.oracle_check_tol):
            report.add(record)
        if config.problem_data == "noisy":
            a_values = sorted({a_at(experiment.schedule, n) for n in (0, config.verify_n_max // 2, config.verify_n_max)},
                              reverse=True)
            perturbation = oracle.perturbation_bound_check(
                op, problem.f_exact, experiment.f_delta, experiment.delta, a_values,
                config.oracle_tol, y_norm=y_norm, check_tol=config.oracle_check_tol, mode=mode,
                method=config.solve_method,
            )
            for record in perturbation.records:
                report.add(record)
    except NonConvergenceError as e:
        logger.error(f"Oracle did not converge at a = {e.a}: {e}")
        return EXIT_NUMERICAL

    write_lemmas_csv(out_dir / "lemmas.csv", report)
    failures = report.failures()
    if failures:
        for record in failures:
            logger.error(f"{record.name}: max violation {record.max_violation:.3e} > {record.tolerance:.1e}")
        return EXIT_NOT_REACHED
    logger.info(f"All asserted inequalities hold; results in {out_dir / 'lemmas.csv'}")
    return EXIT_OK


COMMANDS = {
    "solve": cmd_solve,
    "table1": cmd_table1,
    "verify": cmd_verify,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="iterreg",
        description="Derivative-free iterative regularization with discrepancy-principle stopping.",
    )
    subparsers = parser.add_subparsers(dest="command", required=True)
    descriptions = {
        "solve": "Run one solve (exit 0 discrepancy stop, 2 max_iter, 1 config error, 3 divergence).",
        "table1": "Sweep noise levels and seeds; write table1.csv and a median summary.",
        "verify": "Verify the path inequalities (exit 0 pass, 2 failure, 1 config error, 3 oracle failure).",
    }
    for name, description in descriptions.items():
        sub = subparsers.add_parser(name, help=description, description=description)
        sub.add_argument("--config", required=True, help="Path to the flat key = value configuration file.")
        sub.add_argument("--out", default=None, help="Output directory (overrides output.dir).")
        sub.add_argument("--seed", type=int, default=None,
                         help="Noise seed (overrides problem.seed and experiment.seeds).")
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    """Parse arguments and dispatch to the subcommand."""
    args = build_parser().parse_args(argv)
    return COMMANDS[args.command](args)


if __name__ == "__main__":
    sys.exit(main())
