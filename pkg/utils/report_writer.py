"""
CSV and text report writers.

All CSV files use a header row, commas, LF line endings and repr()
formatted floats, so identical inputs give byte-identical files.
"""

import csv
import logging
from pathlib import Path
from typing import Any, Dict, Iterable, List, Mapping, Optional, Sequence, Union

import numpy as np
import pandas as pd

from core.models import LemmaReport, RunReport, ScheduleCertificate, ScheduleParams, TabulatedSchedule
from utils.vector_io import format_float

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]

TRACE_COLUMNS = ["n", "a_n", "gamma_n", "discrepancy", "psi", "u_norm"]
PROFILE_COLUMNS = ["x", "u_exact", "u_final"]
LEMMA_COLUMNS = ["name", "n_range", "max_violation", "tolerance", "pass", "status"]
TABLE1_COLUMNS = ["delta_rel", "seed", "n_delta", "rel_error", "runtime_ms", "status"]
SUMMARY_COLUMNS = [
    "delta_rel", "median_n_delta", "median_rel_error",
    "paper_n_delta", "paper_rel_error", "runs", "failures",
]

# Reference medians (n_delta, rel_error) of the published Gaussian-noise sweep
PAPER_TABLE1 = {
    0.05: (5, 0.166),
    0.03: (6, 0.111),
    0.02: (8, 0.108),
    0.01: (13, 0.076),
    0.003: (39, 0.065),
    0.001: (104, 0.045),
}


def _cell(value: Any) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        if np.isnan(value):
            return ""
        return format_float(value)
    return str(value)


def write_csv(path: PathLike, columns: Sequence[str], rows: Iterable[Sequence[Any]]) -> None:
    """Write rows under a header with the toolkit's CSV dialect."""
    with open(path, "w", encoding="utf-8", newline="") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(columns)
        for row in rows:
            writer.writerow([_cell(value) for value in row])
    logger.debug(f"Wrote {path}")


def write_trace_csv(path: PathLike, report: RunReport) -> None:
    rows = zip(
        range(len(report.discrepancy_trace)),
        report.a_trace,
        report.gamma_trace,
        report.discrepancy_trace,
        report.residual_trace,
        report.u_norm_trace,
    )
    write_csv(path, TRACE_COLUMNS, rows)


def write_profile_csv(path: PathLike, x: np.ndarray, u_exact: np.ndarray, u_final: np.ndarray) -> None:
    """Plot-ready samples of the exact and the computed solution."""
    write_csv(path, PROFILE_COLUMNS, zip(x, u_exact, u_final))


def write_lemmas_csv(path: PathLike, report: LemmaReport) -> None:
    rows = (
        (r.name, f"{r.n_range[0]}-{r.n_range[1]}", r.max_violation, r.tolerance, r.passed, r.status)
        for r in report.records
    )
    write_csv(path, LEMMA_COLUMNS, rows)


def _write_lines(path: PathLike, lines: List[str]) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as handle:
        handle.write("".join(f"{line}\n" for line in lines))
    logger.debug(f"Wrote {path}")


def certificate_lines(certificate: ScheduleCertificate) -> List[str]:
    lines = [
        f"eqsxa_ok = {_cell(certificate.eqsxa_ok)}",
        f"theorem3_ok = {_cell(certificate.theorem3_ok)}",
        f"remark36_ok = {_cell(certificate.remark36_ok)}",
        f"sampled = {_cell(certificate.sampled)}",
    ]
    lines.extend(f"message = {message}" for message in certificate.messages)
    return lines


def write_certificate_txt(
    path: PathLike,
    schedule: Union[ScheduleParams, TabulatedSchedule],
    certificate: ScheduleCertificate,
) -> None:
    """Schedule parameters followed by the admissibility flags."""
    if isinstance(schedule, ScheduleParams):
        lines = [
            f"d = {format_float(schedule.d)}",
            f"c = {format_float(schedule.c)}",
            f"b = {format_float(schedule.b)}",
            f"h = {format_float(schedule.h)}",
        ]
    else:
        lines = [f"values = {len(schedule.values)}", f"h = {format_float(schedule.h)}"]
    lines.append(f"a0 = {format_float(schedule.a0)}")
    _write_lines(path, lines + certificate_lines(certificate))


def write_report_txt(path: PathLike, report: RunReport, extra: Optional[Mapping[str, Any]] = None) -> None:
    """Human-readable run summary as ``key = value`` lines."""
    lines = [
        f"n_delta = {'not reached' if report.n_delta is None else report.n_delta}",
        f"stop_reason = {report.stop_reason.value}",
        f"iterations = {report.iterations}",
        f"delta = {format_float(report.delta)}",
        f"threshold = {format_float(report.threshold)}",
        f"final_discrepancy = {_cell(report.discrepancy_trace[-1] if report.discrepancy_trace else None)}",
        f"rel_error = {_cell(report.rel_error)}",
        f"max_u_norm = {format_float(report.max_u_norm)}",
        f"ball_exceeded = {_cell(report.ball_exceeded)}",
        f"theorem3_start_ok = {_cell(report.theorem3_start_ok)}",
        f"convergence_claim = {report.convergence_claim}",
    ]
    for key, value in (extra or {}).items():
        lines.append(f"{key} = {_cell(value)}")
    if report.certificate_echo is not None:
        lines.extend(certificate_lines(report.certificate_echo))
    _write_lines(path, lines)


def write_table1_csv(path: PathLike, rows: Sequence[Dict[str, Any]]) -> None:
    write_csv(path, TABLE1_COLUMNS, ([row.get(column) for column in TABLE1_COLUMNS] for row in rows))


def summarize_table1(rows: Sequence[Dict[str, Any]]) -> pd.DataFrame:
    """
    Median n_delta and rel_error per delta_rel over successful rows.

    The frame keeps the sweep's delta_rel order and carries the published
    reference medians where one exists.
    """
    frame = pd.DataFrame(list(rows), columns=TABLE1_COLUMNS)
    order = list(dict.fromkeys(frame["delta_rel"]))
    ok = frame[frame["status"] == "ok"].astype({"n_delta": float, "rel_error": float})
    medians = ok.groupby("delta_rel", sort=False)[["n_delta", "rel_error"]].median()
    counts = frame.groupby("delta_rel", sort=False).size()
    failures = frame[frame["status"] != "ok"].groupby("delta_rel", sort=False).size()

    summary = []
    for delta_rel in order:
        paper = PAPER_TABLE1.get(delta_rel)
        has_median = delta_rel in medians.index
        summary.append({
            "delta_rel": delta_rel,
            "median_n_delta": float(medians.loc[delta_rel, "n_delta"]) if has_median else None,
            "median_rel_error": float(medians.loc[delta_rel, "rel_error"]) if has_median else None,
            "paper_n_delta": paper[0] if paper else None,
            "paper_rel_error": paper[1] if paper else None,
            "runs": int(counts.get(delta_rel, 0)),
            "failures": int(failures.get(delta_rel, 0)),
        })
    return pd.DataFrame(summary, columns=SUMMARY_COLUMNS, dtype=object)


def write_table1_summary(path: PathLike, summary: pd.DataFrame) -> None:
    rows = (
        [None if pd.isna(value) else value for value in record]
        for record in summary[SUMMARY_COLUMNS].itertuples(index=False, name=None)
    )
    write_csv(path, SUMMARY_COLUMNS, rows)
