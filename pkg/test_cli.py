"""
End-to-end tests of the iterreg command line.
"""

import csv
from pathlib import Path

import pytest

from app import EXIT_CONFIG, EXIT_NOT_REACHED, EXIT_OK, main

CONFIG_DIR = Path(__file__).parent / "config"

SMALL_SOLVE = (
    "problem.N = 50\n"
    "problem.delta_rel = 0.05\n"
    "problem.seed = 3\n"
    "output.timing = false\n"
)


def write_config(tmp_path, text, name="run.conf"):
    path = tmp_path / name
    path.write_text(text, encoding="utf-8")
    return str(path)


def read_rows(path):
    with open(path, encoding="utf-8", newline="") as handle:
        return list(csv.DictReader(handle))


def read_report(path):
    entries = {}
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        key, _, value = line.partition(" = ")
        entries.setdefault(key, value)
    return entries


class TestSolve:
    """solve subcommand exit statuses and outputs."""

    def test_discrepancy_stop(self, tmp_path):
        out = tmp_path / "out"
        assert main(["solve", "--config", write_config(tmp_path, SMALL_SOLVE), "--out", str(out)]) == EXIT_OK

        report = read_report(out / "report.txt")
        assert report["stop_reason"] == "discrepancy"
        n_delta = int(report["n_delta"])
        assert n_delta >= 1
        assert "runtime_ms" not in report

        trace = read_rows(out / "trace.csv")
        assert len(trace) == n_delta + 1
        assert float(trace[-1]["discrepancy"]) <= float(report["threshold"])
        assert all(float(row["discrepancy"]) > float(report["threshold"]) for row in trace[:-1])
        assert len((out / "final.txt").read_text(encoding="utf-8").splitlines()) == 50
        assert (out / "profile.csv").exists()

    def test_iteration_cap(self, tmp_path):
        config = write_config(tmp_path, SMALL_SOLVE + "solver.max_iter = 0\n")
        out = tmp_path / "out"
        assert main(["solve", "--config", config, "--out", str(out)]) == EXIT_NOT_REACHED
        assert read_report(out / "report.txt")["n_delta"] == "not reached"
        assert len(read_rows(out / "trace.csv")) == 1

    def test_large_constant_stops_immediately(self, tmp_path):
        config = write_config(tmp_path, SMALL_SOLVE.replace("0.05", "0.5") + "stop.C = 10\n")
        out = tmp_path / "out"
        assert main(["solve", "--config", config, "--out", str(out)]) == EXIT_OK
        assert read_report(out / "report.txt")["n_delta"] == "0"
        assert len(read_rows(out / "trace.csv")) == 1

    def test_step_above_bound_is_config_error(self, tmp_path):
        config = write_config(tmp_path, SMALL_SOLVE + "solver.gamma = 1.5\n")
        assert main(["solve", "--config", config, "--out", str(tmp_path / "out")]) == EXIT_CONFIG

    @pytest.mark.parametrize("text", [
        "problem.size = 50\n",
        "stop.C = 0.5\n",
        "problem.data = exact\n",
    ])
    def test_configuration_errors(self, tmp_path, text):
        config = write_config(tmp_path, SMALL_SOLVE + text)
        assert main(["solve", "--config", config, "--out", str(tmp_path / "out")]) == EXIT_CONFIG

    def test_missing_config_file(self, tmp_path):
        assert main(["solve", "--config", str(tmp_path / "none.conf"), "--out", str(tmp_path)]) == EXIT_CONFIG

    def test_repeated_runs_are_byte_identical(self, tmp_path):
        config = write_config(tmp_path, SMALL_SOLVE)
        first, second = tmp_path / "first", tmp_path / "second"
        assert main(["solve", "--config", config, "--out", str(first)]) == EXIT_OK
        assert main(["solve", "--config", config, "--out", str(second)]) == EXIT_OK
        for name in ("trace.csv", "final.txt", "report.txt", "profile.csv"):
            assert (first / name).read_bytes() == (second / name).read_bytes(), name

    def test_seed_flag_overrides_file(self, tmp_path):
        config = write_config(tmp_path, SMALL_SOLVE)
        out = tmp_path / "out"
        assert main(["solve", "--config", config, "--out", str(out), "--seed", "11"]) == EXIT_OK
        assert read_report(out / "report.txt")["seed"] == "11"


class TestVerify:
    """verify subcommand on the closed-form testbed."""

    def test_linear_preset_passes(self, tmp_path):
        out = tmp_path / "verify"
        assert main(["verify", "--config", str(CONFIG_DIR / "verify_linear.conf"), "--out", str(out)]) == EXIT_OK

        rows = {row["name"]: row for row in read_rows(out / "lemmas.csv")}
        assert rows["residual_identity"]["pass"] == "true"
        assert rows["residual_identity"]["n_range"] == "0-100"
        assert rows["weighted_sum_bound"]["status"] == "recorded"
        assert "large_a_norm_bound" in rows
        assert "perturbation_bound" in rows

        certificate = read_report(out / "schedule_certificate.txt")
        assert certificate["theorem3_ok"] == "false"
        assert certificate["eqsxa_ok"] == "true"

    def test_data_at_zero_skips_monotonicity(self, tmp_path):
        text = (
            "problem.kind = linear_spd\n"
            "problem.N = 20\n"
            "problem.data = at_zero\n"
            "oracle.method = newton\n"
            "oracle.tol = 1e-12\n"
            "verify.n_max = 20\n"
        )
        out = tmp_path / "out"
        assert main(["verify", "--config", write_config(tmp_path, text), "--out", str(out)]) == EXIT_OK
        rows = {row["name"]: row for row in read_rows(out / "lemmas.csv")}
        assert rows["residual_decreasing"]["status"] == "skipped (hypothesis)"
        assert rows["norm_increasing"]["status"] == "skipped (hypothesis)"
        assert "perturbation_bound" not in rows


class TestTable1:
    """table1 subcommand."""

    def test_single_run_writes_solve_outputs(self, tmp_path):
        text = SMALL_SOLVE + "experiment.seeds = 0\nexperiment.delta_rels = 0.05\n"
        out = tmp_path / "out"
        assert main(["table1", "--config", write_config(tmp_path, text), "--out", str(out)]) == EXIT_OK

        rows = read_rows(out / "table1.csv")
        assert len(rows) == 1
        assert rows[0]["status"] == "ok"
        assert rows[0]["runtime_ms"] == "0"
        summary = read_rows(out / "table1_summary.csv")
        assert summary[0]["runs"] == "1"
        assert summary[0]["paper_n_delta"] == "5"
        assert float(summary[0]["median_n_delta"]) == float(rows[0]["n_delta"])
        assert len(read_rows(out / "trace.csv")) == int(rows[0]["n_delta"]) + 1

    def test_parallel_sweep_matches_serial(self, tmp_path):
        text = SMALL_SOLVE + "experiment.seeds = 0..2\nexperiment.delta_rels = 0.05, 0.02\n"
        serial, parallel = tmp_path / "serial", tmp_path / "parallel"
        config = write_config(tmp_path, text)
        assert main(["table1", "--config", config, "--out", str(serial)]) == EXIT_OK
        threaded = write_config(tmp_path, text + "experiment.workers = 3\n", name="threaded.conf")
        assert main(["table1", "--config", threaded, "--out", str(parallel)]) == EXIT_OK
        assert (serial / "table1.csv").read_bytes() == (parallel / "table1.csv").read_bytes()
        assert len(read_rows(serial / "table1.csv")) == 6
        assert not (serial / "trace.csv").exists()

    def test_default_sweep_reruns_are_byte_identical(self, tmp_path):
        text = "problem.N = 40\nexperiment.seeds = 0, 1\nexperiment.delta_rels = 0.05\n"
        config = write_config(tmp_path, text)
        first, second = tmp_path / "first", tmp_path / "second"
        assert main(["table1", "--config", config, "--out", str(first)]) == EXIT_OK
        assert main(["table1", "--config", config, "--out", str(second)]) == EXIT_OK
        for name in ("table1.csv", "table1_summary.csv"):
            assert (first / name).read_bytes() == (second / name).read_bytes(), name
        assert all(row["runtime_ms"] == "0" for row in read_rows(first / "table1.csv"))

    def test_unknown_key(self, tmp_path):
        config = write_config(tmp_path, "experiment.trials = 3\n")
        assert main(["table1", "--config", config, "--out", str(tmp_path / "out")]) == EXIT_CONFIG
