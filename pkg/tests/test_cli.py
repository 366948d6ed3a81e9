# Tests for the command-line interface
# Runs the subcommands end to end against a temporary storage directory

import json
import os

import pytest

from src.cli import build_parser, run
from src.errors import EXIT_INVALID_INPUT, EXIT_OK
from src.events import IterationEvent, StageCompletedEvent, get_event_bus, reset_event_bus
from src.storage import reset_store


@pytest.fixture
def out(tmp_path):
    return str(tmp_path / "store")


def read(path):
    with open(path, encoding="utf-8") as fh:
        return fh.read()


def generate_matrices(out, seed=7, d=2, size=2):
    code = run(["gen", "matrices", "--d", str(d), "--J-size", str(size), "--seed", str(seed), "--out", out])
    assert code == EXIT_OK
    return os.path.join(out, f"matrices_d{d}_J{size}_seed{seed}.json")


class TestParser:
    """Tests for argument parsing."""

    def test_requires_command(self):
        with pytest.raises(SystemExit):
            build_parser().parse_args([])

    def test_rejects_unknown_init(self):
        with pytest.raises(SystemExit):
            build_parser().parse_args(["sparsify", "--input", "x.json", "--init", "magic"])

    def test_lambda_flag(self):
        args = build_parser().parse_args(["sparsify", "--input", "x.json", "--lambda", "2.5"])
        assert args.lam == 2.5
        assert args.timings is False


class TestGen:
    """Tests for instance generation."""

    def test_matrices_file(self, out):
        path = generate_matrices(out)
        payload = json.loads(read(path))

        assert payload["kind"] == "matrix_set"
        assert payload["spec"]["d"] == 2
        assert len(payload["samples"]["hessians"]) == 10
        assert payload["manifest"]["command"] == "gen matrices"
        assert payload["manifest"]["seeds"]["seed"] == 7
        assert all(1 <= i <= 2 for i in payload["truth"]["pattern"]["diag"])

    def test_matrices_need_size(self, out):
        assert run(["gen", "matrices", "--d", "3", "--out", out]) == EXIT_INVALID_INPUT

    def test_rerun_is_byte_identical(self, out):
        path = generate_matrices(out)
        first = read(path)
        generate_matrices(out)
        assert read(path) == first

    def test_builtin_function_file(self, out):
        code = run(["gen", "builtin", "--which", "f2", "--rotate", "--points", "20", "--seed", "3", "--out", out])
        assert code == EXIT_OK
        payload = json.loads(read(os.path.join(out, "builtin_f2_seed3.json")))

        assert payload["kind"] == "function"
        assert payload["noisy"] is False
        assert payload["function"] == {"type": "builtin", "which": "f2", "rotate": True, "noisy": False, "seed": 3}
        assert len(payload["samples"]["gradients"]) == 20
        assert len(payload["truth"]["R"]) == 7

    def test_noisy_matrices_flagged(self, out):
        args = ["gen", "matrices", "--d", "3", "--J-size", "2", "--sigma", "1e-3", "--seed", "4", "--out", out]
        assert run(args) == EXIT_OK
        payload = json.loads(read(os.path.join(out, "matrices_d3_J2_seed4.json")))
        assert payload["noisy"] is True
        assert "clean" in payload

    def test_random_function_file(self, out):
        code = run(["gen", "function", "--d", "10", "--points", "10", "--no-rotate", "--out", out])
        assert code == EXIT_OK
        payload = json.loads(read(os.path.join(out, "function_d10_seed0.json")))
        assert payload["function"]["type"] == "generated"
        assert payload["samples"]["d"] == 10


class TestSparsify:
    """Tests for the sparsify subcommand."""

    def test_report_written(self, out):
        path = generate_matrices(out)
        assert run(["sparsify", "--input", path, "--out", out]) == EXIT_OK

        report = json.loads(read(os.path.join(out, "matrices_d2_J2_seed7_report.json")))
        assert report["d"] == 2
        assert set(report["chi_by_eta"]) == {"1e-09", "0.0001"}
        assert report["manifest"]["timings"] == {}
        assert report["certificate"]["status"] in {"certified_optimal", "unknown"}
        assert len(report["U_total"]) == 2
        assert os.path.exists(os.path.join(out, "matrices_d2_J2_seed7_report_trajectories.csv"))

    def test_rerun_is_byte_identical(self, out):
        path = generate_matrices(out)
        report = os.path.join(out, "matrices_d2_J2_seed7_report.json")

        run(["sparsify", "--input", path, "--out", out])
        first = read(report)
        run(["sparsify", "--input", path, "--out", out])
        assert read(report) == first

    def test_timings_opt_in(self, out):
        path = generate_matrices(out)
        assert run(["sparsify", "--input", path, "--out", out, "--timings", "--output", "timed"]) == EXIT_OK
        timings = json.loads(read(os.path.join(out, "timed.json")))["manifest"]["timings"]
        assert set(timings) == {"vertex_min", "block_diag", "sparse_components", "evaluate"}

    def test_flags_reach_config(self, out):
        path = generate_matrices(out)
        argv = ["sparsify", "--input", path, "--out", out, "--init", "identity", "--eta", "1e-6", "--output", "flags"]
        assert run(argv) == EXIT_OK
        report = json.loads(read(os.path.join(out, "flags.json")))
        assert report["config"]["init"] == "identity"
        assert report["config"]["etas"] == [1e-6]
        assert set(report["patterns_by_eta"]) == {"1e-06"}

    def test_missing_input(self, out):
        assert run(["sparsify", "--input", os.path.join(out, "absent.json"), "--out", out]) == EXIT_INVALID_INPUT

    def test_missing_config(self, out):
        path = generate_matrices(out)
        code = run(["sparsify", "--input", path, "--config", os.path.join(out, "absent.json"), "--out", out])
        assert code == EXIT_INVALID_INPUT

    def test_malformed_instance(self, out, tmp_path):
        bad = tmp_path / "bad.json"
        bad.write_text(json.dumps({"hessians": [[1.0, 2.0, 3.0]]}))
        assert run(["sparsify", "--input", str(bad), "--out", out]) == EXIT_INVALID_INPUT


class TestTrialsAndReport:
    """Tests for trial batches and their aggregation."""

    def test_trials_then_report(self, out):
        assert run(["trials", "--d", "2", "--trials", "2", "--seed", "1", "--out", out]) == EXIT_OK
        directory = os.path.join(out, "trials_d2_seed1")
        assert sorted(os.listdir(directory)) == [
            "summary.csv",
            "summary.json",
            "trial_000.json",
            "trial_001.json",
        ]
        trial = json.loads(read(os.path.join(directory, "trial_000.json")))
        assert trial["instance"]["d"] == 2
        assert trial["manifest"]["command"] == "trials"

        assert run(["report", directory, "--out", out]) == EXIT_OK
        summary = json.loads(read(os.path.join(out, "report_summary.json")))
        assert {row["eta"] for row in summary["rows"]} == {1e-9, 1e-4}
        assert all(row["trials"] == 2 for row in summary["rows"])

        assert run(["report", directory, "--table", "dim2", "--out", out]) == EXIT_OK
        assert os.path.exists(os.path.join(out, "report_dim2.csv"))

    def test_unknown_table(self, out):
        run(["trials", "--d", "2", "--trials", "1", "--seed", "1", "--out", out])
        directory = os.path.join(out, "trials_d2_seed1")
        assert run(["report", directory, "--table", "wide", "--out", out]) == EXIT_INVALID_INPUT

    def test_report_needs_chi(self, out):
        path = generate_matrices(out)
        run(["sparsify", "--input", path, "--out", out, "--output", "plain"])
        payload = json.loads(read(os.path.join(out, "plain.json")))
        payload["chi_by_eta"] = None
        with open(os.path.join(out, "plain.json"), "w", encoding="utf-8") as fh:
            json.dump(payload, fh)
        assert run(["report", os.path.join(out, "plain.json"), "--out", out]) == EXIT_INVALID_INPUT


class TestAnova:
    """Tests for derivative counts of the built-in benchmarks."""

    def test_unrotated_f1_counts(self, out):
        assert run(["anova", "--which", "f1", "--points", "200", "--out", out]) == EXIT_OK
        payload = json.loads(read(os.path.join(out, "anova_f1t_seed0.json")))
        assert payload["d"] == 7
        assert payload["counts"]["inf"] == {"G": 2, "H": 18}

    def test_term_norms_written(self, out):
        argv = ["anova", "--which", "f2", "--points", "20", "--orders", "1", "--term-points", "5"]
        argv += ["--mc-samples", "256", "--output", "terms", "--out", out]
        assert run(argv) == EXIT_OK
        assert os.path.exists(os.path.join(out, "terms_terms.csv"))
        payload = json.loads(read(os.path.join(out, "terms.json")))
        assert set(payload["minimal_term_norm"]) == {"1"}


class TestSharedServices:
    """Tests for the shared store and event bus behind the commands."""

    def test_default_store_from_environment(self, tmp_path, monkeypatch):
        monkeypatch.setenv("SPARSEADD_STORAGE_PATH", str(tmp_path / "shared"))
        reset_store()
        try:
            assert run(["gen", "matrices", "--d", "2", "--J-size", "2", "--seed", "3"]) == EXIT_OK
            assert os.path.exists(tmp_path / "shared" / "matrices_d2_J2_seed3.json")
        finally:
            reset_store()

    def test_commands_publish_on_shared_bus(self, out):
        reset_event_bus()
        bus = get_event_bus()
        stages = []
        bus.subscribe(StageCompletedEvent, lambda e: stages.append(e.stage))
        path = generate_matrices(out)

        assert run(["sparsify", "--input", path, "--out", out]) == EXIT_OK

        assert stages == ["vertex_min", "block_diag", "sparse_components", "evaluate"]
        assert not bus.has_subscribers(IterationEvent)
        reset_event_bus()
