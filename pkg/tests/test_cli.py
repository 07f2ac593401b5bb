"""End-to-end CLI behavior: exit codes, artifacts, determinism."""

import json

import pytest
from click.testing import CliRunner

from pcskit.cli import main


@pytest.fixture
def runner():
    return CliRunner()


def write_config(tmp_path, **overrides):
    cfg = {
        "benchmark": {"kind": "ghz_mirror", "width": 3},
        "checks": "auto-edge",
        "qpu": {"regions": 2, "qubits_per_region": 5, "p_min": 0.001, "p_max": 0.01},
        "shots": 400,
        "seed": 11,
        "mode": "mitigate",
    }
    cfg.update(overrides)
    path = tmp_path / "exp.json"
    path.write_text(json.dumps(cfg))
    return path


class TestSuccessPath:
    def test_mitigate_run_writes_artifacts(self, runner, tmp_path):
        cfg = write_config(tmp_path)
        out = tmp_path / "out"
        result = runner.invoke(main, ["--config", str(cfg), "--out", str(out), "--overwrite"])
        assert result.exit_code == 0, result.output + str(result.exception)
        assert "run directory:" in result.output
        for name in ("results.json", "run_config.json", "summary.txt", "fidelity_comparison.png"):
            assert (out / name).is_file(), name

    def test_results_schema(self, runner, tmp_path):
        cfg = write_config(tmp_path)
        out = tmp_path / "out"
        runner.invoke(main, ["--config", str(cfg), "--out", str(out), "--overwrite"])
        results = json.loads((out / "results.json").read_text())
        assert set(results) >= {"threads", "ensemble", "fidelity"}
        assert len(results["threads"]) == 2
        for t in results["threads"]:
            assert set(t) == {"thread_id", "region_id", "shots", "discarded", "d", "counts", "scaled"}
            assert t["shots"] == 400
        assert {"pcs", "base", "improvement_abs", "improvement_rel"} <= set(results["fidelity"])

    def test_calibrate_mode_isolated(self, runner, tmp_path):
        cfg = write_config(tmp_path, mode="calibrate", calibration={"p_grid": [0.001, 0.005, 0.01], "shots": 300})
        out = tmp_path / "out"
        result = runner.invoke(main, ["--config", str(cfg), "--out", str(out), "--overwrite"])
        assert result.exit_code == 0, result.output + str(result.exception)
        assert (out / "calibration_curve.json").is_file()
        assert not (out / "results.json").exists()
        assert not (out / "noise_estimates.json").exists()

    def test_characterize_mode_artifacts(self, runner, tmp_path):
        cfg = write_config(tmp_path, mode="characterize", shots=600)
        out = tmp_path / "out"
        result = runner.invoke(main, ["--config", str(cfg), "--out", str(out), "--overwrite"])
        assert result.exit_code == 0, result.output + str(result.exception)
        for name in (
            "calibration_curve.json",
            "noise_estimates.json",
            "discard_rates.csv",
            "p_estimated.csv",
            "p_true.csv",
        ):
            assert (out / name).is_file(), name
        assert not (out / "results.json").exists()

    def test_mode_flag_overrides_config(self, runner, tmp_path):
        cfg = write_config(tmp_path, mode="mitigate")
        out = tmp_path / "out"
        result = runner.invoke(
            main,
            ["--config", str(cfg), "--out", str(out), "--overwrite", "--mode", "calibrate",
             "--seed", "11"],
        )
        assert result.exit_code == 0
        assert not (out / "results.json").exists()
        echoed = json.loads((out / "run_config.json").read_text())
        assert echoed["mode"] == "calibrate"

    def test_timestamped_subdir_without_overwrite(self, runner, tmp_path):
        cfg = write_config(tmp_path)
        out = tmp_path / "runs"
        result = runner.invoke(main, ["--config", str(cfg), "--out", str(out)])
        assert result.exit_code == 0
        subdirs = list(out.iterdir())
        assert len(subdirs) == 1
        assert subdirs[0].name.startswith("run-")
        assert (subdirs[0] / "results.json").is_file()


class TestDeterminism:
    def test_results_byte_identical_across_runs_and_workers(self, runner, tmp_path):
        cfg = write_config(tmp_path)
        out_a, out_b = tmp_path / "a", tmp_path / "b"
        ra = runner.invoke(main, ["--config", str(cfg), "--out", str(out_a), "--overwrite"])
        rb = runner.invoke(
            main, ["--config", str(cfg), "--out", str(out_b), "--overwrite", "--workers", "2"]
        )
        assert ra.exit_code == 0 and rb.exit_code == 0
        assert (out_a / "results.json").read_bytes() == (out_b / "results.json").read_bytes()
        assert (out_a / "summary.txt").read_bytes() == (out_b / "summary.txt").read_bytes()

    def test_seed_override_changes_results(self, runner, tmp_path):
        cfg = write_config(tmp_path)
        out_a, out_b = tmp_path / "a", tmp_path / "b"
        runner.invoke(main, ["--config", str(cfg), "--out", str(out_a), "--overwrite"])
        runner.invoke(
            main, ["--config", str(cfg), "--out", str(out_b), "--overwrite", "--seed", "12"]
        )
        assert (out_a / "results.json").read_bytes() != (out_b / "results.json").read_bytes()


class TestRejection:
    def test_missing_config_file(self, runner, tmp_path):
        result = runner.invoke(main, ["--config", str(tmp_path / "absent.json")])
        assert result.exit_code == 2
        assert "config not found" in result.stderr

    def test_invalid_config_lists_violations(self, runner, tmp_path):
        path = tmp_path / "bad.json"
        path.write_text(json.dumps({"shots": 0, "seed": -2}))
        result = runner.invoke(main, ["--config", str(path)])
        assert result.exit_code == 2
        assert "config rejected:" in result.stderr
        assert result.stderr.count("  - ") >= 4

    def test_negative_seed_flag(self, runner, tmp_path):
        cfg = write_config(tmp_path)
        result = runner.invoke(main, ["--config", str(cfg), "--seed", "-1"])
        assert result.exit_code == 2
        assert "seed" in result.stderr

    def test_bad_worker_count(self, runner, tmp_path):
        cfg = write_config(tmp_path)
        result = runner.invoke(main, ["--config", str(cfg), "--workers", "0"])
        assert result.exit_code == 2
        assert "workers" in result.stderr


class TestRuntimeFailure:
    def test_nothing_fits_exits_one(self, runner, tmp_path):
        # 4-qubit regions cannot host the 3+2 qubit sandwich; config itself is valid
        cfg = write_config(
            tmp_path,
            qpu={"regions": 2, "qubits_per_region": 4, "p_min": 0.001, "p_max": 0.01},
        )
        result = runner.invoke(main, ["--config", str(cfg), "--out", str(tmp_path / "o")])
        assert result.exit_code == 1
        assert "run failed:" in result.stderr
