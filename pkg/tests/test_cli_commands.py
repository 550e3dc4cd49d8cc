"""End-to-end CLI runs on small configs."""

from __future__ import annotations

import textwrap

import pytest
import yaml
from typer.testing import CliRunner

from qecmag.cli import EXIT_CONFIG_ERROR, EXIT_NUMERICAL_ERROR, app
from qecmag.outputs import MANIFEST_FILENAME, load_manifest, read_csv, read_jsonl
from qecmag.qstate import NumericalError

runner = CliRunner()

NOISELESS = """
physics:
  gamma: 0
  tau_ec: 0.05
  total_time: 0.5
sweep:
  tau_values: [0.05]
settings:
  show_progress: false
"""

SMALL_SWEEP = """
physics:
  gamma: 1.0
  tau_ec: 0.05
  total_time: 1.0
sweep:
  tau_values: [0.05]
  p_gate_values: [0, 0.02]
  substeps: 4
settings:
  show_progress: false
"""


@pytest.fixture
def write_config(tmp_path):
    """Write a YAML config into ``tmp_path`` and return its path."""

    def _write(text: str, name: str = "run.yaml"):
        path = tmp_path / name
        path.write_text(textwrap.dedent(text))
        return path

    return _write


def _invoke(*args):
    return runner.invoke(app, [str(arg) for arg in args])


class TestFidelity:
    def test_noiseless_fidelity_stays_at_one(self, tmp_path, write_config):
        out = tmp_path / "out"
        result = _invoke("fidelity", "-c", write_config(NOISELESS), "-o", out)
        assert result.exit_code == 0, result.stdout

        header, rows = read_csv(out / "fidelity-default.csv")
        assert header == ["time", "fidelity", "stderr", "mode"]
        assert len(rows) == 11
        assert all(float(row[1]) == pytest.approx(1.0, abs=1e-12) for row in rows)
        assert {row[3] for row in rows} == {"deterministic"}

        manifest = load_manifest(out / MANIFEST_FILENAME)
        assert manifest["command"] == "fidelity"
        assert manifest["outputs"] == ["fidelity-default.csv"]
        assert manifest["config"]["physics"]["tau_ec"] == 0.05

    def test_reruns_are_byte_identical(self, tmp_path, write_config):
        config = write_config(SMALL_SWEEP)
        first, second = tmp_path / "a", tmp_path / "b"
        assert _invoke("fidelity", "-c", config, "-o", first).exit_code == 0
        assert _invoke("fidelity", "-c", config, "-o", second).exit_code == 0
        assert (first / "fidelity-default.csv").read_bytes() == (
            second / "fidelity-default.csv"
        ).read_bytes()

    def test_seed_override_lands_in_manifest(self, tmp_path, write_config):
        out = tmp_path / "out"
        options = ["--mode", "trajectory", "--runs", "4", "--seed", "11"]
        result = _invoke("fidelity", "-c", write_config(SMALL_SWEEP), "-o", out, *options)
        assert result.exit_code == 0, result.stdout
        manifest = load_manifest(out / MANIFEST_FILENAME)
        assert manifest["seed"] == 11
        assert manifest["config"]["protocol"]["mode"] == "trajectory"
        _, rows = read_csv(out / "fidelity-default.csv")
        assert {row[3] for row in rows} == {"trajectory"}

    def test_one_file_per_parameter_set(self, tmp_path, write_config):
        out = tmp_path / "out"
        config = write_config(
            NOISELESS + "parameter_sets:\n  short: {total_time: 0.1}\n  long: {}\n"
        )
        assert _invoke("fidelity", "-c", config, "-o", out).exit_code == 0
        assert load_manifest(out / MANIFEST_FILENAME)["outputs"] == [
            "fidelity-short.csv",
            "fidelity-long.csv",
        ]

    def test_within_round_samples_written_when_requested(self, tmp_path, write_config):
        out = tmp_path / "out"
        config = write_config(SMALL_SWEEP + "protocol:\n  record_within_round: true\n")
        assert _invoke("fidelity", "-c", config, "-o", out).exit_code == 0
        header, _ = read_csv(out / "fidelity-default-within-round.csv")
        assert header == ["time", "before_correction", "after_correction"]


class TestErrors:
    def test_bad_config_exits_with_line(self, tmp_path, write_config):
        config = write_config("physics:\n  gamma: 1.0\n  tau_ecc: 0.05\n")
        result = _invoke("fidelity", "-c", config, "-o", tmp_path / "out")
        assert result.exit_code == EXIT_CONFIG_ERROR
        assert "line 3" in result.stdout
        assert not (tmp_path / "out" / MANIFEST_FILENAME).exists()

    def test_bad_override_exits_config_error(self, tmp_path, write_config):
        result = _invoke(
            "fidelity", "-c", write_config(NOISELESS), "-o", tmp_path, "--mode", "sometimes"
        )
        assert result.exit_code == EXIT_CONFIG_ERROR

    def test_numerical_failure_exits_with_diagnostics(self, tmp_path, write_config, monkeypatch):
        def explode(config, **kwargs):
            raise NumericalError("trace drifted", {"trace": 0.5})

        monkeypatch.setattr("qecmag.experiments.run_cycles", explode)
        result = _invoke("fidelity", "-c", write_config(NOISELESS), "-o", tmp_path / "out")
        assert result.exit_code == EXIT_NUMERICAL_ERROR
        assert "trace drifted" in result.stdout
        assert "trace = 0.5" in result.stdout


class TestRamsey:
    def test_writes_encoded_and_bare_fringes(self, tmp_path, write_config):
        out = tmp_path / "out"
        signal = SMALL_SWEEP.replace("total_time: 1.0", "total_time: 1.0\n  g_s: 5")
        result = _invoke("ramsey", "-c", write_config(signal), "-o", out)
        assert result.exit_code == 0, result.stdout
        assert read_csv(out / "ramsey-default.csv")[0] == ["time", "population", "stderr"]
        _, bare = read_csv(out / "ramsey-default-unencoded.csv")
        assert float(bare[0][1]) == pytest.approx(1.0)
        (record,) = read_jsonl(out / "ramsey-fit.jsonl")
        assert record["parameter_set"] == "default"
        assert record["g_s"] == 5.0
        assert "omega" in record or "error" in record


class TestSweeps:
    def test_gamma_eff_sweep_files(self, tmp_path, write_config):
        out = tmp_path / "out"
        result = _invoke("gamma-eff", "-c", write_config(SMALL_SWEEP), "-o", out)
        assert result.exit_code == 0, result.stdout

        header, rows = read_csv(out / "gamma-eff.csv")
        assert header == ["tau_ec", "p_gate", "gamma_eff", "ci_lo", "ci_hi", "error"]
        assert [(float(r[0]), float(r[1])) for r in rows] == [(0.05, 0.0), (0.05, 0.02)]
        assert float(rows[0][2]) > 0
        assert rows[1][5] or float(rows[1][2]) > float(rows[0][2])
        (xi,) = read_jsonl(out / "xi.jsonl")
        assert xi["baseline"] == "analytic"
        assert not (out / "finite-tau-dephasing.csv").exists()

    def test_gamma_eff_with_live_grid(self, tmp_path, write_config):
        out = tmp_path / "out"
        config = write_config(SMALL_SWEEP.replace("show_progress: false", "show_progress: true"))
        result = _invoke("gamma-eff", "-c", config, "-o", out)
        assert result.exit_code == 0, result.stdout
        assert "p_gate=0.02" in result.stdout
        assert "better" in result.stdout

    def test_threshold_map_files(self, tmp_path, write_config):
        out = tmp_path / "out"
        result = _invoke("threshold", "-c", write_config(SMALL_SWEEP), "-o", out)
        assert result.exit_code == 0, result.stdout

        header, rows = read_csv(out / "threshold.csv")
        assert header == ["tau_ec", "p_gate", "verdict", "gamma_eff", "boundary"]
        assert [row[2] for row in rows] == ["better", "worse"]
        _, boundary = read_csv(out / "threshold-boundary.csv")
        assert len(boundary) == 1
        assert 0 < float(boundary[0][2]) < 0.02


class TestSensitivity:
    def test_missing_responsivity_is_config_error(self, tmp_path):
        result = _invoke("sensitivity", "-o", tmp_path)
        assert result.exit_code == EXIT_CONFIG_ERROR
        assert "responsivity" in result.stdout

    def test_zero_responsivity_is_flagged(self, tmp_path, write_config):
        out = tmp_path / "out"
        config = write_config("sensing:\n  responsivity: 0\n")
        result = _invoke("sensitivity", "-c", config, "-o", out)
        assert result.exit_code == 0, result.stdout
        (record,) = read_jsonl(out / "sensitivity.jsonl")
        assert record["infinite"] is True
        assert record["delta_b"] == "inf"
        manifest = load_manifest(out / MANIFEST_FILENAME)
        assert any("Zero responsivity" in warning for warning in manifest["warnings"])

    def test_coupler_headline_figure(self, tmp_path, write_config):
        out = tmp_path / "out"
        config = write_config("coupler:\n  dgs_dphi: 15.25\n  area: 100 um2\n")
        result = _invoke("sensitivity", "-c", config, "-o", out)
        assert result.exit_code == 0, result.stdout
        (record,) = read_jsonl(out / "sensitivity.jsonl")
        assert record["delta_b_per_root_hz"] == pytest.approx(500e-12, rel=0.05)
        assert record["t_star"] == pytest.approx(record["t_star_closed_form"], rel=1e-3)
        assert record["ramsey_resolution_at_t_star"] == pytest.approx(
            record["delta_b"] / 2, rel=1e-3
        )
        assert record["round_two_qubit_routed"] == 13
        assert record["gamma_eff_source"] == "config"

    def test_gamma_eff_option_overrides_config(self, tmp_path, write_config):
        out = tmp_path / "out"
        config = write_config("sensing:\n  responsivity: 7.0e5\n")
        result = _invoke("sensitivity", "-c", config, "-o", out, "--gamma-eff", "100")
        assert result.exit_code == 0, result.stdout
        (record,) = read_jsonl(out / "sensitivity.jsonl")
        assert record["gamma_eff"] == 100.0
        assert record["gamma_eff_source"] == "option"


class TestInitConfig:
    def test_writes_loadable_defaults(self, tmp_path):
        path = tmp_path / "qecmag.yaml"
        result = _invoke("init-config", path)
        assert result.exit_code == 0
        assert yaml.safe_load(path.read_text())["protocol"]["mode"] == "deterministic"

    def test_refuses_overwrite_without_confirmation(self, tmp_path):
        path = tmp_path / "qecmag.yaml"
        path.write_text("keep: me\n")
        result = runner.invoke(app, ["init-config", str(path)], input="n\n")
        assert result.exit_code == 0
        assert "Cancelled" in result.stdout
        assert path.read_text() == "keep: me\n"

    def test_force_overwrites(self, tmp_path):
        path = tmp_path / "qecmag.yaml"
        path.write_text("keep: me\n")
        assert _invoke("init-config", path, "--force").exit_code == 0
        assert "physics" in yaml.safe_load(path.read_text())
