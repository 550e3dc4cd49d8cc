"""Tests for qecmag.config module."""

from __future__ import annotations

import textwrap

import pytest
import yaml

from qecmag.config import (
    ConfigError,
    default_config,
    dump_config,
    load_config,
    parse_config,
    save_config,
)


def _parse(text: str):
    return parse_config(textwrap.dedent(text))


def _error_for(text: str) -> ConfigError:
    with pytest.raises(ConfigError) as info:
        _parse(text)
    return info.value


# ---------------------------------------------------------------------------
# Defaults
# ---------------------------------------------------------------------------


def test_defaults_resolve():
    config = load_config()
    assert list(config.experiments) == ["default"]
    base = config.base
    assert base.tau_ec == pytest.approx(0.05)
    assert base.total_time == pytest.approx(1.0)
    assert config.sweep.tau_values == pytest.approx((0.01, 0.02, 0.05, 0.1))
    assert config.sensing.t2 == pytest.approx(40e-6)
    assert config.sensing.total_time == pytest.approx(1.0)
    assert config.sensing.responsivity is None
    assert config.settings["log_level"] == "INFO"


def test_empty_file_means_defaults():
    assert _parse("").base == load_config().base


def test_default_config_has_every_section():
    assert set(default_config()) == {
        "physics",
        "protocol",
        "coupler",
        "sensing",
        "sweep",
        "parameter_sets",
        "settings",
    }


# ---------------------------------------------------------------------------
# Units
# ---------------------------------------------------------------------------


def test_unit_suffixes_resolve_against_gamma():
    config = _parse(
        """
        physics:
          gamma: 2.0
          tau_ec: 0.1 /gamma
          g_s: 10 gamma
          p_gate: 0.01 %
          total_time: 500 ns
        """
    )
    base = config.base
    assert base.tau_ec == pytest.approx(0.05)
    assert base.g_s == pytest.approx(20.0)
    assert base.p_gate == pytest.approx(1e-4)
    assert base.total_time == pytest.approx(0.5)


def test_defaults_expressed_in_gamma_follow_user_gamma():
    assert _parse("physics:\n  gamma: 2.0\n").base.tau_ec == pytest.approx(0.025)


def test_exponent_strings_are_numbers():
    config = _parse(
        """
        sweep:
          p_gate_values: [0, 1e-4, 1e-3]
        """
    )
    assert config.sweep.p_gate_values == pytest.approx((0.0, 1e-4, 1e-3))


def test_sensing_units_convert_to_seconds():
    config = _parse(
        """
        sensing:
          t2: 20 us
          total_time: 10 ms
          gamma_eff: 5000 /s
          responsivity: 7.0e5
        """
    )
    assert config.sensing.t2 == pytest.approx(20e-6)
    assert config.sensing.total_time == pytest.approx(0.01)
    assert config.sensing.coherence_rate() == pytest.approx(5000.0)
    assert config.sensing.responsivity == pytest.approx(7.0e5)


def test_coupler_supplies_responsivity():
    config = _parse(
        """
        coupler:
          dgs_dphi: 15.25
          area: 100 um2
        """
    )
    assert config.sensing.responsivity == pytest.approx(15.25 * 100e-12 / 2.067833848e-15)


# ---------------------------------------------------------------------------
# Errors carry line numbers
# ---------------------------------------------------------------------------


def test_unknown_key_reports_line():
    error = _error_for(
        """
        physics:
          gamma: 1.0
          tau_ecc: 0.05
        """
    )
    assert error.line == 4
    assert "tau_ecc" in str(error)
    assert str(error).startswith("line 4:")


def test_unknown_unit_reports_line():
    error = _error_for(
        """
        protocol:
          mode: deterministic
        physics:
          tau_ec: 0.05 parsecs
        """
    )
    assert error.line == 5
    assert "parsecs" in str(error)


def test_unknown_section_rejected():
    assert _error_for("plots:\n  dpi: 300\n").line == 1


def test_malformed_yaml_reports_line():
    error = _error_for(
        """
        physics:
          gamma: [1.0
        protocol: {}
        """
    )
    assert error.line is not None
    assert "malformed" in str(error)


def test_gamma_relative_unit_needs_positive_gamma():
    error = _error_for(
        """
        physics:
          gamma: 0
          tau_ec: 0.05 /gamma
        """
    )
    assert error.line == 4


def test_invalid_experiment_maps_to_config_error():
    error = _error_for(
        """
        physics:
          gamma: 1.0
          tau_ec: 1.0
        """
    )
    assert "0.5" in str(error)
    assert error.line == 2


def test_wrong_types_rejected():
    assert "integer" in str(_error_for("protocol:\n  n_runs: many\n"))
    assert "true/false" in str(_error_for("protocol:\n  record_within_round: 1\n"))
    assert "three rates" in str(_error_for("coupler:\n  gamma_rates: [1, 2]\n"))


def test_sweep_lists_must_be_non_empty():
    assert _error_for("sweep:\n  tau_values: []\n").line == 2


# ---------------------------------------------------------------------------
# Parameter sets and overrides
# ---------------------------------------------------------------------------


def test_parameter_sets_override_base():
    config = _parse(
        """
        physics:
          tau_ec: 0.05
        parameter_sets:
          clean:
            p_gate: 0
          noisy:
            p_gate: 0.1 %
            tau_ec: 0.02
        """
    )
    assert list(config.experiments) == ["clean", "noisy"]
    assert config.experiments["noisy"].p_gate == pytest.approx(1e-3)
    assert config.experiments["noisy"].tau_ec == pytest.approx(0.02)
    assert config.experiments["clean"].tau_ec == pytest.approx(0.05)
    assert config.experiments["noisy"].name == "noisy"


def test_parameter_set_errors_point_at_the_set():
    error = _error_for(
        """
        parameter_sets:
          fast:
            tau_ec: 2.0
        """
    )
    assert error.line == 3
    assert "fast" in str(error)


def test_parameter_set_must_be_a_mapping():
    error = _error_for(
        """
        parameter_sets:
          fast: [0.02, 0.05]
        """
    )
    assert error.line == 3
    assert "mapping" in str(error)


def test_fault_flags_reach_the_experiments():
    config = _parse("protocol:\n  swap_faults: true\nphysics:\n  p_gate: 0.001\n")
    assert config.base.swap_faults
    assert not config.base.readout_faults
    assert config.base.noise.route_swaps
    assert load_config().base.swap_faults is False


def test_cli_overrides_apply_to_every_set():
    config = _parse("parameter_sets:\n  a: {}\n  b: {seed: 3}\n").with_overrides(
        seed=9, mode="trajectory", n_runs=5
    )
    assert {exp.seed for exp in config.experiments.values()} == {9}
    assert config.resolved["protocol"]["seed"] == 9
    assert "seed" not in config.resolved["parameter_sets"]["b"]
    with pytest.raises(ConfigError, match="override"):
        config.with_overrides(mode="sometimes")


def test_log_level_environment_override(monkeypatch):
    monkeypatch.setenv("QECMAG_LOG_LEVEL", "DEBUG")
    assert load_config().settings["log_level"] == "DEBUG"


# ---------------------------------------------------------------------------
# Round trip
# ---------------------------------------------------------------------------


def test_resolved_config_round_trips():
    config = _parse(
        """
        physics:
          g_s: 10 gamma
        coupler:
          enabled: true
          g_prime: 1.0
          delta: 100 MHz
          alpha: -200
        parameter_sets:
          slow:
            tau_ec: 0.1 /gamma
        """
    )
    again = parse_config(dump_config(config.resolved))
    assert again.experiments == config.experiments
    assert again.sweep == config.sweep
    assert again.sensing == config.sensing
    assert config.base.coupler is not None


def test_save_config_writes_yaml(tmp_path):
    path = tmp_path / "nested" / "run.yaml"
    save_config(default_config(), path)
    assert yaml.safe_load(path.read_text())["physics"]["tau_ec"] == "0.05 /gamma"
    assert load_config(path).source == path


def test_missing_file_is_config_error(tmp_path):
    with pytest.raises(ConfigError, match="cannot read"):
        load_config(tmp_path / "absent.yaml")
