"""Surface-level CLI smoke tests.

Every command is exercised via ``--help`` so a missing import or a broken
option signature fails here rather than at invocation. Behaviour lives in
``test_cli_commands.py``.
"""

from __future__ import annotations

import pytest
from typer.testing import CliRunner

from qecmag import __version__
from qecmag.cli import app

runner = CliRunner()

COMMANDS = ["fidelity", "ramsey", "gamma-eff", "sensitivity", "threshold", "init-config"]


def test_app_callback_renders_banner_and_version():
    result = runner.invoke(app, [])
    assert result.exit_code == 0
    assert "qecmag --help" in result.stdout
    assert __version__ in result.stdout
    assert len(result.stdout.strip()) > 50


def test_top_level_help_lists_commands():
    result = runner.invoke(app, ["--help"])
    assert result.exit_code == 0
    for command in COMMANDS:
        assert command in result.stdout


@pytest.mark.parametrize("command", COMMANDS)
def test_command_help_renders(command):
    result = runner.invoke(app, [command, "--help"])
    assert result.exit_code == 0, result.stdout
    assert "Usage" in result.stdout


@pytest.mark.parametrize("command", ["fidelity", "ramsey", "gamma-eff", "threshold"])
def test_simulation_commands_share_overrides(command):
    result = runner.invoke(app, [command, "--help"])
    for option in ("--config", "--out", "--seed", "--mode", "--runs", "--log-level"):
        assert option in result.stdout


def test_gamma_eff_offers_dephasing_flag():
    assert "--dephasing" in runner.invoke(app, ["gamma-eff", "--help"]).stdout
