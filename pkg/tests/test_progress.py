"""Tests for ``qecmag.progress`` sweep grid."""

from __future__ import annotations

import io

import pytest
from rich.console import Console

from qecmag.progress import GridCell, SweepGrid


def _make_grid(**options) -> SweepGrid:
    console = Console(file=io.StringIO(), force_terminal=False, color_system=None, width=120)
    return SweepGrid("Sweep", [0.01, 0.05], [0.0, 1e-3], console=console, **options)


def _rendered(grid: SweepGrid) -> str:
    buffer = io.StringIO()
    Console(file=buffer, force_terminal=False, color_system=None, width=120).print(grid.render())
    return buffer.getvalue()


def test_cell_records_rate_and_verdict():
    grid = _make_grid(reference_rate=0.5)
    with grid.live():
        with grid.cell(0.01, 0.0) as tile:
            tile.gamma_eff = 0.04
        with grid.cell(0.05, 1e-3) as tile:
            tile.gamma_eff = 0.9
    assert grid.get(0.01, 0.0).verdict(grid.reference_rate) == "better"
    assert grid.get(0.05, 1e-3).verdict(grid.reference_rate) == "worse"
    assert grid.get(0.01, 0.0).seconds >= 0.0
    assert grid.tally() == {"better": 1, "worse": 1, "done": 0, "failed": 0, "pending": 2}


def _trigger_failing_cell(grid: SweepGrid) -> None:
    with grid.live():
        with grid.cell(0.01, 1e-3):
            raise RuntimeError("fit diverged")


def test_failing_cell_is_marked_and_reraises():
    grid = _make_grid()
    with pytest.raises(RuntimeError, match="fit diverged"):
        _trigger_failing_cell(grid)
    tile = grid.get(0.01, 1e-3)
    assert tile.error == "fit diverged"
    assert not tile.running
    assert grid.tally()["failed"] == 1


def test_unknown_cell_extends_the_grid():
    grid = _make_grid()
    with grid.cell(0.075, 1e-4) as tile:
        tile.gamma_eff = 0.1
    assert grid.rows == [0.01, 0.05, 0.075]
    assert grid.columns == [0.0, 1e-3, 1e-4]
    assert len(grid.cells) == 9
    assert grid.tally()["done"] == 1


def test_render_shows_axes_rates_and_verdicts():
    grid = _make_grid(reference_rate=0.5)
    with grid.cell(0.01, 0.0) as tile:
        tile.gamma_eff = 0.0351
    text = _rendered(grid)
    assert "Sweep" in text
    assert "tau_ec" in text
    assert "p_gate=0.001" in text
    assert "0.0351 better" in text
    assert "1 better · 3 pending" in text


def test_rates_without_reference_have_no_verdict():
    tile = GridCell(0.01, 0.0, gamma_eff=0.2)
    assert tile.verdict(None) is None
    assert tile.text(None).plain == "0.2"
    assert GridCell(0.01, 0.0).text(0.5).plain == "·"
    assert GridCell(0.01, 0.0, running=True).text(0.5).plain == "running"
