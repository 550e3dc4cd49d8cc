"""Rich live grid for (tau_ec × column) sweeps.

    Γ_eff sweep
      tau_ec   p_gate=0        p_gate=0.0001   p_gate=0.001
        0.01   0.0351 better   0.0454 better   running
        0.05   ·               ·               ·

    2 better · 4 pending

A finished cell shows its fitted rate and, when the grid has a
``reference_rate``, the verdict against it. The grid only writes to the
console; output files never depend on it.
"""

from __future__ import annotations

import time
from contextlib import contextmanager
from dataclasses import dataclass, field
from typing import Iterator

from rich import box
from rich.console import Console, Group, RenderableType
from rich.live import Live
from rich.table import Table
from rich.text import Text

VERDICT_STYLES = {"better": "green", "worse": "red"}


@dataclass
class GridCell:
    """One sweep cell; the sweep fills ``gamma_eff`` or ``error`` while it runs."""

    row: float
    column: float
    gamma_eff: float | None = None
    error: str | None = None
    running: bool = False
    seconds: float = 0.0

    @property
    def finished(self) -> bool:
        return not self.running and (self.gamma_eff is not None or self.error is not None)

    def verdict(self, reference_rate: float | None) -> str | None:
        if self.gamma_eff is None or reference_rate is None:
            return None
        return "better" if self.gamma_eff < reference_rate else "worse"

    def text(self, reference_rate: float | None) -> Text:
        if self.running:
            return Text("running", style="cyan")
        if self.error is not None:
            return Text("fit failed", style="red")
        if self.gamma_eff is None:
            return Text("·", style="dim")
        verdict = self.verdict(reference_rate)
        if verdict is None:
            return Text(f"{self.gamma_eff:.4g}")
        return Text(f"{self.gamma_eff:.4g} {verdict}", style=VERDICT_STYLES[verdict])


@dataclass
class SweepGrid:
    """Live table driven by ``with grid.cell(row, column) as tile:`` blocks."""

    title: str
    rows: list[float]
    columns: list[float]
    row_name: str = "tau_ec"
    column_name: str = "p_gate"
    reference_rate: float | None = None
    console: Console = field(default_factory=Console)
    cells: dict[tuple[float, float], GridCell] = field(default_factory=dict, init=False, repr=False)
    _live: Live | None = None

    def __post_init__(self) -> None:
        self.rows, self.columns = list(self.rows), list(self.columns)
        self.cells = {(r, c): GridCell(r, c) for r in self.rows for c in self.columns}

    def get(self, row: float, column: float) -> GridCell:
        if (row, column) not in self.cells:
            if row not in self.rows:
                self.rows.append(row)
            if column not in self.columns:
                self.columns.append(column)
            for key in ((r, c) for r in self.rows for c in self.columns):
                self.cells.setdefault(key, GridCell(*key))
        return self.cells[row, column]

    def tally(self) -> dict[str, int]:
        counts = {"better": 0, "worse": 0, "done": 0, "failed": 0, "pending": 0}
        for tile in self.cells.values():
            if tile.error is not None:
                counts["failed"] += 1
            elif not tile.finished:
                counts["pending"] += 1
            else:
                counts[tile.verdict(self.reference_rate) or "done"] += 1
        return counts

    def render(self) -> RenderableType:
        table = Table(box=box.SIMPLE, show_edge=False, pad_edge=False)
        table.add_column(self.row_name, justify="right", style="bold")
        for column in self.columns:
            table.add_column(f"{self.column_name}={column:g}", no_wrap=True)
        for row in self.rows:
            tiles = (self.cells[row, column] for column in self.columns)
            table.add_row(f"{row:g}", *(tile.text(self.reference_rate) for tile in tiles))
        summary = " · ".join(f"{count} {name}" for name, count in self.tally().items() if count)
        return Group(Text(self.title, style="bold"), table, Text(summary, style="dim"))

    def _refresh(self) -> None:
        if self._live is not None:
            self._live.update(self.render())

    @contextmanager
    def live(self) -> Iterator[SweepGrid]:
        self._live = Live(self.render(), console=self.console, refresh_per_second=4)
        with self._live:
            try:
                yield self
            finally:
                self._live.update(self.render())
                self._live = None

    @contextmanager
    def cell(self, row: float, column: float) -> Iterator[GridCell]:
        """Mark a cell running; an exception is recorded on the cell and re-raised."""
        tile = self.get(row, column)
        tile.running = True
        started = time.monotonic()
        self._refresh()
        try:
            yield tile
        except Exception as error:
            tile.error = str(error) or error.__class__.__name__
            raise
        finally:
            tile.running = False
            tile.seconds = time.monotonic() - started
            self._refresh()

