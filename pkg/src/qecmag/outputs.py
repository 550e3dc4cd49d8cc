"""Result files written by the CLI.

Every command writes its data files plus a ``manifest.yaml`` next to them:

    command: fidelity
    version: 2026.10.19
    seed: 7
    duration_s: 1.84
    outputs:
      - fidelity-default.csv
    warnings: []
    config: {...}          # fully resolved

CSV files carry a header row and 17 significant digits for every float.
Scalar reports are JSON-lines, one object per line with sorted keys.
"""

from __future__ import annotations

import csv
import json
import logging
import math
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Iterable, Sequence

import yaml

from qecmag import __version__
from qecmag.utils import format_float

logger = logging.getLogger(__name__)

MANIFEST_FILENAME = "manifest.yaml"


def _cell(value: Any) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return format_float(value)
    if value is None:
        return ""
    return str(value)


def write_csv(path: Path, header: Sequence[str], rows: Iterable[Sequence[Any]]) -> Path:
    """Write ``rows`` under ``header``; every row must match the header width."""
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="") as file:
        writer = csv.writer(file, lineterminator="\n")
        writer.writerow(header)
        for index, row in enumerate(rows):
            if len(row) != len(header):
                raise ValueError(
                    f"Row {index} of {path.name} has {len(row)} cells, expected {len(header)}."
                )
            writer.writerow([_cell(value) for value in row])
    logger.debug("Wrote %s", path)
    return path


def read_csv(path: Path) -> tuple[list[str], list[list[str]]]:
    """Header and raw string rows of a file written by :func:`write_csv`."""
    with open(path, encoding="utf-8", newline="") as file:
        reader = csv.reader(file)
        header = next(reader)
        return header, [row for row in reader]


def _json_safe(value: Any) -> Any:
    if isinstance(value, float) and not math.isfinite(value):
        return format_float(value)
    if isinstance(value, dict):
        return {str(key): _json_safe(item) for key, item in value.items()}
    if isinstance(value, (list, tuple)):
        return [_json_safe(item) for item in value]
    return value


def append_jsonl(path: Path, record: dict[str, Any]) -> Path:
    """Append one report line. Non-finite floats are stored as strings."""
    if not record:
        raise ValueError("Empty record")
    path.parent.mkdir(parents=True, exist_ok=True)
    line = json.dumps(_json_safe(record), sort_keys=True, ensure_ascii=False)
    with open(path, "a", encoding="utf-8") as file:
        file.write(line + "\n")
    return path


def read_jsonl(path: Path) -> list[dict[str, Any]]:
    records = []
    with open(path, encoding="utf-8") as file:
        for line in file:
            line = line.strip()
            if line:
                records.append(json.loads(line))
    return records


class WarningCollector(logging.Handler):
    """Keeps the text of WARNING-and-above records for the manifest."""

    def __init__(self) -> None:
        super().__init__(level=logging.WARNING)
        self.messages: list[str] = []

    def emit(self, record: logging.LogRecord) -> None:
        self.messages.append(f"{record.name}: {record.getMessage()}")


@dataclass
class RunManifest:
    command: str
    config: dict[str, Any]
    seed: int
    version: str = __version__
    outputs: list[Path] = field(default_factory=list)
    warnings: list[str] = field(default_factory=list)
    started_at: float = field(default_factory=time.monotonic)
    duration_s: float = 0.0

    def record(self, path: Path) -> Path:
        if path not in self.outputs:
            self.outputs.append(path)
        return path

    def as_dict(self) -> dict[str, Any]:
        return {
            "command": self.command,
            "version": self.version,
            "seed": self.seed,
            "duration_s": round(self.duration_s, 3),
            "outputs": [path.name for path in self.outputs],
            "warnings": list(self.warnings),
            "config": self.config,
        }

    def write(self, directory: Path) -> Path:
        """Stamp the wall-clock duration and write ``manifest.yaml`` into ``directory``."""
        self.duration_s = time.monotonic() - self.started_at
        directory.mkdir(parents=True, exist_ok=True)
        missing = [path for path in self.outputs if not path.exists()]
        if missing:
            raise FileNotFoundError(f"Manifest lists missing outputs: {missing}")
        path = directory / MANIFEST_FILENAME
        with open(path, "w", encoding="utf-8") as file:
            yaml.dump(
                self.as_dict(), file, default_flow_style=False, allow_unicode=True, sort_keys=False
            )
        return path


def load_manifest(path: Path) -> dict[str, Any]:
    with open(path, encoding="utf-8") as file:
        return yaml.safe_load(file) or {}
