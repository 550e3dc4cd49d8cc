"""Utility functions for qecmag."""

from __future__ import annotations

import logging
import math
from pathlib import Path

FLOAT_FORMAT = "%.17g"


def setup_logging(log_level: str = "INFO", log_file: Path | None = None) -> None:
    """Configure rich console logging, plus a plain file log when ``log_file`` is given."""
    from rich.logging import RichHandler

    level = getattr(logging, log_level.upper(), logging.INFO)

    handlers: list[logging.Handler] = [
        RichHandler(
            level=level,
            rich_tracebacks=True,
            tracebacks_show_locals=False,
            show_path=False,
        )
    ]
    if log_file is not None:
        log_file.parent.mkdir(parents=True, exist_ok=True)
        file_handler = logging.FileHandler(log_file)
        file_handler.setFormatter(
            logging.Formatter("%(asctime)s [%(name)s] %(levelname)s: %(message)s")
        )
        handlers.append(file_handler)

    logging.basicConfig(
        level=level,
        format="%(message)s",
        datefmt="[%X]",
        handlers=handlers,
        force=True,
    )


def format_float(value: float) -> str:
    """Round-trip representation used in every output file."""
    if math.isinf(value):
        return "inf" if value > 0 else "-inf"
    if math.isnan(value):
        return "nan"
    return FLOAT_FORMAT % value


def format_tesla(value: float) -> str:
    """Human-readable field with an SI prefix, e.g. ``512 pT``."""
    if math.isinf(value):
        return "∞ T"
    magnitude = abs(value)
    for scale, prefix in ((1.0, ""), (1e-3, "m"), (1e-6, "μ"), (1e-9, "n"), (1e-12, "p")):
        if magnitude >= scale:
            return f"{value / scale:.3g} {prefix}T"
    return f"{value / 1e-15:.3g} fT"
