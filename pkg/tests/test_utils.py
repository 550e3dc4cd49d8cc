"""Tests for qecmag.utils module."""

from __future__ import annotations

import logging

import pytest
from rich.logging import RichHandler

from qecmag.utils import format_float, format_tesla, setup_logging


class TestSetupLogging:
    def test_sets_level_and_rich_handler(self):
        setup_logging("DEBUG")
        assert logging.root.level == logging.DEBUG
        assert any(isinstance(handler, RichHandler) for handler in logging.root.handlers)

    def test_unknown_level_falls_back_to_info(self):
        setup_logging("chatty")
        assert logging.root.level == logging.INFO

    def test_log_file_receives_plain_records(self, tmp_path):
        log_file = tmp_path / "logs" / "run.log"
        setup_logging("INFO", log_file)
        logging.getLogger("qecmag.test").warning("threshold crossed")
        for handler in logging.root.handlers:
            handler.flush()
        content = log_file.read_text()
        assert "[qecmag.test] WARNING: threshold crossed" in content


@pytest.mark.parametrize(
    ("value", "expected"),
    [
        (0.5, "0.5"),
        (0.1, "0.10000000000000001"),
        (3.0, "3"),
        (float("inf"), "inf"),
        (float("-inf"), "-inf"),
        (float("nan"), "nan"),
    ],
)
def test_format_float(value, expected):
    assert format_float(value) == expected


@pytest.mark.parametrize(
    ("value", "expected"),
    [
        (5.12e-10, "512 pT"),
        (2.0e-6, "2 μT"),
        (1.5, "1.5 T"),
        (3e-16, "0.3 fT"),
        (float("inf"), "∞ T"),
    ],
)
def test_format_tesla(value, expected):
    assert format_tesla(value) == expected
