"""Global test fixtures for qecmag."""

from __future__ import annotations

import logging

import numpy as np
import pytest


@pytest.fixture(autouse=True)
def clear_log_level_override(monkeypatch):
    """Keep a developer's ``QECMAG_LOG_LEVEL`` from leaking into config tests."""
    monkeypatch.delenv("QECMAG_LOG_LEVEL", raising=False)


@pytest.fixture(autouse=True)
def restore_root_logging():
    """``setup_logging`` replaces root handlers; put the originals back after each test."""
    root = logging.getLogger()
    handlers, level = list(root.handlers), root.level
    yield
    for handler in root.handlers:
        if handler not in handlers:
            handler.close()
    root.handlers[:] = handlers
    root.setLevel(level)


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(20261019)
