"""Tests for qecmag.outputs module."""

from __future__ import annotations

import json
import logging

import pytest

from qecmag.outputs import (
    MANIFEST_FILENAME,
    RunManifest,
    WarningCollector,
    append_jsonl,
    load_manifest,
    read_csv,
    read_jsonl,
    write_csv,
)


def test_write_csv_formats_cells(tmp_path):
    path = write_csv(
        tmp_path / "out" / "series.csv",
        ["time", "value", "flag", "note"],
        [(0.1, 1 / 3, True, None), (2, float("inf"), False, "x")],
    )
    assert path.read_text() == (
        "time,value,flag,note\n"
        "0.10000000000000001,0.33333333333333331,true,\n"
        "2,inf,false,x\n"
    )
    header, rows = read_csv(path)
    assert header == ["time", "value", "flag", "note"]
    assert float(rows[0][1]) == 1 / 3


def test_write_csv_rejects_ragged_rows(tmp_path):
    with pytest.raises(ValueError, match="Row 1"):
        write_csv(tmp_path / "bad.csv", ["a", "b"], [(1, 2), (3,)])


def test_write_csv_header_only(tmp_path):
    path = write_csv(tmp_path / "empty.csv", ["a"], [])
    assert read_csv(path) == (["a"], [])


class TestJsonLines:
    def test_sorted_keys_and_appending(self, tmp_path):
        path = tmp_path / "report.jsonl"
        append_jsonl(path, {"b": 1, "a": 2.5})
        append_jsonl(path, {"c": [1, 2]})
        lines = path.read_text().splitlines()
        assert lines[0] == '{"a": 2.5, "b": 1}'
        assert read_jsonl(path) == [{"a": 2.5, "b": 1}, {"c": [1, 2]}]

    def test_non_finite_values_become_strings(self, tmp_path):
        path = append_jsonl(
            tmp_path / "r.jsonl", {"delta_b": float("inf"), "nested": {"x": float("nan")}}
        )
        record = json.loads(path.read_text())
        assert record == {"delta_b": "inf", "nested": {"x": "nan"}}

    def test_empty_record_rejected(self, tmp_path):
        with pytest.raises(ValueError):
            append_jsonl(tmp_path / "r.jsonl", {})


class TestRunManifest:
    def test_write_lists_outputs(self, tmp_path):
        data = write_csv(tmp_path / "fidelity-default.csv", ["time"], [(0.0,)])
        manifest = RunManifest(command="fidelity", config={"physics": {"gamma": 1.0}}, seed=7)
        manifest.record(data)
        manifest.record(data)
        manifest.warnings.append("qecmag.coupler: weak hybridization")

        path = manifest.write(tmp_path)

        assert path.name == MANIFEST_FILENAME
        loaded = load_manifest(path)
        assert loaded["command"] == "fidelity"
        assert loaded["seed"] == 7
        assert loaded["outputs"] == ["fidelity-default.csv"]
        assert loaded["warnings"] == ["qecmag.coupler: weak hybridization"]
        assert loaded["config"] == {"physics": {"gamma": 1.0}}
        assert loaded["duration_s"] >= 0
        assert list(loaded)[:3] == ["command", "version", "seed"]

    def test_missing_output_is_an_error(self, tmp_path):
        manifest = RunManifest(command="ramsey", config={}, seed=0)
        manifest.record(tmp_path / "never-written.csv")
        with pytest.raises(FileNotFoundError):
            manifest.write(tmp_path)
        assert not (tmp_path / MANIFEST_FILENAME).exists()


def test_warning_collector_keeps_warnings_only():
    collector = WarningCollector()
    log = logging.getLogger("qecmag.test_outputs")
    log.addHandler(collector)
    try:
        log.warning("low R² %.2f", 0.5)
        log.info("ignored")
        log.error("kept")
    finally:
        log.removeHandler(collector)
    assert collector.messages == [
        "qecmag.test_outputs: low R² 0.50",
        "qecmag.test_outputs: kept",
    ]
