"""Tests for report artifacts."""

import json

import numpy as np
import pandas as pd
import pytest

from ssf_lab.errors import ArtifactIoError
from ssf_lab.genint import WeakL1Profile
from ssf_lab.io import BOUNDARY_COLUMNS, boundary_frame, emit, load_report
from ssf_lab.scenario import Report, Residual, SuiteResult


@pytest.fixture
def report(rank_one_data):
    """A report with boundary data, one profile and one truncation trace."""
    t = np.geomspace(1e-4, 1.0, 9)
    return Report(
        scenario="Rank One Demo",
        suites=[
            SuiteResult("boundary", residuals=[Residual("norm_identity", 1e-6, 1e-4, True)]),
            SuiteResult("trace", error="PoleNearSpectrumError: pole too close"),
        ],
        boundary=rank_one_data,
        profiles={"xi": WeakL1Profile(t, 2 * np.sqrt(t * (1 - t)))},
        truncations={"zeta": [(1e-2, 1e2, 3.0 + 0j), (1e-3, 1e3, 3.1 + 0j), (1e-4, 1e4, 3.14 + 0j)]},
    )


def test_boundary_frame(report, rank_one_data):
    """Test the boundary table columns."""
    frame = boundary_frame(report)
    assert list(frame.columns) == BOUNDARY_COLUMNS
    assert len(frame) == rank_one_data.grid.size


def test_emit_csv(tmp_path, report, rank_one_data):
    """Test that CSV files are written with full precision."""
    written = emit(report, ["csv"], tmp_path)
    assert [p.name for p in written] == ["rank-one-demo_boundary.csv", "rank-one-demo_weak_l1.csv"]
    frame = pd.read_csv(tmp_path / "rank-one-demo_boundary.csv", float_precision="round_trip")
    assert list(frame.columns) == BOUNDARY_COLUMNS
    assert np.array_equal(frame["zeta"].to_numpy(), rank_one_data.zeta)
    profiles = pd.read_csv(tmp_path / "rank-one-demo_weak_l1.csv")
    assert set(profiles["profile"]) == {"xi"}


def test_emit_json_lists_artifacts(tmp_path, report):
    """Test that the summary names every file written with it."""
    written = emit(report, ["csv", "json"], tmp_path / "out")
    summary = tmp_path / "out" / "rank-one-demo_summary.json"
    assert written[-1] == summary
    data = json.loads(summary.read_text())
    assert data["passed"] is False
    assert data["artifacts"] == [p.name for p in written]


def test_emit_svg(tmp_path, report):
    """Test the three plots."""
    written = emit(report, ["svg"], tmp_path)
    names = sorted(p.name for p in written)
    assert names == [
        "rank-one-demo_boundary.svg",
        "rank-one-demo_truncations.svg",
        "rank-one-demo_weak_l1.svg",
    ]
    assert all(p.read_text().lstrip().startswith("<?xml") for p in written)


def test_emit_without_boundary(tmp_path):
    """Test that a report without boundary data writes only its summary."""
    report = Report(scenario="divergence only", suites=[SuiteResult("divergence")])
    written = emit(report, ["csv", "json", "svg"], tmp_path)
    assert [p.name for p in written] == ["divergence-only_summary.json"]


def test_emit_unknown_format(tmp_path, report):
    """Test that unknown formats are refused."""
    with pytest.raises(ArtifactIoError):
        emit(report, ["xlsx"], tmp_path)


def test_emit_unwritable_target(tmp_path, report):
    """Test that a file in place of the folder is an artifact error."""
    blocker = tmp_path / "blocker"
    blocker.write_text("")
    with pytest.raises(ArtifactIoError):
        emit(report, ["json"], blocker)


def test_load_report(tmp_path, report, rank_one_data):
    """Test reading back a summary."""
    emit(report, ["json"], tmp_path)
    restored = load_report(tmp_path / "rank-one-demo_summary.json")
    assert restored.scenario == "Rank One Demo"
    assert restored.suite("trace").error.startswith("PoleNearSpectrumError")
    assert np.array_equal(restored.boundary.xi, rank_one_data.xi)
    assert restored.truncations["zeta"][-1][2] == 3.14
    assert restored.profiles["xi"].t_values.size == 9


@pytest.mark.parametrize("content", ["not json", '{"schema": "other"}', "[]"])
def test_load_report_errors(tmp_path, content):
    """Test that broken summaries raise artifact errors."""
    path = tmp_path / "summary.json"
    path.write_text(content)
    with pytest.raises(ArtifactIoError):
        load_report(path)


def test_load_report_missing(tmp_path):
    """Test that a missing summary raises an artifact error."""
    with pytest.raises(ArtifactIoError):
        load_report(tmp_path / "missing.json")
