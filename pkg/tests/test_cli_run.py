"""Tests for the run, example, random and report commands."""

import json

import pytest
from click.testing import CliRunner

from ssf_lab.cli import ssf_lab


@pytest.fixture
def home(tmp_path, monkeypatch):
    """Isolate the configuration under a temporary home."""
    monkeypatch.setenv("HOME", str(tmp_path))
    monkeypatch.delenv("SSF_LAB_THREADS", raising=False)
    return tmp_path


def write_scenario(path, **overrides):
    doc = {"name": "CLI rank one", "pair": {"kind": "rank_one"}, "suites": ["adjoint"]}
    doc.update(overrides)
    path.write_text(json.dumps(doc))
    return path


def test_root_without_subcommand(home):
    """Test that `ssf-lab` alone greets and points at --help."""
    runner = CliRunner()
    result = runner.invoke(ssf_lab, [])
    assert result.exit_code == 0
    assert "Use ssf-lab --help for help." in result.output


@pytest.mark.parametrize(
    "args, text",
    [
        (["--help"], "Numerical lab"),
        (["run", "--help"], "Run a scenario file"),
        (["example", "--help"], "Run built-in example scenarios"),
        (["example", "rank-one", "--help"], "--alpha"),
        (["example", "diagonal", "--help"], "--q"),
        (["random", "--help"], "Run suites on a seeded random pair"),
        (["report", "--help"], "Regenerate CSV or SVG artifacts"),
    ],
)
def test_help(args, text):
    """Test the help texts."""
    runner = CliRunner()
    result = runner.invoke(ssf_lab, args)
    assert result.exit_code == 0
    assert text in result.output


def test_example_group_no_subcommand():
    """Test that `ssf-lab example` shows a help hint."""
    runner = CliRunner()
    result = runner.invoke(ssf_lab, ["example"])
    assert result.exit_code == 0
    assert "ssf-lab example --help" in result.output


def test_version(home):
    """Test that the installed version is printed."""
    runner = CliRunner()
    result = runner.invoke(ssf_lab, ["version"])
    assert result.exit_code == 0
    assert result.output.strip()


# ---------------------------------------------------------------------------
# run
# ---------------------------------------------------------------------------


def test_run_passing_scenario(home):
    """Test exit code 0 and the summary artifact."""
    scenario = write_scenario(home / "scenario.json")
    out = home / "out"
    runner = CliRunner()
    result = runner.invoke(ssf_lab, ["run", str(scenario), "-o", str(out), "--threads", "2"])
    assert result.exit_code == 0, result.output
    assert "✓ All suites passed" in result.output
    assert "✓ Wrote 1 artifact(s)" in result.output
    summary = json.loads((out / "cli-rank-one_summary.json").read_text())
    assert summary["passed"] is True


def test_run_failing_suite(home):
    """Test exit code 1 when a suite fails."""
    scenario = write_scenario(
        home / "scenario.json", rational_functions=[[{"pole": [0.0, -1.0]}]]
    )
    runner = CliRunner()
    result = runner.invoke(ssf_lab, ["run", str(scenario), "-o", str(home / "out")])
    assert result.exit_code == 1
    assert "✗ Failed suites: adjoint" in result.output
    assert "PoleNearSpectrumError" in result.output


def test_run_relative_output_uses_config(home):
    """Test that relative outputs land under the default output folder."""
    runner = CliRunner()
    runner.invoke(ssf_lab, ["config", "set-output-folder", str(home / "runs")])
    scenario = write_scenario(home / "scenario.json")
    result = runner.invoke(ssf_lab, ["run", str(scenario), "-o", "first", "--format", "json"])
    assert result.exit_code == 0, result.output
    assert (home / "runs" / "first" / "cli-rank-one_summary.json").exists()


def test_run_missing_file(home):
    """Test exit code 2 for a missing scenario file."""
    runner = CliRunner()
    result = runner.invoke(ssf_lab, ["run", str(home / "missing.json")])
    assert result.exit_code == 2
    assert "Error:" in result.output


def test_run_invalid_scenario(home):
    """Test exit code 2 and the offending field for a bad scenario."""
    scenario = write_scenario(home / "scenario.json", pair={"kind": "rank_one", "alpha": "x"})
    runner = CliRunner()
    result = runner.invoke(ssf_lab, ["run", str(scenario)])
    assert result.exit_code == 2
    assert "pair.alpha" in result.output


def test_run_use_cache_not_configured(home):
    """Test that --use-cache without a cache folder falls back to computing."""
    scenario = write_scenario(home / "scenario.json")
    runner = CliRunner()
    result = runner.invoke(
        ssf_lab, ["run", str(scenario), "--use-cache", "-o", str(home / "out")]
    )
    assert result.exit_code == 0
    assert "Cache not configured or disabled" in result.output


def test_random_unknown_suite(home):
    """Test exit code 2 for an unknown suite name."""
    runner = CliRunner()
    result = runner.invoke(ssf_lab, ["random", "--dim", "3", "--suites", "adjoint,bogus"])
    assert result.exit_code == 2
    assert "unknown suites" in result.output


def test_random_adjoint(home):
    """Test a random pair through the adjoint suite."""
    runner = CliRunner()
    result = runner.invoke(
        ssf_lab,
        ["random", "--dim", "3", "--seed", "5", "--suites", "adjoint", "-o", str(home / "r")],
    )
    assert result.exit_code == 0, result.output
    assert (home / "r" / "random-3-5_summary.json").exists()


def test_example_rank_one_invalid_alpha(home):
    """Test that a nonpositive coupling is a configuration error."""
    runner = CliRunner()
    result = runner.invoke(ssf_lab, ["example", "rank-one", "--alpha", "0"])
    assert result.exit_code == 2
    assert "alpha > 0" in result.output


# ---------------------------------------------------------------------------
# report
# ---------------------------------------------------------------------------


def test_report_from_summary(home):
    """Test re-reading a summary written by run."""
    scenario = write_scenario(home / "scenario.json")
    out = home / "out"
    runner = CliRunner()
    runner.invoke(ssf_lab, ["run", str(scenario), "-o", str(out), "--format", "json"])
    result = runner.invoke(ssf_lab, ["report", str(out / "cli-rank-one_summary.json")])
    assert result.exit_code == 0, result.output
    assert "Scenario 'CLI rank one'" in result.output
    assert "✓ All suites passed" in result.output


def test_report_missing_summary(home):
    """Test exit code 2 for a missing summary."""
    runner = CliRunner()
    result = runner.invoke(ssf_lab, ["report", str(home / "missing.json")])
    assert result.exit_code == 2
    assert "Could not read report" in result.output
