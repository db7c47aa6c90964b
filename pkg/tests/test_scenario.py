"""Tests for scenario parsing, validation and suite orchestration."""

import json
from pathlib import Path

import numpy as np
import pytest

from ssf_lab.cache import CacheManager
from ssf_lab.errors import GridTooCloseError, ScenarioParseError, ScenarioValidationError
from ssf_lab.scenario import (
    SUITES,
    Report,
    default_rational_functions,
    default_test_points,
    load_scenario,
    random_pair,
    run_scenario,
    scenario_from_dict,
)


@pytest.fixture
def rank_one_doc():
    """A minimal rank-one scenario document."""
    return {"name": "Rank One", "pair": {"kind": "rank_one", "alpha": 1.0}}


@pytest.fixture
def scenario_file(tmp_path, rank_one_doc):
    path = tmp_path / "rank_one.json"
    path.write_text(json.dumps(rank_one_doc, indent=2))
    return path


def test_defaults(rank_one_doc):
    """Test the defaults filled in for a minimal document."""
    scenario = scenario_from_dict(rank_one_doc)
    assert scenario.name == "Rank One"
    assert scenario.suites == SUITES
    assert scenario.grid_spec.points == 4000
    assert len(scenario.epsilon.values) == 7
    assert scenario.test_points_upper is None
    assert scenario.rational_functions is None
    assert scenario.divergence_n == (10, 100, 1000)


def test_full_document():
    """Test complex numbers, matrices, test points and functions."""
    doc = {
        "name": "explicit",
        "pair": {
            "kind": "explicit",
            "h0": [[1.0, [0.0, 0.5]], [[0.0, -0.5], -1.0]],
            "v": [[1.0, 0.0], [0.0, 0.0]],
        },
        "grid": {"points": 1000, "refine_levels": 6},
        "epsilon": {"values": [1e-2, 1e-3, 1e-4, 1e-5], "order": 2},
        "test_points": {"upper": [[1.0, 1.0]], "lower": [[1.0, -1.0]]},
        "rational_functions": [[{"pole": [0.0, 1.0], "order": 2, "coeff": [1.0, 0.5]}]],
        "suites": ["trace", "boundary", "trace"],
    }
    scenario = scenario_from_dict(doc)
    pair = scenario.build_pair()
    assert pair.h0.entries[0, 1] == pytest.approx(0.5j)
    assert scenario.test_points_upper == [1 + 1j]
    assert scenario.rational_functions[0].terms[0].coeff == 1 + 0.5j
    assert scenario.suites == ("trace", "boundary")


def test_to_dict_round_trip():
    """Test that the JSON form rebuilds the same scenario."""
    doc = {
        "name": "diag",
        "pair": {"kind": "diagonal_series", "n": 20, "rule": {"kind": "log_power", "param": 2.0}},
        "test_points": {"upper": [[0.0, 2.0]], "lower": [[0.0, -2.0]]},
        "suites": ["divergence"],
    }
    scenario = scenario_from_dict(doc)
    again = scenario_from_dict(json.loads(json.dumps(scenario.to_dict())))
    assert again.to_dict() == scenario.to_dict()
    assert again.build_pair().dim == 20


@pytest.mark.parametrize(
    "doc, field",
    [
        ([], None),
        ({"pair": {"kind": "unknown"}}, "pair.kind"),
        ({"pair": {"kind": "rank_one", "alpha": "big"}}, "pair.alpha"),
        ({"pair": {"kind": "random", "dim": 2.5}}, "pair.dim"),
        ({"pair": {"kind": "explicit", "h0": [[1.0]]}}, "pair.v"),
        ({"pair": {"kind": "rank_one"}, "suites": ["nope"]}, "suites"),
        ({"pair": {"kind": "rank_one"}, "grid": []}, "grid"),
        ({"pair": {"kind": "rank_one"}, "rational_functions": [[{"order": 1}]]},
         "rational_functions[0][0]"),
    ],
)
def test_parse_errors_name_the_field(doc, field):
    """Test that malformed fields are reported by path."""
    with pytest.raises(ScenarioParseError) as exc:
        scenario_from_dict(doc)
    assert exc.value.field == field


@pytest.mark.parametrize(
    "doc",
    [
        {"pair": {"kind": "rank_one", "alpha": -1.0}},
        {"pair": {"kind": "rank_one"}, "grid": {"points": 8}},
        {"pair": {"kind": "rank_one"}, "grid": {"gap_rel": 1.5}},
        {"pair": {"kind": "rank_one"}, "test_points": {"upper": [[1.0, -1.0]]}},
        {"pair": {"kind": "rank_one"}, "test_points": {"lower": [[1.0, 1.0]]}},
        {"pair": {"kind": "rank_one"}, "epsilon": {"values": [1e-2, 1e-3]}},
        {"pair": {"kind": "rank_one"}, "sweep": 2},
        {"pair": {"kind": "random", "dim": 0}},
        {"pair": {"kind": "diagonal_series", "n": 10, "rule": {"kind": "power", "param": 2.0}}},
        {"pair": {"kind": "explicit", "h0": [[0.0, 1.0], [0.0, 0.0]], "v": [[1.0, 0.0], [0.0, 1.0]]}},
        {"pair": {"kind": "explicit", "h0": [[0.0]], "v": [[-1.0]]}},
        {"pair": {"kind": "explicit_self_adjoint", "h0": [[0.0]], "v": [[1.0]]}},
        {"pair": {"kind": "rank_one"}, "divergence": {"n_values": [100, 10]}},
        {"pair": {"kind": "rank_one"}, "rational_functions": [[{"pole": [1.0, 0.0]}]]},
    ],
)
def test_validation_errors(doc):
    """Test that violated invariants are refused."""
    with pytest.raises(ScenarioValidationError):
        scenario_from_dict(doc)


def test_self_adjoint_pair_allows_krein_only():
    """Test that explicit_self_adjoint pairs accept the krein suite."""
    doc = {
        "pair": {"kind": "explicit_self_adjoint", "h0": [[0.0]], "v": [[-1.0]]},
        "suites": ["krein"],
    }
    scenario = scenario_from_dict(doc)
    h0, v = scenario.self_adjoint_pair()
    assert v.entries[0, 0] == -1.0
    assert scenario.build_pair().v.entries[0, 0] == pytest.approx(1.0)


def test_load_scenario(scenario_file):
    """Test reading a scenario file."""
    assert load_scenario(scenario_file).name == "Rank One"


def test_load_scenario_syntax_error(tmp_path):
    """Test that JSON syntax errors carry the line number."""
    path = tmp_path / "broken.json"
    path.write_text('{\n  "name": "x",\n  "pair": }\n')
    with pytest.raises(ScenarioParseError) as exc:
        load_scenario(path)
    assert exc.value.line == 3
    assert "line 3" in str(exc.value)


def test_load_scenario_missing_file(tmp_path):
    """Test that a missing file is a parse error."""
    with pytest.raises(ScenarioParseError):
        load_scenario(tmp_path / "missing.json")


# ---------------------------------------------------------------------------
# Defaults
# ---------------------------------------------------------------------------


def test_default_test_points():
    """Test 12 points per half-plane, mirrored."""
    upper, lower = default_test_points()
    assert len(upper) == len(lower) == 12
    assert all(z.imag > 0 for z in upper)
    assert lower == [z.conjugate() for z in upper]


def test_default_rational_functions():
    """Test that lower poles sit below spec(H)."""
    pair = random_pair(3, seed=2)
    functions = default_rational_functions(pair)
    assert len(functions) == 6
    depth = pair.norm_v
    for f in functions:
        for pole in f.poles:
            assert pole.imag > 0 or pole.imag < -depth


def test_random_pair():
    """Test ||H0|| = 1, tr V = 1 and reproducibility."""
    pair = random_pair(4, seed=7)
    assert pair.norm_h0 == pytest.approx(1.0)
    assert pair.trace_v == pytest.approx(1.0)
    assert np.array_equal(random_pair(4, seed=7).v.entries, pair.v.entries)


# ---------------------------------------------------------------------------
# Running
# ---------------------------------------------------------------------------


def test_run_without_boundary_suites():
    """Test the suites that need no boundary data."""
    scenario = scenario_from_dict(
        {"name": "quick", "pair": {"kind": "rank_one"}, "suites": ["adjoint", "divergence"]}
    )
    report = run_scenario(scenario)
    assert report.boundary is None
    assert [s.name for s in report.suites] == ["adjoint", "divergence"]
    assert report.suite("adjoint").passed
    divergence = report.suite("divergence")
    assert divergence.error is None
    assert len(divergence.details["values"]) == 3


def test_adjoint_skips_poles_on_adjoint_spectrum():
    """Test that a pole at i is skipped when H* has the eigenvalue i."""
    scenario = scenario_from_dict(
        {
            "name": "rank one",
            "pair": {"kind": "rank_one"},
            "rational_functions": [[{"pole": [0.0, 1.0]}], [{"pole": [0.0, -2.0]}]],
            "suites": ["adjoint"],
        }
    )
    suite = run_scenario(scenario).suite("adjoint")
    assert suite.passed
    assert suite.details["functions_checked"] == 1


def test_adjoint_falls_back_when_every_pole_is_skipped():
    """Test the replacement function used when no scenario function qualifies."""
    scenario = scenario_from_dict(
        {
            "name": "rank one",
            "pair": {"kind": "rank_one"},
            "rational_functions": [[{"pole": [0.0, 1.0]}], [{"pole": [0.0, 1.01]}]],
            "suites": ["adjoint"],
        }
    )
    suite = run_scenario(scenario).suite("adjoint")
    assert suite.passed
    assert suite.details["functions_checked"] == 1


def test_weakl1_two_level():
    """Test that the ξ level sets stay below rank/2 on the coupled pair."""
    scenario = scenario_from_dict(
        {
            "name": "two level",
            "pair": {
                "kind": "explicit",
                "h0": [[1.0, 0.5], [0.5, -1.0]],
                "v": [[1.0, 0.0], [0.0, 0.0]],
            },
            "suites": ["weakl1"],
        }
    )
    suite = run_scenario(scenario).suite("weakl1")
    assert suite.passed, [r for r in suite.residuals if not r.passed] or suite.error


def test_run_boundary_suite_threads():
    """Test a boundary run with worker threads."""
    scenario = scenario_from_dict(
        {
            "name": "rank one",
            "pair": {"kind": "rank_one"},
            "suites": ["boundary", "adjoint"],
        }
    )
    report = run_scenario(scenario, threads=2)
    assert report.boundary is not None
    boundary = report.suite("boundary")
    assert boundary.error is None
    names = [r.name for r in boundary.residuals]
    assert "norm_identity" in names
    assert "zeta_closed_form" in names
    assert boundary.details["zeta_integral"] == pytest.approx(np.pi, rel=1e-3)


def test_failed_boundary_is_attributed(monkeypatch):
    """Test that a boundary failure marks dependent suites without stopping others."""

    def fail(*args, **kwargs):
        raise GridTooCloseError("grid point inside an exclusion zone")

    monkeypatch.setattr("ssf_lab.scenario.boundary_values", fail)
    scenario = scenario_from_dict(
        {"name": "tight", "pair": {"kind": "rank_one"}, "suites": ["weakl1", "adjoint"]}
    )
    report = run_scenario(scenario)
    assert report.suite("weakl1").error is not None
    assert report.suite("adjoint").passed
    assert not report.passed


def test_run_uses_cache(tmp_path):
    """Test that boundary data is saved to and read from the cache."""
    cache = CacheManager(cache_folder=str(tmp_path / "cache"))
    scenario = scenario_from_dict(
        {
            "name": "cached",
            "pair": {"kind": "rank_one"},
            "grid": {"points": 1000, "refine_levels": 6},
            "suites": ["boundary"],
        }
    )
    first = run_scenario(scenario, cache=cache)
    keys = cache.list_keys()
    assert len(keys) == 1
    assert keys[0].startswith("cached-")
    second = run_scenario(scenario, cache=cache)
    assert np.array_equal(first.boundary.zeta, second.boundary.zeta)
    assert len(cache.list_versions(keys[0])) == 1


def test_cache_key_follows_extrapolation_order(tmp_path):
    """Test that changing only the extrapolation order misses the cache."""
    cache = CacheManager(cache_folder=str(tmp_path / "cache"))
    doc = {
        "name": "cached",
        "pair": {"kind": "rank_one"},
        "grid": {"points": 1000, "refine_levels": 6},
        "epsilon": {"values": [1e-2, 1e-3, 1e-4, 1e-5], "order": 1},
        "suites": ["boundary"],
    }
    run_scenario(scenario_from_dict(doc), cache=cache)
    doc["epsilon"]["order"] = 2
    run_scenario(scenario_from_dict(doc), cache=cache)
    assert len(cache.list_keys()) == 2


def test_report_round_trip():
    """Test the versioned summary form."""
    scenario = scenario_from_dict(
        {"name": "quick", "pair": {"kind": "rank_one"}, "suites": ["divergence"]}
    )
    report = run_scenario(scenario)
    data = json.loads(json.dumps(report.to_dict()))
    assert data["schema"] == "ssf-lab/report/1"
    restored = Report.from_dict(data)
    assert restored.passed == report.passed
    assert restored.suites[0].residuals == report.suites[0].residuals


def test_report_schema_checked():
    """Test that unknown summary schemas are refused."""
    with pytest.raises(ScenarioParseError):
        Report.from_dict({"schema": "other", "scenario": "x", "suites": []})


SCENARIO_DIR = Path(__file__).resolve().parent.parent / "scenarios"


@pytest.mark.parametrize("path", sorted(SCENARIO_DIR.glob("*.json")), ids=lambda p: p.stem)
def test_shipped_scenarios_pass(path):
    """Test that every bundled scenario file loads, runs and passes."""
    scenario = load_scenario(path)
    report = run_scenario(scenario)
    assert len(report.suites) == len(scenario.suites)
    assert report.passed, {s.name: s.error or s.residuals for s in report.suites if not s.passed}
