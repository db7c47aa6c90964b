"""Tests for configuration handling."""

from pathlib import Path

import pytest

from ssf_lab.config import THREADS_ENV, LabConfig, resolve_output_path, resolve_threads


@pytest.fixture
def config(tmp_path):
    """A config stored under a temporary folder."""
    return LabConfig(config_file=tmp_path / ".ssf_lab" / "config.yaml")


def test_defaults_without_file(config):
    """Test the defaults when no config file exists."""
    assert config.default_output_folder is None
    assert config.cache_folder is None
    assert config.cache_enabled is True
    assert config.threads == 1
    assert config.tolerances == {"tol_res": 1e-8, "tol_psd": 1e-12, "gap_rel": 1e-3}
    assert config.epsilon["order"] == 2
    assert config.epsilon["start"] == pytest.approx(1e-2)


def test_set_and_get_nested(config):
    """Test dot-notation keys are written and read back."""
    config.set("tolerances.gap_rel", 5e-3)
    assert config.get("tolerances.gap_rel") == 5e-3
    assert config.config_file.exists()

    reread = LabConfig(config_file=config.config_file)
    assert reread.tolerances["gap_rel"] == 5e-3
    # Untouched defaults survive a partial section.
    assert reread.tolerances["tol_psd"] == 1e-12


def test_set_nested_under_scalar_raises(config):
    """Test that nesting under a non-dict value is refused."""
    config.threads = 2
    with pytest.raises(ValueError, match="not a dictionary"):
        config.set("threads.max", 3)


def test_threads_must_be_positive(config):
    """Test the threads setter rejects zero."""
    with pytest.raises(ValueError):
        config.threads = 0


def test_invalid_yaml_falls_back_to_defaults(config):
    """Test that a broken config file is ignored."""
    config.config_dir.mkdir(parents=True)
    config.config_file.write_text("threads: [1, 2\n")
    assert config.threads == 1


def test_cloud_cache_folder_kept_as_is(config):
    """Test that object storage URLs are not turned into local paths."""
    config.cache_folder = "s3://bucket/ssf-cache"
    assert config.cache_folder == "s3://bucket/ssf-cache"


def test_local_cache_folder_is_absolute(config, tmp_path, monkeypatch):
    """Test that relative cache folders become absolute."""
    monkeypatch.chdir(tmp_path)
    config.cache_folder = "cache"
    assert config.cache_folder == str(tmp_path / "cache")


# ---------------------------------------------------------------------------
# Path cleaning
# ---------------------------------------------------------------------------


def test_windows_path_with_trailing_quote(config):
    """Test a shell-escaped trailing quote is stripped."""
    config.default_output_folder = r'C:\Users\TestUser\runs"'
    result = config.default_output_folder
    assert not result.endswith('"')
    assert "runs" in result


def test_path_with_surrounding_quotes(config):
    """Test that surrounding quotes are stripped."""
    config.default_output_folder = '"/home/user/runs"'
    assert config.default_output_folder == str(Path("/home/user/runs").absolute())


def test_path_with_tilde(config, tmp_path, monkeypatch):
    """Test that the home directory is expanded."""
    monkeypatch.setenv("HOME", str(tmp_path))
    config.default_output_folder = "~/runs"
    assert not config.default_output_folder.startswith("~")
    assert config.default_output_folder.endswith("runs")


# ---------------------------------------------------------------------------
# Resolution helpers
# ---------------------------------------------------------------------------


def test_resolve_output_path_absolute(config):
    """Test absolute paths are returned unchanged."""
    assert resolve_output_path("/data/runs", config) == Path("/data/runs")


def test_resolve_output_path_relative_to_default(config, tmp_path):
    """Test relative paths join the default output folder."""
    config.default_output_folder = str(tmp_path / "runs")
    assert resolve_output_path("rank-one", config) == tmp_path / "runs" / "rank-one"


def test_resolve_output_path_relative_to_cwd(config, tmp_path, monkeypatch):
    """Test relative paths join the working directory without a default."""
    monkeypatch.chdir(tmp_path)
    assert resolve_output_path("rank-one", config) == tmp_path / "rank-one"


def test_resolve_output_path_none(config):
    """Test that no input gives None."""
    assert resolve_output_path(None, config) is None


def test_resolve_threads_env_wins(config, monkeypatch):
    """Test the environment variable overrides the config."""
    config.threads = 2
    monkeypatch.setenv(THREADS_ENV, "6")
    assert resolve_threads(config) == 6


def test_resolve_threads_ignores_bad_env(config, monkeypatch):
    """Test that invalid environment values fall back to the config."""
    config.threads = 3
    monkeypatch.setenv(THREADS_ENV, "many")
    assert resolve_threads(config) == 3
    monkeypatch.setenv(THREADS_ENV, "0")
    assert resolve_threads(config) == 3
