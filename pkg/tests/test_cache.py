"""Tests for the boundary-data cache."""

import json
import time

import numpy as np
import pytest

from ssf_lab.cache import CacheConfig, CacheManager, boundary_cache_key

GRID = {"grid": [0.5, 1.0], "zeta": [0.8, 0.35], "xi": [0.35, 0.25]}


@pytest.fixture
def cache_root(tmp_path):
    return tmp_path / "cache"


@pytest.fixture
def manager(cache_root):
    """A manager writing under a temporary folder."""
    return CacheManager(cache_folder=str(cache_root))


def test_config_path():
    """Test that the folder is exposed as a path."""
    config = CacheConfig(cache_folder="/tmp/ssf-cache")
    assert config.enabled is True
    assert config.versioned is True
    assert config.cache_path.name == "ssf-cache"
    assert CacheConfig().cache_path is None


def test_save_then_load_latest(manager):
    """Test that a boundary payload comes back unchanged."""
    version = manager.save("rank-one-abc", GRID)
    assert version is not None

    entry = manager.load("rank-one-abc")
    assert entry["cache_key"] == "rank-one-abc"
    assert entry["version"] == version
    assert entry["data"] == GRID


def test_latest_version_wins(manager):
    """Test that the newest run is returned by default."""
    first = manager.save("two-level", {"run": 1})
    time.sleep(1)  # version folders have one-second resolution
    second = manager.save("two-level", {"run": 2})

    assert manager.list_versions("two-level") == [second, first]
    assert manager.load("two-level")["data"]["run"] == 2
    assert manager.load("two-level", version=first)["data"]["run"] == 1


def test_metadata_stored(manager):
    """Test that scenario metadata travels with the payload."""
    version = manager.save("rank-one", GRID, metadata={"scenario": "rank one", "dim": 1})
    assert manager.load("rank-one", version=version)["metadata"] == {
        "scenario": "rank one",
        "dim": 1,
    }


def test_unversioned_entry(cache_root):
    """Test that versioning can be switched off."""
    manager = CacheManager(config=CacheConfig(cache_folder=str(cache_root), versioned=False))
    manager.save("flat", GRID)
    assert (cache_root / "flat.json").exists()
    assert manager.load("flat", version=None)["data"] == GRID


def test_missing_entry(manager):
    """Test that unknown keys and versions are misses."""
    assert manager.load("nothing") is None
    manager.save("rank-one", GRID)
    assert manager.load("rank-one", version="19990101_000000") is None


# ---------------------------------------------------------------------------
# Listing and clearing
# ---------------------------------------------------------------------------


def test_list_keys_sorted(manager):
    """Test that keys are listed alphabetically."""
    manager.save("two-level", GRID)
    manager.save("rank-one", GRID)
    assert manager.list_keys() == ["rank-one", "two-level"]


def test_clear_everything(manager):
    """Test clearing the whole cache."""
    manager.save("rank-one", GRID)
    manager.save("two-level", GRID)
    manager.clear()
    assert manager.list_keys() == []


def test_clear_one_key(manager):
    """Test that clearing a key keeps the others."""
    manager.save("rank-one", GRID)
    manager.save("two-level", GRID)
    manager.clear(cache_key="rank-one")
    assert manager.list_keys() == ["two-level"]


def test_clear_one_version(manager):
    """Test that clearing one version leaves the others."""
    old = manager.save("rank-one", {"run": 1}, version="20260101_000000")
    new = manager.save("rank-one", {"run": 2}, version="20260102_000000")
    manager.clear(cache_key="rank-one", version=old)
    assert manager.list_versions("rank-one") == [new]


def test_disabled(cache_root):
    """Test that a disabled cache neither writes nor reads."""
    manager = CacheManager(config=CacheConfig(cache_folder=str(cache_root), enabled=False))
    assert manager.save("rank-one", GRID) is None
    assert manager.load("rank-one") is None
    assert not cache_root.exists()


def test_no_folder():
    """Test a manager without a folder."""
    manager = CacheManager(cache_folder=None)
    assert manager.save("rank-one", GRID) is None
    assert manager.load("rank-one") is None
    assert manager.list_keys() == []
    manager.clear()


def test_unserializable_payload(manager):
    """Test that a payload json cannot encode is reported, not raised."""
    assert manager.save("rank-one", {"bad": object()}) is None
    assert manager.list_keys() == []


def test_layout_on_disk(manager, cache_root):
    """Test the folder layout base/key/version/key.json."""
    version = manager.save("boundary", GRID)
    record = json.loads((cache_root / "boundary" / version / "boundary.json").read_text())
    assert set(record) == {"cache_key", "cached_at", "version", "metadata", "data"}


# ---------------------------------------------------------------------------
# Cache keys
# ---------------------------------------------------------------------------


def test_boundary_cache_key_is_stable():
    """Test that equal inputs give the same key."""
    args = ([[0.0]], [[1.0]], np.linspace(-1, 1, 5), [1e-2, 1e-3], 2)
    assert boundary_cache_key("Rank One", *args) == boundary_cache_key("Rank One", *args)
    assert boundary_cache_key("Rank One", *args).startswith("rank-one-")


def test_boundary_cache_key_depends_on_inputs():
    """Test that changing V or the schedule changes the key."""
    grid = np.linspace(-1, 1, 5)
    base = boundary_cache_key("s", [[0.0]], [[1.0]], grid, [1e-2], 2)
    assert base != boundary_cache_key("s", [[0.0]], [[2.0]], grid, [1e-2], 2)
    assert base != boundary_cache_key("s", [[0.0]], [[1.0]], grid, [1e-3], 2)


def test_boundary_cache_key_depends_on_order():
    """Test that only changing the extrapolation order gives a new key."""
    args = ([[0.0]], [[1.0]], np.linspace(-1, 1, 5), [1e-2, 1e-3, 1e-4, 1e-5])
    assert boundary_cache_key("s", *args, 1) != boundary_cache_key("s", *args, 2)


def test_boundary_cache_key_empty_name():
    """Test that an unsluggable name falls back to 'scenario'."""
    key = boundary_cache_key("???", [[0.0]], [[1.0]], [0.0], [1e-2], 2)
    assert key.startswith("scenario-")
