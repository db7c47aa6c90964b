"""Cache of computed boundary data.

Boundary values are the expensive step of a run, so they are stored as
JSON and reused by ``ssf-lab run --use-cache``. Storage is local or remote
(S3, GCS, Azure) through cloudpathlib, with timestamp-versioned folders:
``base/key/YYYYMMDD_HHMMSS/key.json``.

Example:
    >>> from ssf_lab.cache import CacheManager
    >>> cache = CacheManager(cache_folder="/tmp/ssf-cache")
    >>> version = cache.save("rank-one-3f2a", {"grid": [0.5, 1.0]})
    >>> entry = cache.load("rank-one-3f2a", version="latest")
"""

import hashlib
import json
import shutil
from dataclasses import dataclass
from datetime import datetime
from pathlib import Path
from typing import Any, Dict, List, Optional, Union

import numpy as np
from cloudpathlib import AnyPath, CloudPath
from loguru import logger
from slugify import slugify

__all__ = ["CacheManager", "CacheConfig", "boundary_cache_key"]

PathLike = Union[str, Path, CloudPath, None]


def boundary_cache_key(name: str, h0, v, grid, schedule, order: int) -> str:
    """Key for one boundary computation: slug of ``name`` plus a digest of the inputs.

    :param name: scenario name
    :param h0: H0 entries
    :param v: V entries
    :param grid: λ grid
    :param schedule: epsilon values
    :param order: extrapolation order
    """
    digest = hashlib.sha256(f"order={int(order)}".encode())
    for part in (h0, v, grid, schedule):
        digest.update(np.ascontiguousarray(np.asarray(part, dtype=complex)).tobytes())
    return f"{slugify(name) or 'scenario'}-{digest.hexdigest()[:12]}"


@dataclass
class CacheConfig:
    """Where boundary data lives and whether runs may touch it.

    ``versioned=False`` writes ``base/key.json`` without a version folder.
    """

    cache_folder: PathLike = None
    enabled: bool = True
    versioned: bool = True

    @property
    def cache_path(self) -> Optional[AnyPath]:
        return None if self.cache_folder is None else AnyPath(self.cache_folder)


def _stamp() -> str:
    return datetime.now().strftime("%Y%m%d_%H%M%S")


def _remove(path: AnyPath):
    if not path.is_dir():
        path.unlink()
    elif isinstance(path, CloudPath):
        path.rmtree()
    else:
        shutil.rmtree(str(path))


class CacheManager:
    """Versioned JSON store for boundary payloads, one folder per key."""

    def __init__(self, cache_folder: PathLike = None, config: Optional[CacheConfig] = None):
        """
        :param cache_folder: base folder, takes precedence over ``config.cache_folder``
        :param config: full settings
        """
        self.config = config or CacheConfig()
        if cache_folder is not None or config is None:
            self.config.cache_folder = cache_folder

    @property
    def root(self) -> Optional[AnyPath]:
        return self.config.cache_path

    def _active(self) -> bool:
        if self.config.enabled and self.root is not None:
            return True
        logger.debug("Boundary cache off (disabled or no folder set)")
        return False

    def _entry_file(self, cache_key: str, version: Optional[str]) -> AnyPath:
        folder = self.root / cache_key / version if version else self.root
        return folder / f"{cache_key}.json"

    def save(
        self,
        cache_key: str,
        data: Any,
        version: Optional[str] = None,
        metadata: Optional[Dict[str, Any]] = None,
    ) -> Optional[str]:
        """Store ``data`` under ``cache_key``.

        :param version: folder name; a fresh timestamp when None
        :param metadata: stored next to the payload (scenario name, dimension)
        :return: the version written, or None when nothing was written
        """
        if not self._active():
            return None
        if version is None and self.config.versioned:
            version = _stamp()
        target = self._entry_file(cache_key, version)
        record = {
            "cache_key": cache_key,
            "cached_at": datetime.now().isoformat(),
            "version": version or _stamp(),
            "metadata": metadata or {},
            "data": data,
        }
        try:
            text = json.dumps(record, indent=2, ensure_ascii=False)
            if not isinstance(target, CloudPath):
                Path(str(target.parent)).mkdir(parents=True, exist_ok=True)
            target.write_text(text, encoding="utf-8")
        except (OSError, TypeError, ValueError) as e:
            logger.warning(f"Boundary data for {cache_key} not cached: {e}")
            return None
        logger.info(f"Boundary data cached at {target}")
        return record["version"]

    def load(self, cache_key: str, version: Optional[str] = "latest") -> Optional[Dict[str, Any]]:
        """Read one entry back.

        ``version`` is ``"latest"``, a version folder name, or None for an
        unversioned entry. Returns the stored record or None on a miss.
        """
        if not self._active():
            return None
        if version == "latest":
            known = self.list_versions(cache_key)
            if not known:
                logger.debug(f"Cache miss for {cache_key}")
                return None
            version = known[0]
        source = self._entry_file(cache_key, version)
        try:
            if not source.exists():
                logger.debug(f"Cache miss for {cache_key} at {source}")
                return None
            record = json.loads(source.read_text(encoding="utf-8"))
        except (OSError, ValueError) as e:
            logger.warning(f"Unreadable cache entry {source}: {e}")
            return None
        logger.info(f"Boundary data read from {source}")
        return record

    def list_versions(self, cache_key: str) -> List[str]:
        """Version folders of ``cache_key``, newest first."""
        if self.root is None:
            return []
        folder = self.root / cache_key
        try:
            if not folder.exists():
                return []
            found = [
                child.name
                for child in folder.iterdir()
                if child.is_dir() and (child / f"{cache_key}.json").exists()
            ]
        except OSError as e:
            logger.warning(f"Cannot scan {folder}: {e}")
            return []
        return sorted(found, reverse=True)

    def list_keys(self) -> List[str]:
        if self.root is None:
            return []
        try:
            if not self.root.exists():
                return []
            return sorted(
                child.name
                for child in self.root.iterdir()
                if child.is_dir() and self.list_versions(child.name)
            )
        except OSError as e:
            logger.warning(f"Cannot scan {self.root}: {e}")
            return []

    def clear(self, cache_key: Optional[str] = None, version: Optional[str] = None):
        """Delete everything, every version of ``cache_key``, or a single version."""
        if self.root is None:
            logger.warning("No cache folder set; nothing to clear")
            return
        if cache_key is None:
            targets = list(self.root.iterdir()) if self.root.exists() else []
        elif version is None:
            targets = [self.root / cache_key]
        else:
            targets = [self.root / cache_key / version]
        try:
            for target in targets:
                if target.exists():
                    _remove(target)
        except OSError as e:
            logger.error(f"Cache clear stopped: {e}")
            return
        logger.info(f"Cleared {cache_key or 'all keys'}{f' @ {version}' if version else ''}")
