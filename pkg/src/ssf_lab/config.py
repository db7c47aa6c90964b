"""Configuration management for ssf-lab using YAML.

Settings live in ``~/.ssf_lab/config.yaml``. Missing keys fall back to
:data:`DEFAULTS`; sections (``tolerances``, ``epsilon``) merge key by key.
"""

import copy
import os
from pathlib import Path
from typing import Any, Dict, Optional

import yaml
from loguru import logger

__all__ = [
    "DEFAULTS",
    "LabConfig",
    "resolve_output_path",
    "resolve_threads",
    "THREADS_ENV",
]

THREADS_ENV = "SSF_LAB_THREADS"
_CLOUD_PREFIXES = ("s3://", "gs://", "az://", "file://")

DEFAULTS: Dict[str, Any] = {
    "default_output_folder": None,
    "cache_folder": None,
    "cache_enabled": True,
    "threads": 1,
    "tolerances": {"tol_res": 1e-8, "tol_psd": 1e-12, "gap_rel": 1e-3},
    "epsilon": {"start": 1e-2, "stop": 1e-5, "ratio": 10.0**-0.5, "order": 2},
}


def _unquote(value: str) -> str:
    return value.strip('"').strip("'")


def _absolute(value: str) -> str:
    """Absolute, user-expanded form of a local path typed on the shell."""
    return str(Path(_unquote(value)).expanduser().absolute())


def _merged(stored: Dict[str, Any]) -> Dict[str, Any]:
    out = copy.deepcopy(DEFAULTS)
    for key, value in stored.items():
        if isinstance(value, dict) and isinstance(out.get(key), dict):
            out[key].update(value)
        else:
            out[key] = value
    return out


class LabConfig:
    """Persistent settings of the lab.

    Holds the output and cache folders, the worker thread count and the
    numerical defaults (tolerances and the epsilon schedule) used when a
    scenario file leaves them out.

    Example usage:
        config = LabConfig()
        config.default_output_folder = "/path/to/runs"
        config.set("tolerances.gap_rel", 1e-3)
    """

    def __init__(self, config_file: Optional[Path] = None):
        """:param config_file: YAML file, ``~/.ssf_lab/config.yaml`` when None"""
        if config_file is None:
            config_file = Path.home() / ".ssf_lab" / "config.yaml"
        self._file = Path(config_file)
        self._cached: Optional[Dict[str, Any]] = None

    def _read(self) -> Dict[str, Any]:
        if not self._file.exists():
            return copy.deepcopy(DEFAULTS)
        try:
            stored = yaml.safe_load(self._file.read_text(encoding="utf-8"))
        except (OSError, yaml.YAMLError) as e:
            logger.warning(f"Ignoring unreadable config {self._file}: {e}")
            stored = None
        return _merged(stored if isinstance(stored, dict) else {})

    def _write(self, settings: Dict[str, Any]):
        self._file.parent.mkdir(parents=True, exist_ok=True)
        self._file.write_text(
            yaml.dump(settings, default_flow_style=False, sort_keys=False), encoding="utf-8"
        )
        self._cached = None

    @property
    def data(self) -> Dict[str, Any]:
        """Effective settings, defaults included."""
        if self._cached is None:
            self._cached = self._read()
        return self._cached

    def reload(self):
        self._cached = None

    def get(self, key: str, default: Any = None) -> Any:
        """Look up a dotted key such as ``epsilon.order``."""
        node: Any = self.data
        for part in key.split("."):
            if not isinstance(node, dict) or part not in node:
                return default
            node = node[part]
        return node

    def set(self, key: str, value: Any):
        """Store a dotted key and write the file.

        :raises ValueError: when a parent of ``key`` holds a scalar
        """
        settings = copy.deepcopy(self.data)
        *parents, leaf = key.split(".")
        node = settings
        for part in parents:
            child = node.setdefault(part, {})
            if not isinstance(child, dict):
                raise ValueError(
                    f"Cannot set nested key '{key}': '{part}' is a "
                    f"{type(child).__name__}, not a dictionary"
                )
            node = child
        node[leaf] = value
        self._write(settings)

    @property
    def default_output_folder(self) -> Optional[str]:
        """Parent folder for artifacts written with relative ``--output`` paths."""
        return self.get("default_output_folder")

    @default_output_folder.setter
    def default_output_folder(self, value: Optional[str]):
        self.set("default_output_folder", None if value is None else _absolute(value))

    @property
    def cache_folder(self) -> Optional[str]:
        """Cache folder, local or object storage (``s3://``, ``gs://``, ``az://``)."""
        return self.get("cache_folder")

    @cache_folder.setter
    def cache_folder(self, value: Optional[str]):
        if value is not None:
            bare = _unquote(value)
            value = bare if bare.startswith(_CLOUD_PREFIXES) else _absolute(value)
        self.set("cache_folder", value)

    @property
    def cache_enabled(self) -> bool:
        return bool(self.get("cache_enabled", True))

    @cache_enabled.setter
    def cache_enabled(self, value: bool):
        self.set("cache_enabled", bool(value))

    @property
    def threads(self) -> int:
        """Configured worker threads (at least 1)."""
        try:
            return max(int(self.get("threads", 1)), 1)
        except (TypeError, ValueError):
            logger.warning(f"Ignoring invalid threads setting {self.get('threads')!r}")
            return 1

    @threads.setter
    def threads(self, value: int):
        if int(value) < 1:
            raise ValueError(f"threads must be at least 1, got {value}")
        self.set("threads", int(value))

    @property
    def tolerances(self) -> Dict[str, float]:
        """``tol_res``, ``tol_psd`` and ``gap_rel``."""
        defaults = DEFAULTS["tolerances"]
        return {k: float(self.get(f"tolerances.{k}", v)) for k, v in defaults.items()}

    @property
    def epsilon(self) -> Dict[str, float]:
        """Default epsilon schedule: ``start``, ``stop``, ``ratio`` and ``order``."""
        defaults = DEFAULTS["epsilon"]
        out = {k: float(self.get(f"epsilon.{k}", v)) for k, v in defaults.items()}
        out["order"] = int(out["order"])
        return out

    @property
    def config_dir(self) -> Path:
        return self._file.parent

    @property
    def config_file(self) -> Path:
        return self._file


def resolve_output_path(
    path_input: Optional[str], config: Optional[LabConfig] = None
) -> Optional[Path]:
    """Where artifacts for ``--output path_input`` go.

    Absolute paths stay; relative ones land under the configured output
    folder, or the working directory when none is set.
    """
    if path_input is None:
        return None
    path = Path(path_input)
    if path.is_absolute():
        return path
    base = (config or LabConfig()).default_output_folder
    return (Path(base) if base else Path.cwd()) / path


def resolve_threads(config: Optional[LabConfig] = None) -> int:
    """Worker threads: ``SSF_LAB_THREADS``, then the config, then 1."""
    raw = os.environ.get(THREADS_ENV)
    if raw:
        try:
            value = int(raw)
        except ValueError:
            logger.warning(f"Ignoring non-integer {THREADS_ENV}={raw!r}")
        else:
            if value >= 1:
                return value
            logger.warning(f"Ignoring {THREADS_ENV}={raw!r}; it must be at least 1")
    return (config or LabConfig()).threads
