"""Report artifacts: CSV tables, the JSON summary and SVG plots."""

import json
from pathlib import Path
from typing import Iterable, List, Union

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402
import pandas as pd  # noqa: E402
from loguru import logger  # noqa: E402
from slugify import slugify  # noqa: E402

from ssf_lab.errors import ArtifactIoError, ScenarioParseError  # noqa: E402
from ssf_lab.scenario import Report  # noqa: E402

__all__ = ["FORMATS", "BOUNDARY_COLUMNS", "emit", "load_report", "boundary_frame"]

FORMATS = ("csv", "json", "svg")
BOUNDARY_COLUMNS = ["lambda", "zeta", "xi", "err_zeta", "err_xi"]


def boundary_frame(report: Report) -> pd.DataFrame:
    """Boundary values as a table with columns ``lambda, zeta, xi, err_zeta, err_xi``."""
    data = report.boundary
    return pd.DataFrame(
        {
            "lambda": data.grid,
            "zeta": data.zeta,
            "xi": data.xi,
            "err_zeta": data.err_zeta,
            "err_xi": data.err_xi,
        },
        columns=BOUNDARY_COLUMNS,
    )


def _profile_frame(report: Report) -> pd.DataFrame:
    frames = [
        pd.DataFrame(
            {"profile": name, "t": p.t_values, "t_times_measure": p.t_times_measure}
        )
        for name, p in report.profiles.items()
    ]
    return pd.concat(frames, ignore_index=True)


def _plot_boundary(report: Report, target: Path):
    data = report.boundary
    fig, axes = plt.subplots(2, 1, figsize=(7, 6), sharex=True)
    axes[0].plot(data.grid, data.zeta, lw=1)
    axes[0].set_ylabel(r"$\zeta(\lambda)$")
    axes[1].plot(data.grid, data.xi, lw=1, color="tab:orange")
    axes[1].set_ylabel(r"$\xi(\lambda)$")
    axes[1].set_xlabel(r"$\lambda$")
    axes[0].set_title(report.scenario)
    fig.tight_layout()
    fig.savefig(target, format="svg")
    plt.close(fig)


def _plot_profiles(report: Report, target: Path):
    fig, ax = plt.subplots(figsize=(7, 4))
    for name, p in report.profiles.items():
        ax.loglog(p.t_values, np.maximum(p.t_times_measure, 1e-300), ".-", label=name)
    ax.set_xlabel("t")
    ax.set_ylabel("t * m{|f| > t}")
    ax.legend(loc="best")
    fig.tight_layout()
    fig.savefig(target, format="svg")
    plt.close(fig)


def _plot_truncations(report: Report, target: Path):
    fig, ax = plt.subplots(figsize=(7, 4))
    for name, rows in report.truncations.items():
        lows = np.array([b for b, _, _ in rows])
        values = np.array([v for _, _, v in rows], dtype=complex)
        drift = np.abs(values - values[-1])
        ax.loglog(lows, np.maximum(drift, 1e-300), ".-", label=name)
    ax.invert_xaxis()
    ax.set_xlabel("lower truncation level b")
    ax.set_ylabel("|partial - final|")
    ax.legend(loc="best")
    fig.tight_layout()
    fig.savefig(target, format="svg")
    plt.close(fig)


def emit(
    report: Report, formats: Iterable[str], out_dir: Union[str, Path]
) -> List[Path]:
    """Write the requested artifacts into ``out_dir``.

    ``csv`` writes ``<slug>_boundary.csv`` and, when profiles exist,
    ``<slug>_weak_l1.csv``; ``json`` writes ``<slug>_summary.json``; ``svg``
    writes plots of ζ and ξ, weak-L¹ profiles and truncation traces.

    :param report: a finished report
    :param formats: subset of ``csv``, ``json``, ``svg``
    :param out_dir: target folder, created if missing
    :return: paths written
    :raises ArtifactIoError: when a file cannot be written
    """
    formats = set(formats)
    unknown = formats - set(FORMATS)
    if unknown:
        raise ArtifactIoError(f"Unknown artifact formats: {sorted(unknown)}")
    out_dir = Path(out_dir)
    slug = slugify(report.scenario) or "scenario"
    written: List[Path] = []
    try:
        out_dir.mkdir(parents=True, exist_ok=True)
        if "csv" in formats and report.boundary is not None:
            target = out_dir / f"{slug}_boundary.csv"
            boundary_frame(report).to_csv(target, index=False, float_format="%.17g")
            written.append(target)
        if "csv" in formats and report.profiles:
            target = out_dir / f"{slug}_weak_l1.csv"
            _profile_frame(report).to_csv(target, index=False, float_format="%.17g")
            written.append(target)
        if "svg" in formats:
            plots = []
            if report.boundary is not None:
                plots.append(("boundary", _plot_boundary))
            if report.profiles:
                plots.append(("weak_l1", _plot_profiles))
            if report.truncations:
                plots.append(("truncations", _plot_truncations))
            for name, draw in plots:
                target = out_dir / f"{slug}_{name}.svg"
                draw(report, target)
                written.append(target)
        if "json" in formats:
            target = out_dir / f"{slug}_summary.json"
            report.artifacts = [p.name for p in written] + [target.name]
            with open(target, "w", encoding="utf-8") as fp:
                json.dump(report.to_dict(), fp, indent=2)
            written.append(target)
        else:
            report.artifacts = [p.name for p in written]
    except OSError as e:
        raise ArtifactIoError(f"Could not write artifacts to {out_dir}: {e}") from e
    for path in written:
        logger.info(f"Wrote {path}")
    return written


def load_report(path: Union[str, Path]) -> Report:
    """Read a JSON summary written by :func:`emit`.

    :raises ArtifactIoError: when the file is missing or not a report
    """
    path = Path(path)
    try:
        with open(path, "r", encoding="utf-8") as fp:
            data = json.load(fp)
        if not isinstance(data, dict):
            raise ArtifactIoError(f"Could not read report {path}: not a JSON object")
        return Report.from_dict(data)
    except (OSError, ValueError, KeyError, TypeError, ScenarioParseError) as e:
        raise ArtifactIoError(f"Could not read report {path}: {e}") from e
