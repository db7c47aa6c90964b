import os
import sys
from pathlib import Path
from typing import Any, Dict, Iterable, List, Optional

import click
import pandas as pd
from loguru import logger
from slugify import slugify

from ssf_lab.cache import CacheManager
from ssf_lab.config import LabConfig, resolve_output_path, resolve_threads
from ssf_lab.errors import ArtifactIoError, ScenarioError
from ssf_lab.io import FORMATS, emit, load_report
from ssf_lab.scenario import (
    SUITES,
    Report,
    Scenario,
    load_scenario,
    run_scenario,
    scenario_from_dict,
)

logger.remove()
logger.add(sys.stderr, level="INFO", enqueue=True)

EXIT_PASS = 0
EXIT_FAIL = 1
EXIT_CONFIG = 2


def _display_table(rows: List[Dict[str, Any]], title: str):
    """Print records as a table framed by rules."""
    if not rows:
        click.echo(f"No {title.lower()} found.")
        return

    df = pd.DataFrame(rows)
    click.echo("\n" + "=" * 80)
    click.echo(f"{title}: {len(df)} record(s)")
    click.echo("=" * 80)
    click.echo(df.to_string(index=False))
    click.echo("=" * 80)


def _show_report(report: Report):
    rows = []
    for suite in report.suites:
        if suite.error:
            rows.append(
                {"suite": suite.name, "check": "error", "value": None,
                 "tolerance": None, "passed": False}
            )
        for r in suite.residuals:
            rows.append(
                {"suite": suite.name, "check": r.name, "value": f"{r.value:.3e}",
                 "tolerance": f"{r.tolerance:.1e}", "passed": r.passed}
            )
    _display_table(rows, f"Scenario '{report.scenario}'")
    for suite in report.suites:
        if suite.error:
            click.secho(f"  {suite.name}: {suite.error}", fg="red")
    if report.passed:
        click.secho("✓ All suites passed", fg="green")
    else:
        failed = [s.name for s in report.suites if not s.passed]
        click.secho(f"✗ Failed suites: {', '.join(failed)}", fg="red")


def _cache_for_run(use_cache: bool, lab_config: LabConfig) -> Optional[CacheManager]:
    if not use_cache:
        return None
    if lab_config.cache_folder and lab_config.cache_enabled:
        return CacheManager(cache_folder=lab_config.cache_folder)
    click.secho("Cache not configured or disabled; computing boundary data.", fg="yellow")
    click.echo("Use 'ssf-lab config set-cache-folder' to configure caching.")
    return None


def _execute(
    ctx: click.Context,
    scenario: Scenario,
    output: Optional[str],
    formats: Iterable[str],
    use_cache: bool,
    lab_config: LabConfig,
    threads: Optional[int] = None,
):
    """Run a scenario, write artifacts and exit with the suite status."""
    threads = threads or resolve_threads(lab_config)
    report = run_scenario(
        scenario, threads=threads, cache=_cache_for_run(use_cache, lab_config)
    )
    _show_report(report)
    formats = list(formats)
    if formats:
        target = resolve_output_path(output or slugify(scenario.name) or "scenario", lab_config)
        try:
            paths = emit(report, formats, target)
        except ArtifactIoError as e:
            click.secho(f"Error: {e}", fg="red")
            ctx.exit(EXIT_CONFIG)
        click.secho(f"✓ Wrote {len(paths)} artifact(s) to {target}", fg="green")
    ctx.exit(EXIT_PASS if report.passed else EXIT_FAIL)


def _from_dict(ctx: click.Context, data: Dict[str, Any], lab_config: LabConfig) -> Scenario:
    try:
        return scenario_from_dict(data, config=lab_config)
    except ScenarioError as e:
        click.secho(f"Error: {e}", fg="red")
        ctx.exit(EXIT_CONFIG)


output_option = click.option(
    "--output",
    "-o",
    type=click.Path(),
    default=None,
    help="Artifact folder; relative paths go under the configured output folder",
)
format_option = click.option(
    "--format",
    "formats",
    type=click.Choice(FORMATS),
    multiple=True,
    default=("csv", "json"),
    show_default=True,
    help="Artifact formats (repeat for several)",
)
cache_option = click.option(
    "--use-cache", is_flag=True, help="Reuse cached boundary data when available"
)
threads_option = click.option(
    "--threads",
    type=click.IntRange(min=1),
    default=None,
    help="Worker threads (overrides SSF_LAB_THREADS and the config)",
)


@click.group(invoke_without_command=True)
@click.option(
    "--log-level",
    type=click.Choice(["DEBUG", "INFO", "WARNING", "ERROR"], case_sensitive=False),
    default="INFO",
    help="Log level for messages on stderr",
)
@click.pass_context
def ssf_lab(ctx, log_level: str):
    """Numerical lab for perturbation determinants and spectral shift functions."""
    if log_level.upper() != "INFO":
        logger.remove()
        logger.add(sys.stderr, level=log_level.upper(), enqueue=True)
    if ctx.invoked_subcommand is None:
        click.echo("Hello {}".format(os.environ.get("USER", "")))
        click.echo("Welcome to ssf-lab. Use ssf-lab --help for help.")


@ssf_lab.command()
def version():
    """Show the current version of ssf-lab."""
    from importlib.metadata import version as _version

    click.echo(_version("ssf_lab"))


@ssf_lab.command()
@click.argument("scenario_file", type=click.Path(dir_okay=False))
@output_option
@format_option
@cache_option
@threads_option
@click.pass_context
def run(
    ctx, scenario_file: str, output: Optional[str], formats, use_cache: bool, threads
):
    """Run a scenario file

    ```
    ssf-lab run scenarios/rank_one.json -o runs/rank-one --format svg --format json
    ```

    Exit code 0 when every suite passes, 1 when one fails, 2 on a
    configuration error.
    """
    lab_config = LabConfig()
    try:
        scenario = load_scenario(scenario_file, config=lab_config)
    except ScenarioError as e:
        click.secho(f"Error: {e}", fg="red")
        ctx.exit(EXIT_CONFIG)
    _execute(ctx, scenario, output, formats, use_cache, lab_config, threads)


@ssf_lab.group(name="example", invoke_without_command=True)
@click.pass_context
def example_group(ctx):
    """Run built-in example scenarios"""
    if ctx.invoked_subcommand is None:
        click.echo("Use ssf-lab example --help for help.")


@example_group.command(name="rank-one")
@click.option("--alpha", type=float, default=1.0, show_default=True, help="Coupling α > 0")
@output_option
@format_option
@cache_option
@threads_option
@click.pass_context
def example_rank_one(ctx, alpha: float, output, formats, use_cache: bool, threads):
    """H0 = 0, V = α on a one-dimensional space, all suites

    ```
    ssf-lab example rank-one --alpha 2
    ```
    """
    lab_config = LabConfig()
    scenario = _from_dict(
        ctx,
        {"name": f"rank-one-alpha-{alpha:g}", "pair": {"kind": "rank_one", "alpha": alpha}},
        lab_config,
    )
    _execute(ctx, scenario, output, formats, use_cache, lab_config, threads)


@example_group.command(name="diagonal")
@click.option("--n", "n", type=int, default=10, show_default=True, help="Number of terms N")
@click.option(
    "--q", type=float, default=2.0, show_default=True,
    help="Exponent of α_n = 1/(n ln(n+1)^q), 1 < q <= 2",
)
@output_option
@format_option
@cache_option
@threads_option
@click.pass_context
def example_diagonal(ctx, n: int, q: float, output, formats, use_cache: bool, threads):
    """H0 = 0, V = diag(α_1..α_N) with the divergence study

    ```
    ssf-lab example diagonal --n 1000
    ```
    """
    lab_config = LabConfig()
    scenario = _from_dict(
        ctx,
        {
            "name": f"diagonal-n-{n}",
            "pair": {"kind": "diagonal_series", "n": n, "rule": {"kind": "log_power", "param": q}},
            "suites": ["boundary", "weakl1", "divergence"],
            "divergence": {"n_values": sorted({10, 100, n}) if n > 100 else [10, 100, 1000]},
        },
        lab_config,
    )
    _execute(ctx, scenario, output, formats, use_cache, lab_config, threads)


@ssf_lab.command(name="random")
@click.option("--dim", type=int, default=4, show_default=True, help="Dimension (at most 64)")
@click.option("--seed", type=int, default=0, show_default=True, help="Random seed")
@click.option(
    "--suites",
    default=",".join(SUITES),
    show_default=True,
    help="Comma-separated suites",
)
@output_option
@format_option
@cache_option
@threads_option
@click.pass_context
def random_pair_cmd(
    ctx, dim: int, seed: int, suites: str, output, formats, use_cache: bool, threads
):
    """Run suites on a seeded random pair

    ```
    ssf-lab random --dim 6 --seed 42 --suites boundary,rep_uhp,trace
    ```
    """
    lab_config = LabConfig()
    names = [s.strip() for s in suites.split(",") if s.strip()]
    scenario = _from_dict(
        ctx,
        {
            "name": f"random-{dim}-{seed}",
            "pair": {"kind": "random", "dim": dim, "seed": seed},
            "suites": names,
        },
        lab_config,
    )
    _execute(ctx, scenario, output, formats, use_cache, lab_config, threads)


@ssf_lab.command()
@click.argument("summary_file", type=click.Path(dir_okay=False))
@click.option(
    "--format",
    "formats",
    type=click.Choice(["csv", "svg"]),
    multiple=True,
    default=("csv",),
    show_default=True,
    help="Artifact formats to regenerate",
)
@output_option
@click.pass_context
def report(ctx, summary_file: str, formats, output: Optional[str]):
    """Regenerate CSV or SVG artifacts from a JSON summary

    ```
    ssf-lab report runs/rank-one/rank-one-alpha-1_summary.json --format svg
    ```
    """
    try:
        loaded = load_report(summary_file)
    except ArtifactIoError as e:
        click.secho(f"Error: {e}", fg="red")
        ctx.exit(EXIT_CONFIG)
    target = resolve_output_path(output) if output else Path(summary_file).parent
    try:
        paths = emit(loaded, formats, target)
    except ArtifactIoError as e:
        click.secho(f"Error: {e}", fg="red")
        ctx.exit(EXIT_CONFIG)
    for path in paths:
        click.echo(f"  - {path}")
    _show_report(loaded)


@ssf_lab.group(name="config", invoke_without_command=True)
@click.pass_context
def config_group(ctx):
    """Manage ssf-lab configuration settings"""
    if ctx.invoked_subcommand is None:
        click.echo("Use ssf-lab config --help for help.")


@config_group.command(name="show")
def show_config():
    """Show all configuration settings

    ```
    ssf-lab config show
    ```
    """
    lab_config = LabConfig()
    click.echo("Current configuration:")
    click.echo(f"  Config file: {lab_config.config_file}")
    click.echo(
        f"  Default output folder: {lab_config.default_output_folder or 'Not set'}"
    )
    click.echo(f"  Cache folder: {lab_config.cache_folder or 'Not set'}")
    click.echo(f"  Cache enabled: {lab_config.cache_enabled}")
    click.echo(f"  Threads: {lab_config.threads} (effective {resolve_threads(lab_config)})")
    tolerances = ", ".join(f"{k}={v:g}" for k, v in lab_config.tolerances.items())
    click.echo(f"  Tolerances: {tolerances}")
    epsilon = ", ".join(f"{k}={v:g}" for k, v in lab_config.epsilon.items())
    click.echo(f"  Epsilon schedule: {epsilon}")


@config_group.command(name="set-output-folder")
@click.argument("folder_path", type=click.Path())
def set_output_folder(folder_path: str):
    """Set the default parent folder for run artifacts

    ```
    ssf-lab config set-output-folder ~/ssf-runs
    ```
    """
    lab_config = LabConfig()
    lab_config.default_output_folder = folder_path
    click.secho(
        f"✓ Default output folder set to: {lab_config.default_output_folder}", fg="green"
    )


@config_group.command(name="get-output-folder")
def get_output_folder():
    """Get the currently configured default output folder"""
    folder = LabConfig().default_output_folder
    if folder:
        click.echo(f"Default output folder: {folder}")
    else:
        click.secho("No default output folder configured.", fg="yellow")
        click.echo("Use 'ssf-lab config set-output-folder' to set one.")


@config_group.command(name="set-cache-folder")
@click.argument("folder_path", type=click.Path())
def set_cache_folder(folder_path: str):
    """Set the folder for cached boundary data

    The cache folder can be a local path or an object storage URL:

    ```
    ssf-lab config set-cache-folder ~/ssf-cache
    ssf-lab config set-cache-folder s3://my-bucket/ssf-cache
    ```
    """
    lab_config = LabConfig()
    lab_config.cache_folder = folder_path
    click.secho(f"✓ Cache folder set to: {lab_config.cache_folder}", fg="green")


@config_group.command(name="get-cache-folder")
def get_cache_folder():
    """Get the currently configured cache folder"""
    lab_config = LabConfig()
    folder = lab_config.cache_folder
    if folder:
        click.echo(f"Cache folder: {folder}")
        click.echo(f"Cache enabled: {lab_config.cache_enabled}")
    else:
        click.secho("No cache folder configured.", fg="yellow")
        click.echo("Use 'ssf-lab config set-cache-folder' to set one.")


@config_group.command(name="enable-cache")
def enable_cache():
    """Enable caching of boundary data"""
    LabConfig().cache_enabled = True
    click.secho("✓ Cache enabled", fg="green")


@config_group.command(name="disable-cache")
def disable_cache():
    """Disable caching of boundary data"""
    LabConfig().cache_enabled = False
    click.secho("✓ Cache disabled", fg="yellow")


@config_group.command(name="set-threads")
@click.argument("threads", type=click.IntRange(min=1))
def set_threads(threads: int):
    """Set the number of worker threads (SSF_LAB_THREADS overrides it)"""
    LabConfig().threads = threads
    click.secho(f"✓ Threads set to {threads}", fg="green")


@ssf_lab.group(name="cache", invoke_without_command=True)
@click.pass_context
def cache_group(ctx):
    """Manage cached boundary data"""
    if ctx.invoked_subcommand is None:
        click.echo("Use ssf-lab cache --help for help.")


@cache_group.command(name="list")
@click.option("--cache-key", "-k", default=None, help="Show versions for one cache key")
def list_cache(cache_key: Optional[str] = None):
    """List cached boundary data

    ```
    ssf-lab cache list
    ssf-lab cache list -k rank-one-alpha-1-3f2a9c1d0b7e
    ```
    """
    cache_folder = LabConfig().cache_folder
    if not cache_folder:
        click.secho("Cache folder not configured.", fg="yellow")
        click.echo("Use 'ssf-lab config set-cache-folder' to set one.")
        return

    manager = CacheManager(cache_folder=cache_folder)
    if cache_key:
        versions = manager.list_versions(cache_key)
        if versions:
            click.echo(f"Cached versions for '{cache_key}':")
            for v in versions:
                click.echo(f"  - {v}")
        else:
            click.secho(f"No cached versions found for '{cache_key}'", fg="yellow")
        return

    keys = manager.list_keys()
    if keys:
        click.echo("Cached data:")
        for key in keys:
            click.echo(f"  - {key} ({len(manager.list_versions(key))} version(s))")
    else:
        click.secho("No cached data found.", fg="yellow")


@cache_group.command(name="clear")
@click.option("--cache-key", "-k", default=None, help="Clear one key (all if omitted)")
@click.option("--version", "-v", default=None, help="Clear one version (needs --cache-key)")
@click.confirmation_option(prompt="Are you sure you want to clear the cache?")
def clear_cache(cache_key: Optional[str] = None, version: Optional[str] = None):
    """Clear cached boundary data

    ```
    ssf-lab cache clear
    ssf-lab cache clear -k rank-one-alpha-1-3f2a9c1d0b7e -v 20260101_120000
    ```
    """
    cache_folder = LabConfig().cache_folder
    if not cache_folder:
        click.secho("Cache folder not configured.", fg="yellow")
        click.echo("Use 'ssf-lab config set-cache-folder' to set one.")
        return
    if version and not cache_key:
        click.secho("Error: --version requires --cache-key", fg="red")
        return

    CacheManager(cache_folder=cache_folder).clear(cache_key=cache_key, version=version)
    if cache_key and version:
        click.secho(f"✓ Cleared {cache_key} version {version}", fg="green")
    elif cache_key:
        click.secho(f"✓ Cleared all versions of {cache_key}", fg="green")
    else:
        click.secho("✓ Cleared entire cache", fg="green")


if __name__ == "__main__":
    ssf_lab()
