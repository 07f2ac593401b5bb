"""Command-line entry point.

Exit codes: 0 success, 1 simulation/runtime failure, 2 config rejection.
Config violations are printed one per line so a bad file is fixable in a
single pass.
"""

from __future__ import annotations

import sys

import click

from .config import MODES, load_config
from .errors import ConfigError, PcsKitError
from .experiment import run_experiment


@click.command(name="pcskit")
@click.option("--config", "config_path", required=True, type=click.Path(exists=False), help="Experiment config JSON.")
@click.option("--mode", type=click.Choice(MODES), default=None, help="Override the config's mode.")
@click.option("--seed", type=int, default=None, help="Override the config's seed (non-negative).")
@click.option("--out", type=click.Path(file_okay=False), default=None, help="Output directory root.")
@click.option("--workers", type=int, default=1, show_default=True, help="Parallel simulation processes.")
@click.option("--overwrite", is_flag=True, help="Write into the output directory directly instead of a timestamped subdirectory.")
def main(
    config_path: str,
    mode: str | None,
    seed: int | None,
    out: str | None,
    workers: int,
    overwrite: bool,
) -> None:
    """Run a check-sandwiched multi-programming experiment from a config file."""
    try:
        config = load_config(config_path)
    except FileNotFoundError:
        click.echo(f"config not found: {config_path}", err=True)
        sys.exit(2)
    except ConfigError as exc:
        click.echo("config rejected:", err=True)
        for v in exc.violations:
            click.echo(f"  - {v}", err=True)
        sys.exit(2)
    if seed is not None and seed < 0:
        click.echo("config rejected:", err=True)
        click.echo("  - seed: must be a non-negative integer", err=True)
        sys.exit(2)
    if workers < 1:
        click.echo("config rejected:", err=True)
        click.echo("  - workers: must be >= 1", err=True)
        sys.exit(2)
    try:
        art = run_experiment(
            config, mode=mode, seed=seed, out=out, workers=workers, overwrite=overwrite
        )
    except (PcsKitError, ValueError, OSError) as exc:
        click.echo(f"run failed: {exc}", err=True)
        sys.exit(1)
    click.echo(f"run directory: {art.out_dir}")
    for name, path in sorted((art.paths or {}).items()):
        click.echo(f"  {name}: {path.name}")
    sys.exit(0)


if __name__ == "__main__":
    main()
