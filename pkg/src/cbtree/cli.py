"""Command line entry point: ``cbt run`` and ``cbt experiment``."""

from __future__ import annotations

import sys
from pathlib import Path

import click

from .build import build_tree
from .dsl import parse_document
from .experiments import EXPERIMENTS, ExperimentSpec, csv_text, run_experiment, trace_csv_text
from .runner import AbortedRun, run_once

EXIT_ABORTED = 5  # click already uses 2 for usage errors
EXIT_INVALID = 3
EXIT_IO = 4


def _parse_grid(items: tuple[str, ...]) -> dict[str, tuple[float, ...]]:
    grid: dict[str, tuple[float, ...]] = {}
    for item in items:
        key, sep, values = item.partition("=")
        if not sep or not key or not values:
            raise click.BadParameter(f"expected key=v1,v2,... got {item!r}", param_hint="--grid")
        try:
            grid[key.strip()] = tuple(float(v) for v in values.split(","))
        except ValueError as exc:
            raise click.BadParameter(str(exc), param_hint="--grid") from exc
    return grid


def _write(path: Path, text: str) -> None:
    try:
        path.write_text(text, encoding="utf-8")
    except OSError as exc:
        click.echo(f"error: cannot write {path}: {exc.strerror or exc}", err=True)
        sys.exit(EXIT_IO)


@click.group()
@click.version_option(package_name="artifact")
def main() -> None:
    """Run behavior-tree files and the synchronization experiments."""


@main.command()
@click.argument("file", type=click.Path(dir_okay=False, path_type=Path))
@click.option("--seed", default=0, show_default=True, help="Seed for the action noise streams.")
@click.option("--max-cycles", type=int, default=None, help="Cycle cap (default: 10 x the slowest nominal duration).")
@click.option("--trace", "trace_path", type=click.Path(dir_okay=False, path_type=Path), default=None,
              help="Write the per-cycle trace as CSV here.")
def run(file: Path, seed: int, max_cycles: int | None, trace_path: Path | None) -> None:
    """Execute one tree until its finite actions complete."""
    try:
        text = file.read_text(encoding="utf-8")
    except OSError as exc:
        click.echo(f"error: cannot read {file}: {exc.strerror or exc}", err=True)
        sys.exit(EXIT_IO)
    doc, diags = parse_document(text)
    for d in diags:
        click.echo(d.format(str(file)), err=True)
    if any(d.is_error for d in diags):
        sys.exit(EXIT_INVALID)
    tree = build_tree(doc, seed)
    try:
        trace = run_once(tree, max_cycles)
    except AbortedRun as exc:
        if trace_path is not None:
            _write(trace_path, trace_csv_text(exc.trace))
        click.echo(f"aborted: {exc}", err=True)
        sys.exit(EXIT_ABORTED)
    if trace_path is not None:
        _write(trace_path, trace_csv_text(trace))
    root = trace.root_status[-1] if trace.root_status else "-"
    click.echo(f"completed at cycle {trace.last_cycle} (root {root})")


@main.command()
@click.argument("name", type=click.Choice(EXPERIMENTS))
@click.option("--runs", default=10000, show_default=True, help="Runs per grid cell.")
@click.option("--seed", default=0, show_default=True, help="Master seed.")
@click.option("--out", "out_dir", type=click.Path(file_okay=False, path_type=Path), default=Path("."),
              show_default=True, help="Output directory.")
@click.option("--grid", multiple=True, metavar="KEY=V1,V2", help="Override one grid axis; repeatable.")
@click.option("--max-cycles", type=int, default=None, help="Cycle cap per run.")
@click.option("--format", "fmt", type=click.Choice(["csv"]), default="csv", show_default=True)
def experiment(name: str, runs: int, seed: int, out_dir: Path, grid: tuple[str, ...],
               max_cycles: int | None, fmt: str) -> None:
    """Run a named experiment and write NAME.csv into the output directory."""
    try:
        spec = ExperimentSpec(name, runs, seed, _parse_grid(grid), max_cycles)
        result = run_experiment(spec)
    except (KeyError, ValueError) as exc:
        raise click.BadParameter(str(exc.args[0]), param_hint="--grid") from exc
    except AbortedRun as exc:
        click.echo(f"aborted: {exc}", err=True)
        sys.exit(EXIT_ABORTED)
    try:
        out_dir.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        click.echo(f"error: cannot create {out_dir}: {exc.strerror or exc}", err=True)
        sys.exit(EXIT_IO)
    path = out_dir / f"{name}.csv"
    _write(path, csv_text(result))
    for s in result.summaries:
        params = " ".join(f"{k}={v:g}" for k, v in s.params)
        click.echo(f"{params} {s.metric}: median={s.stats.median:.4g} iqr={s.stats.iqr:.4g}")
    click.echo(f"wrote {path}")


if __name__ == "__main__":
    main()
