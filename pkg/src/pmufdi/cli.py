"""Command-line front end.

Subcommands: generate (persist a synthetic block), attack (design one
attack), detect (run the detector on a stored block), experiment (full
pipeline to a report directory), sweep (detector-weight sweep). All
take an experiment config file; common flags override its fields.
"""

from __future__ import annotations

import csv
import io
import logging
import sys
from pathlib import Path

import click

from .attack import design_attack
from .blocks import generate_block, load_block, write_block_csv, write_block_npz
from .detector import classify_outcome, detect
from .experiment import (
    ExperimentConfig,
    _csv_table,
    _NUM,
    _write_atomic,
    lambda_sweep,
    load_config,
    run_experiment,
    save_report,
    write_generated_block,
    write_sweep_csv,
)
from .measurements import build_measurement_matrix

log = logging.getLogger("pmufdi")


def _common_options(fn):
    fn = click.option("--config", "config_path", required=True,
                      type=click.Path(exists=True, dir_okay=False),
                      help="experiment config file (YAML)")(fn)
    fn = click.option("--seed", type=int, default=None,
                      help="override the config seed")(fn)
    fn = click.option("--out-dir", type=click.Path(file_okay=False),
                      default=None, help="override the output directory")(fn)
    fn = click.option("-v", "--verbose", is_flag=True, help="debug logging")(fn)
    return fn


def _load(config_path, seed, out_dir, verbose, **more) -> ExperimentConfig:
    logging.basicConfig(
        level=logging.DEBUG if verbose else logging.INFO,
        format="%(levelname)s %(name)s: %(message)s",
    )
    return load_config(config_path, seed=seed, out_dir=out_dir, **more)


@click.group()
def main():
    """Synthesize PMU blocks, design measurement attacks, run detection."""


@main.command()
@_common_options
def generate(config_path, seed, out_dir, verbose):
    """Generate the synthetic block and write block.csv/.npz + spectrum.csv."""
    cfg = _load(config_path, seed, out_dir, verbose)
    paths = write_generated_block(cfg, cfg.out_dir)
    for path in paths:
        click.echo(str(path))


@main.command()
@_common_options
@click.option("--buses", required=True,
              help="attacked-state set, comma separated bus ids (e.g. 8 or 8,9)")
@click.option("--window", "window_index", type=int, default=1, show_default=True,
              help="1-based index into the config's detection windows")
def attack(config_path, seed, out_dir, verbose, buses, window_index):
    """Design one attack and write the attacked block plus a summary row."""
    cfg = _load(config_path, seed, out_dir, verbose)
    bus_ids = tuple(int(b) for b in buses.split(","))
    if not 1 <= window_index <= len(cfg.windows):
        raise click.BadParameter(f"window must be in 1..{len(cfg.windows)}")
    case, plan = cfg.load_grid()
    _, block, dep = generate_block(case, plan, cfg.duration_s, cfg.rate_hz,
                                   cfg.seed, policy=cfg.disturbance)
    first, last = cfg.windows[window_index - 1]
    scen = design_attack(block.window(first, last), dep, bus_ids,
                         options=cfg.solver)
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    write_block_npz(scen.attacked_block, out / "attacked_block.npz")
    write_block_csv(scen.attacked_block, out / "attacked_block.csv")
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["set_size", "buses", "clean_nuclear", "attacked_nuclear",
                     "ratio", "iterations", "primal_residual", "dual_residual"])
    writer.writerow([
        len(scen.attacked_buses),
        "+".join(str(b) for b in scen.attacked_buses),
        _NUM % scen.baseline_objective,
        _NUM % scen.objective,
        _NUM % (scen.objective / scen.baseline_objective),
        scen.diagnostics.iterations,
        _NUM % scen.diagnostics.primal_residual,
        _NUM % scen.diagnostics.dual_residual,
    ])
    _write_atomic(out / "attack.csv", buf.getvalue())
    click.echo(f"objective {scen.objective:.6g} (clean {scen.baseline_objective:.6g})")
    click.echo(str(out / "attacked_block.npz"))


@main.command("detect")
@_common_options
@click.option("--block", "block_path", required=True,
              type=click.Path(exists=True, dir_okay=False),
              help="measurement block (.csv or .npz)")
@click.option("--lambda", "weight", type=float, default=None,
              help="detector weight (default from config)")
@click.option("--injected", default=None,
              help="attacked buses actually injected, for outcome labelling")
def detect_cmd(config_path, seed, out_dir, verbose, block_path, weight, injected):
    """Run the detector on a stored block and write detection.csv."""
    cfg = _load(config_path, seed, out_dir, verbose)
    case, plan = cfg.load_grid()
    dep = build_measurement_matrix(case, plan)
    block = load_block(block_path)
    result = detect(block, dep, weight=weight or cfg.weight,
                    options=cfg.solver, thresholds=cfg.thresholds)
    injected_buses = tuple(int(b) for b in injected.split(",")) if injected else None
    outcome = classify_outcome(result, injected_buses)
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["outcome", "weight", "objective", "feasibility_residual",
                     "iterations", "flagged_buses", "flagged_channels",
                     "max_state_column_norm"])
    writer.writerow([
        outcome.value,
        _NUM % result.weight,
        _NUM % result.objective,
        _NUM % result.feasibility_residual,
        result.diagnostics.iterations,
        "+".join(str(b) for b in result.state_support),
        "+".join(result.labels[i] for i in result.channel_support),
        _NUM % float(result.state_column_norms.max(initial=0.0)),
    ])
    _write_atomic(out / "detection.csv", buf.getvalue())
    click.echo(f"outcome: {outcome.value}; flagged: {list(result.state_support)}")


@main.command()
@_common_options
@click.option("--lambda", "weight", type=float, default=None,
              help="override the detector weight")
@click.option("--max-set-size", type=int, default=None,
              help="override the largest attacked-set size")
@click.option("--limit", type=int, default=None,
              help="cap the number of attacked sets per window")
@click.option("--workers", type=int, default=None,
              help="scenario worker threads")
def experiment(config_path, seed, out_dir, verbose, weight, max_set_size,
               limit, workers):
    """Run the full pipeline and write the report directory.

    Exits 2 when any designed attack is flagged strictly inside its
    attacked set, which the design guarantees cannot happen.
    """
    cfg = _load(config_path, seed, out_dir, verbose,
                weight=weight, max_set_size=max_set_size,
                limit=limit, workers=workers)
    report, timings = run_experiment(cfg)
    save_report(report, cfg.out_dir, timings)
    counts = report.meta["outcomes"]
    click.echo(f"{report.meta['n_scenarios']} scenarios: {counts}")
    click.echo(f"report: {cfg.out_dir}")
    if report.exit_code:
        click.echo(f"{len(report.in_set_detections)} attacks were flagged "
                   "inside their attacked set", err=True)
    sys.exit(report.exit_code)


@main.command()
@_common_options
@click.option("--lambdas", required=True,
              help="comma-separated detector weights, e.g. 0.5,1.05,2,5")
def sweep(config_path, seed, out_dir, verbose, lambdas):
    """Detector-weight sweep over fixed designed and naive attacks."""
    cfg = _load(config_path, seed, out_dir, verbose)
    weights = [float(w) for w in lambdas.split(",")]
    rows = lambda_sweep(cfg, weights)
    path = write_sweep_csv(rows, cfg.out_dir)
    for row in rows:
        click.echo(f"lambda={row.weight:g} {row.kind}: {row.outcome}")
    click.echo(str(path))


if __name__ == "__main__":
    main()
