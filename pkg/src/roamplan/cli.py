"""Command-line harness: single runs, suites, and map/roadmap exports."""

from __future__ import annotations

import json
import sys
from dataclasses import asdict
from pathlib import Path

import click

from .runner import PLANNER_KINDS, final_state, run_exploration, run_suite
from .scenarios import builtin_scenarios, load_scenario


def _load(name_or_path: str):
    return load_scenario(name_or_path)


@click.group()
def main():
    """Exploration planner harness."""


@main.command()
@click.option("--scenario", "scenario_src", required=True,
              help="Scenario YAML path or builtin name (see list-scenarios).")
@click.option("--planner", "planner_kind", type=click.Choice(PLANNER_KINDS), default="prm",
              show_default=True)
@click.option("--seed", type=int, default=None, help="Overrides the scenario seed.")
@click.option("--budget", type=float, default=600.0, show_default=True,
              help="Wall-clock budget in seconds.")
@click.option("--out", "out_dir", type=click.Path(path_type=Path), default=Path("runs"),
              show_default=True)
@click.option("--require-safe", is_flag=True,
              help="Exit nonzero if any ground-truth collision occurred.")
@click.option("--check-invariants", is_flag=True,
              help="Validate roadmap invariants after every sampling round.")
def run(scenario_src, planner_kind, seed, budget, out_dir, require_safe, check_invariants):
    """Run one exploration and write metrics, the rate curve, and the log."""
    scn = _load(scenario_src)
    out_dir.mkdir(parents=True, exist_ok=True)
    tag = f"{scn.name}_{planner_kind}_{seed if seed is not None else scn.seed}"
    metrics = run_exploration(scn, planner_kind, seed, budget,
                              check_invariants=check_invariants,
                              log_path=out_dir / f"log_{tag}.txt")
    (out_dir / f"metrics_{tag}.json").write_text(
        json.dumps(asdict(metrics), indent=2, default=float), encoding="utf-8")
    with (out_dir / f"rate_{tag}.csv").open("w", encoding="utf-8") as f:
        f.write("sim_time_s,mapped_fraction\n")
        for t, frac in metrics.rate_curve:
            f.write(f"{t},{frac}\n")
    click.echo(f"{scn.name} [{planner_kind}] seed={metrics.seed}: "
               f"termination={metrics.termination} sim_time={metrics.exploration_time:.1f}s "
               f"mapped={metrics.mapped_fraction:.3f} path={metrics.path_length:.1f}m "
               f"collisions={metrics.collisions} replans={metrics.replanning_events}")
    if require_safe and metrics.collisions > 0:
        click.echo("collisions occurred; failing --require-safe", err=True)
        sys.exit(2)


@main.command()
@click.option("--scenario", "scenario_srcs", multiple=True, required=True)
@click.option("--planner", "planner_kinds", multiple=True,
              type=click.Choice(PLANNER_KINDS), default=("prm",), show_default=True)
@click.option("--seeds", default="1,2,3", show_default=True,
              help="Comma-separated seed list.")
@click.option("--budget", type=float, default=600.0, show_default=True)
@click.option("--out", "out_dir", type=click.Path(path_type=Path), default=Path("suite"),
              show_default=True)
def suite(scenario_srcs, planner_kinds, seeds, budget, out_dir):
    """Batch runs; writes runs.csv, summary.csv, ratios.csv and rate curves."""
    scns = [_load(s) for s in scenario_srcs]
    seed_list = [int(s) for s in seeds.split(",") if s.strip()]
    results = run_suite(scns, list(planner_kinds), seed_list, out_dir, budget)
    ok = sum(1 for m in results if m.completed)
    click.echo(f"{len(results)} runs ({ok} completed) -> {out_dir}")


@main.command("export-map")
@click.option("--scenario", "scenario_src", required=True)
@click.option("--planner", "planner_kind", type=click.Choice(PLANNER_KINDS), default="prm")
@click.option("--seed", type=int, default=None)
@click.option("--budget", type=float, default=600.0)
@click.option("--out", "out_path", type=click.Path(path_type=Path), required=True)
def export_map(scenario_src, planner_kind, seed, budget, out_path):
    """Run an exploration and dump the final occupancy grid snapshot."""
    scn = _load(scenario_src)
    metrics, occ, _ = final_state(scn, planner_kind, seed, budget)
    out_path.parent.mkdir(parents=True, exist_ok=True)
    occ.write_snapshot(out_path)
    click.echo(f"map snapshot -> {out_path} (mapped {metrics.mapped_fraction:.3f})")


@main.command("export-roadmap")
@click.option("--scenario", "scenario_src", required=True)
@click.option("--seed", type=int, default=None)
@click.option("--budget", type=float, default=600.0)
@click.option("--out", "out_path", type=click.Path(path_type=Path), required=True)
def export_roadmap(scenario_src, seed, budget, out_path):
    """Run an exploration and dump the final roadmap (nodes, gains, edges)."""
    scn = _load(scenario_src)
    metrics, _, roadmap = final_state(scn, "prm", seed, budget)
    out_path.parent.mkdir(parents=True, exist_ok=True)
    roadmap.write_snapshot(out_path)
    click.echo(f"roadmap snapshot -> {out_path} "
               f"({metrics.nodes_total} nodes, {metrics.edges_total} edges)")


@main.command("list-scenarios")
def list_scenarios():
    """Names accepted by --scenario in place of a file path."""
    for name in builtin_scenarios():
        click.echo(name)


if __name__ == "__main__":
    main()
