"""Command line entry points.

    nudgeloop run-server     serve the HTTP API (wall clock unless configured)
    nudgeloop simulate       run a synthetic cohort on the virtual clock
    nudgeloop train-now      one training pass over the stored logs
    nudgeloop cluster-now    run (or force) the one-shot clustering
    nudgeloop export-metrics write the metrics document for a data directory
    nudgeloop replay-log     rebuild state from logs and print a summary
"""

from __future__ import annotations

import json
import sys
from pathlib import Path

import click

from .config import AppConfig, load_config
from .gateway import ApiError, ServiceGateway
from .scheduler import ScheduleConfig
from .simulate import CohortSpec, run_experiment


@click.group()
def main():
    """Personalized intervention service: RL decision loop, scheduler, API."""


def _gateway(config_path, data_dir, seed, mode, k, clock=None) -> ServiceGateway:
    cfg = load_config(config_path)
    if data_dir:
        cfg.data_dir = data_dir
    if seed is not None:
        cfg.seed = seed
    if mode:
        cfg.mode = mode
    if k is not None:
        cfg.k = k
    if clock:
        cfg.schedule = ScheduleConfig.from_dict({**cfg.schedule.to_dict(), "clock": clock})
    return ServiceGateway(cfg)


config_opt = click.option("--config", "config_path", type=click.Path(exists=True), default=None)
data_opt = click.option("--data-dir", default=None, help="override the data directory")
seed_opt = click.option("--seed", type=int, default=None)
mode_opt = click.option("--mode", type=click.Choice(["pooled", "grouped", "separate"]), default=None)
k_opt = click.option("--k", type=int, default=None, help="cluster count for grouped mode")


@main.command("run-server")
@config_opt
@data_opt
@seed_opt
@mode_opt
@k_opt
@click.option("--host", default=None)
@click.option("--port", type=int, default=None)
@click.option("--clock", type=click.Choice(["wall", "virtual"]), default="wall",
              show_default=True, help="virtual freezes time at the log's state, for replay demos")
def run_server(config_path, data_dir, seed, mode, k, host, port, clock):
    """Serve the API and run the scheduler loop."""
    import threading

    import uvicorn

    from .api import create_app

    gw = _gateway(config_path, data_dir, seed, mode, k, clock=clock)
    app = create_app(gw)
    stop = threading.Event()
    t = threading.Thread(target=gw.scheduler.run_forever, kwargs={"stop_event": stop}, daemon=True)
    t.start()
    try:
        uvicorn.run(app, host=host or gw.cfg.host, port=port or gw.cfg.port, log_level="info")
    finally:
        stop.set()
        gw.close()


@main.command()
@config_opt
@seed_opt
@mode_opt
@k_opt
@click.option("--days", type=int, default=21, show_default=True)
@click.option("--cohort", "cohort_path", type=click.Path(exists=True), default=None,
              help="cohort spec JSON; defaults to the built-in 27-user mix")
@click.option("--out", "out_dir", type=click.Path(), default=None,
              help="directory for report.json and the run's data files")
def simulate(config_path, seed, mode, k, days, cohort_path, out_dir):
    """Run the full protocol against synthetic users on the virtual clock."""
    cohort = CohortSpec.from_file(cohort_path) if cohort_path else CohortSpec.default()
    data_dir = None
    if out_dir:
        Path(out_dir).mkdir(parents=True, exist_ok=True)
        data_dir = str(Path(out_dir) / "data")
    report = run_experiment(
        cohort=cohort,
        days=days,
        mode=mode or "pooled",
        seed=seed if seed is not None else 0,
        data_dir=data_dir,
        k=k if k is not None else 2,
    )
    if out_dir:
        report.save(Path(out_dir) / "report.json")
        click.echo(f"report written to {Path(out_dir) / 'report.json'}")
    else:
        click.echo(json.dumps(report.to_dict(), sort_keys=True, indent=1))


@main.command("train-now")
@config_opt
@data_opt
@seed_opt
@mode_opt
@k_opt
@click.option("--as-of-day", type=int, default=None)
def train_now(config_path, data_dir, seed, mode, k, as_of_day):
    """Train policies from the stored logs right now."""
    gw = _gateway(config_path, data_dir, seed, mode, k)
    try:
        result = gw.train_now(as_of_day)
    except ApiError as exc:
        click.echo(f"error [{exc.code}]: {exc}", err=True)
        sys.exit(2)
    finally:
        gw.close()
    click.echo(json.dumps(result["policies"], sort_keys=True))


@main.command("cluster-now")
@config_opt
@data_opt
@seed_opt
@mode_opt
@k_opt
@click.option("--force", is_flag=True, help="recluster even if a model exists")
def cluster_now(config_path, data_dir, seed, mode, k, force):
    """Run the one-shot clustering over week-one traces."""
    gw = _gateway(config_path, data_dir, seed, mode, k)
    try:
        result = gw.cluster_now(force=force)
    except ApiError as exc:
        click.echo(f"error [{exc.code}]: {exc}", err=True)
        sys.exit(2)
    finally:
        gw.close()
    click.echo(json.dumps(result, sort_keys=True))


@main.command("export-metrics")
@config_opt
@data_opt
@seed_opt
@mode_opt
@k_opt
@click.option("--days", type=int, default=None, help="number of days to cover")
@click.option("--out", "out_path", type=click.Path(), default=None)
def export_metrics(config_path, data_dir, seed, mode, k, days, out_path):
    """Compute the metrics document (reward table, curves, distributions)."""
    gw = _gateway(config_path, data_dir, seed, mode, k)
    try:
        doc = gw.metrics(days)
    finally:
        gw.close()
    text = json.dumps(doc, sort_keys=True, indent=1)
    if out_path:
        Path(out_path).write_text(text + "\n", encoding="utf-8")
        click.echo(f"metrics written to {out_path}")
    else:
        click.echo(text)


@main.command("replay-log")
@config_opt
@data_opt
@seed_opt
@mode_opt
@k_opt
def replay_log(config_path, data_dir, seed, mode, k):
    """Rebuild all state from the append-only logs and print a summary."""
    gw = _gateway(config_path, data_dir, seed, mode, k)
    try:
        summary = {
            "users": len(gw.engine.users()),
            "events": len(gw.events),
            "decisions": len(gw.engine.decisions.all()),
            "policies": {key: gw.engine.policies.get(key).version for key in gw.engine.policies.keys()},
            "clusters": gw.engine.cluster_model.k if gw.engine.cluster_model else None,
            "scheduler_done": len(gw.scheduler.done()),
        }
    finally:
        gw.close()
    click.echo(json.dumps(summary, sort_keys=True))


if __name__ == "__main__":
    main()
