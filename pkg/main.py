"""
Command-line entry point.

    python main.py run data/samples/toy_run.json
    python main.py compare runs/a/record.json runs/b/record.json --focus GLANCE
    python main.py replay-fixture table1-s4
    python main.py oracle-check

Machine-readable results go to stdout as JSON; logs go to stderr. Domain
errors exit with status 1, usage errors with status 2.
"""

import functools
import json
import sys
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional

import click
import pandas as pd

from config import get_settings, load_run_config, resolve_output_dir
from errors import GceError
from evaluation.dominance import compare_records
from evaluation.experiments import local_baseline, sweep
from evaluation.fixtures import available_fixtures, replay_fixture, replay_summary
from evaluation.oracles import oracle_check
from evaluation.report import load_records
from models import train_model
from models.persistence import load_model, save_model
from schemas import SelectionKind
from services.runner import execute_run
from services.tabular import ingest_csv
from utils.logging import configure_logging, get_logger

log = get_logger(__name__)


def _emit(body: Any) -> None:
    click.echo(json.dumps(body, indent=2, sort_keys=True, default=str))


def _domain_errors(fn: Callable) -> Callable:
    """Turn GceError into a one-line message and exit status 1."""

    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except GceError as exc:
            log.error("command failed", extra={"ctx": {"command": fn.__name__, "error": str(exc)}})
            click.echo(f"error: {exc}", err=True)
            sys.exit(1)

    return wrapper


def _int_list(_ctx, _param, value: Optional[str]) -> Optional[List[int]]:
    if value is None:
        return None
    try:
        return [int(v) for v in value.split(",") if v.strip()]
    except ValueError:
        raise click.BadParameter("expected comma-separated integers") from None


def _load(config_path: Path, overrides: Optional[Dict[str, Any]] = None):
    config = load_run_config(config_path, overrides)
    dataset = ingest_csv(config.dataset.path, config.dataset.schema_config, name=config.dataset.name)
    return config, dataset


@click.group()
@click.option("--log-level", default=None, help="Overrides LOG_LEVEL.")
def cli(log_level: Optional[str]) -> None:
    """Global counterfactual explanations for tabular classifiers."""
    configure_logging(log_level or get_settings().LOG_LEVEL)


# -------------------------- run --------------------------


@cli.command()
@click.argument("config_path", type=click.Path(path_type=Path))
@click.option("--output", "output", type=click.Path(path_type=Path), default=None,
              help="Output directory (relative paths live under GCE_OUTPUT_ROOT).")
@click.option("--jobs", type=click.IntRange(min=1), default=None, help="Folds run concurrently.")
@click.option("--seed", type=int, default=None, help="Overrides the split and GLANCE seed.")
@click.option("--s", "s", type=click.IntRange(min=1), default=None, help="Maximum number of actions.")
@click.option("--selection", type=click.Choice([k.value for k in SelectionKind]), default=None)
@click.option("--threshold", type=click.FloatRange(0.0, 1.0), default=None,
              help="Effectiveness fraction for min_cost_above_eff.")
@click.option("--budget", type=click.FloatRange(min=0.0), default=None,
              help="Cost budget for max_eff_below_cost.")
@click.option("--model", "model_path", type=click.Path(path_type=Path), default=None,
              help="Use a saved model artifact instead of training one per fold.")
@_domain_errors
def run(config_path: Path, output: Optional[Path], jobs: Optional[int], seed: Optional[int],
        s: Optional[int], selection: Optional[str], threshold: Optional[float],
        budget: Optional[float], model_path: Optional[Path]) -> None:
    """Cross-validated GLANCE run: train, explain, evaluate, write the report."""
    overrides: Dict[str, Any] = {"jobs": jobs, "seed": seed, "glance.seed": seed, "glance.s": s}
    if selection is not None:
        overrides["glance.selection"] = {"kind": selection, "threshold": threshold, "budget": budget}
    config, dataset = _load(config_path, overrides)
    preloaded = load_model(model_path) if model_path else None
    out_dir = resolve_output_dir(config, output)
    effective_jobs = jobs if jobs is not None else max(config.jobs, get_settings().GCE_JOBS)
    outcome = execute_run(config, out_dir, jobs=effective_jobs, dataset=dataset, preloaded=preloaded)
    _emit({"output_dir": str(out_dir), "record": outcome.report.record,
           "flags": outcome.report.flags.model_dump(), "gates": outcome.report.gates})
    if not outcome.passed:
        click.echo("error: run gates failed: "
                   + ", ".join(k for k, ok in outcome.report.gates.items() if not ok), err=True)
        sys.exit(1)


# -------------------------- compare --------------------------


@cli.command()
@click.argument("records_paths", nargs=-1, required=True, type=click.Path(path_type=Path))
@click.option("--focus", default=None, help="Method to tabulate against every competitor.")
@click.option("--per-fold", is_flag=True, help="Dominance must hold on every fold.")
@_domain_errors
def compare(records_paths, focus: Optional[str], per_fold: bool) -> None:
    """Pareto dominance across methods sharing (dataset, model, s)."""
    report = compare_records(load_records(records_paths), focus=focus, per_fold=per_fold)
    _emit(report.to_dict())


# -------------------------- fixtures and oracles --------------------------


@cli.command("replay-fixture")
@click.argument("name")
@click.option("--no-strict", is_flag=True, help="Report mismatches without failing.")
@_domain_errors
def replay_fixture_cmd(name: str, no_strict: bool) -> None:
    """Replay a bundled results fixture and diff it against its expectations."""
    if not name.strip():
        raise click.UsageError(f"fixture name is empty (available: {', '.join(available_fixtures())})")
    result = replay_fixture(name, strict=not no_strict)
    log.info(replay_summary(result), extra={"ctx": {"fixture": result["fixture"]}})
    _emit({k: result[k] for k in ("fixture", "s", "focus", "cells", "mismatches")})


@cli.command("oracle-check")
@click.option("--instances", type=click.IntRange(min=1), default=50)
@click.option("--seed", type=int, default=13)
@_domain_errors
def oracle_check_cmd(instances: int, seed: int) -> None:
    """GLANCE and greedy against exhaustive search on random Max s-Cover instances."""
    report = oracle_check(instances, seed)
    _emit({"passed": report.passed, "instances": len(report.instances), "violations": report.violations})
    if not report.passed:
        sys.exit(1)


# -------------------------- models --------------------------


@cli.group()
def model() -> None:
    """Train, save and inspect classifier artifacts."""


@model.command("train")
@click.argument("config_path", type=click.Path(path_type=Path))
@click.option("--out", "out_path", type=click.Path(path_type=Path), required=True)
@_domain_errors
def model_train(config_path: Path, out_path: Path) -> None:
    """Fit the configured model on the whole dataset and save it."""
    config, dataset = _load(config_path)
    fitted = train_model(dataset, config.model)
    save_model(fitted, out_path)
    _emit({"path": str(out_path), "model": fitted.descriptor, "schema_digest": fitted.schema.digest(),
           "train_accuracy": fitted.meta.get("train_accuracy")})


@model.command("load")
@click.argument("model_path", type=click.Path(path_type=Path))
@_domain_errors
def model_load(model_path: Path) -> None:
    """Validate a saved artifact and describe it."""
    loaded = load_model(model_path)
    _emit({"path": str(model_path), "model": loaded.descriptor, "schema_digest": loaded.schema.digest(),
           "features": list(loaded.schema.names)})


# -------------------------- experiments --------------------------


@cli.command("sweep")
@click.argument("config_path", type=click.Path(path_type=Path))
@click.option("--k", "ks", callback=_int_list, required=True, help="Initial cluster counts, e.g. 10,50,100.")
@click.option("--m", "ms", callback=_int_list, required=True, help="Candidates per cluster, e.g. 5,10.")
@click.option("--s", "s_values", callback=_int_list, default=None, help="Action-set sizes, e.g. 1,2,4,8.")
@click.option("--fold", type=click.IntRange(min=0), default=0)
@click.option("--csv", "csv_path", type=click.Path(path_type=Path), default=None)
@_domain_errors
def sweep_cmd(config_path: Path, ks, ms, s_values, fold: int, csv_path: Optional[Path]) -> None:
    """Effectiveness/cost over a grid of k x m (x s) on one fold."""
    config, dataset = _load(config_path)
    rows = sweep(config, dataset, ks, ms, s_values, fold=fold)
    if csv_path is not None:
        csv_path.parent.mkdir(parents=True, exist_ok=True)
        pd.DataFrame(rows).to_csv(csv_path, index=False)
    _emit(rows)


@cli.command("local-baseline")
@click.argument("config_path", type=click.Path(path_type=Path))
@click.option("--fold", type=click.IntRange(min=0), default=0)
@_domain_errors
def local_baseline_cmd(config_path: Path, fold: int) -> None:
    """Per-instance cheapest generated action, for comparison with GLANCE."""
    config, dataset = _load(config_path)
    _emit(local_baseline(config, dataset, fold=fold))


if __name__ == "__main__":
    cli()
