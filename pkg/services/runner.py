"""
End-to-end run: ingest, fold workflow, aggregation, gates and artifacts.

`execute_run` is what the `run` command calls; it is also the entry point for
tests that need a full run without going through click.
"""

import time
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Dict, List, Optional

from evaluation.metrics import aggregate_folds, flag_record
from evaluation.report import config_digest, host_info, record_body, write_run_outputs
from graph.workflow import run_folds
from models.base import BaseClassifier
from schemas import EvalRecord, ModelKind, RunConfig, RunReport
from services.tabular import Dataset, ingest_csv
from utils.logging import get_logger

log = get_logger(__name__)

MODEL_LABELS = {ModelKind.LOGISTIC: "LR", ModelKind.KNN: "KNN"}
METHOD = "GLANCE"


@dataclass
class RunOutcome:
    report: RunReport
    record: EvalRecord
    output_dir: Optional[Path] = None
    files: List[Path] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(self.report.gates.values())


def _candidate_dump(solution: Any) -> Dict[str, Any]:
    return {str(cid): [a.to_record() for a in actions] for cid, actions in sorted(solution.candidates.items())}


def _model_label(config: RunConfig, preloaded: Optional[BaseClassifier]) -> str:
    """LR or KNN for the built-in kinds, whether trained per fold or loaded."""
    if preloaded is None:
        return MODEL_LABELS[config.model.kind]
    if preloaded.kind is None:
        return preloaded.descriptor
    return MODEL_LABELS[preloaded.kind]


def execute_run(
    config: RunConfig,
    output_dir: Optional[Path] = None,
    *,
    jobs: Optional[int] = None,
    dataset: Optional[Dataset] = None,
    preloaded: Optional[BaseClassifier] = None,
) -> RunOutcome:
    """
    Run every fold and aggregate. Artifacts are written only when
    `output_dir` is given.
    """
    started = datetime.now(timezone.utc)
    t0 = time.perf_counter()
    if dataset is None:
        dataset = ingest_csv(config.dataset.path, config.dataset.schema_config, name=config.dataset.name)
    jobs = jobs or config.jobs

    states = run_folds(config, dataset, jobs=jobs, preloaded=preloaded)
    folds = [s["fold_result"] for s in states]
    model_label = _model_label(config, preloaded)
    record = aggregate_folds(
        [s["fold_metrics"] for s in states],
        method=METHOD,
        dataset=config.dataset.name,
        model=model_label,
        s=config.glance.s,
    )
    flags = flag_record(record)
    gates: Dict[str, bool] = {}
    if config.min_effectiveness is not None:
        gates["min_effectiveness"] = record.eff_mean >= config.min_effectiveness

    report = RunReport(
        config_digest=config_digest(config),
        dataset_fingerprint=dataset.fingerprint(),
        seeds={"run": config.seed, "glance": config.glance.seed, "model": config.model.seed},
        folds=folds,
        record=record_body(record),
        flags=flags,
        gates=gates,
    )
    outcome = RunOutcome(report=report, record=record)
    log.info(
        "run finished",
        extra={"ctx": {"name": config.name, "eff_mean": round(record.eff_mean, 3),
                       "cost_mean": record.cost_mean, "gates": gates}},
    )

    if output_dir is not None:
        manifest = {
            "name": config.name,
            "started_at": started.isoformat(),
            "finished_at": datetime.now(timezone.utc).isoformat(),
            "wall_seconds": time.perf_counter() - t0,
            "jobs": jobs,
            "dataset_path": str(config.dataset.path),
            **host_info(),
            "folds": [
                {"fold": s["fold"], "timings": s.get("timings", {}), "model_calls": s.get("model_calls", 0)}
                for s in states
            ],
        }
        candidates = ({s["fold"]: _candidate_dump(s["solution"]) for s in states if s.get("solution")}
                      if config.dump_candidates else None)
        assignments = ({s["fold"]: s["solution"].assignments for s in states if s.get("solution")}
                       if config.dump_assignments else None)
        outcome.output_dir = Path(output_dir)
        outcome.files = write_run_outputs(output_dir, report, record, manifest, candidates, assignments)
    return outcome
