"""
Run artifacts.

report.json is the deterministic result body: everything in it is a function
of the config digest and the dataset, so reruns compare byte for byte.
Timestamps, host details, timings and model-call counts go to manifest.json.
"""

import hashlib
import json
import platform
import sys
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence

import pandas as pd
from pydantic import ValidationError

from errors import ConfigError
from schemas import CurvePoint, EvalRecord, RunConfig, RunReport
from utils.logging import get_logger

log = get_logger(__name__)

REPORT_FILE = "report.json"
RECORD_FILE = "record.json"
MANIFEST_FILE = "manifest.json"

# Keys that change where or how fast a run executes, never what it computes.
_DIGEST_EXCLUDE = {
    "output_dir": True,
    "jobs": True,
    "dump_candidates": True,
    "dump_assignments": True,
    "dataset": {"path"},
    "glance": {"workers"},
}


def config_digest(config: RunConfig) -> str:
    body = config.model_dump(mode="json", exclude=_DIGEST_EXCLUDE, by_alias=True)
    payload = json.dumps(body, sort_keys=True)
    return hashlib.sha256(payload.encode("utf-8")).hexdigest()[:16]


def _write_json(path: Path, body: Any) -> Path:
    path.write_text(json.dumps(body, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return path


def write_curve(path: Path, curve: Sequence[CurvePoint]) -> Path:
    frame = pd.DataFrame(
        [(p.cost_threshold, p.covered_fraction) for p in curve],
        columns=["cost_threshold", "covered_fraction"],
    )
    frame.to_csv(path, index=False)
    return path


def record_body(record: EvalRecord) -> Dict[str, Any]:
    """The record as embedded in report.json: runtime is not deterministic."""
    return record.model_dump(mode="json", exclude={"runtime_seconds"})


def write_run_outputs(
    out_dir: Path,
    report: RunReport,
    record: EvalRecord,
    manifest: Dict[str, Any],
    candidates: Optional[Dict[int, Any]] = None,
    assignments: Optional[Dict[int, Any]] = None,
) -> List[Path]:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written = [
        _write_json(out_dir / REPORT_FILE, report.model_dump(mode="json")),
        _write_json(out_dir / RECORD_FILE, record.model_dump(mode="json")),
    ]
    for fold in report.folds:
        written.append(write_curve(out_dir / f"curve_fold{fold.fold}.csv", fold.curve))
    for fold, body in sorted((candidates or {}).items()):
        written.append(_write_json(out_dir / f"candidates_fold{fold}.json", body))
    for fold, body in sorted((assignments or {}).items()):
        written.append(_write_json(out_dir / f"assignments_fold{fold}.json", body))
    written.append(_write_json(out_dir / MANIFEST_FILE, manifest))
    log.info("run outputs written", extra={"ctx": {"dir": str(out_dir), "files": len(written)}})
    return written


def host_info() -> Dict[str, str]:
    return {
        "host": platform.node(),
        "platform": platform.platform(),
        "python": sys.version.split()[0],
    }


def load_records(paths: Sequence[Path]) -> List[EvalRecord]:
    """
    Read EvalRecords for comparison. A file may hold one record object, a list
    of records, or a run's report.json (its embedded record is used).
    """
    records: List[EvalRecord] = []
    problems: List[str] = []
    for path in paths:
        path = Path(path)
        try:
            raw = json.loads(path.read_text(encoding="utf-8"))
        except FileNotFoundError:
            problems.append(f"{path}: not found")
            continue
        except json.JSONDecodeError as exc:
            problems.append(f"{path}: invalid JSON ({exc})")
            continue
        if isinstance(raw, dict) and "schema_version" in raw and "record" in raw:
            raw = raw["record"]
        items = raw if isinstance(raw, list) else [raw]
        for i, item in enumerate(items):
            try:
                records.append(EvalRecord.model_validate(item))
            except ValidationError as exc:
                problems.append(f"{path}[{i}]: {exc.errors()[0].get('msg')}")
    if problems:
        raise ConfigError(problems)
    return records
