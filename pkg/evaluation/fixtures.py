"""
Replay of bundled published-results fixtures.

A fixture holds evaluation records for several methods plus the tallies they
are expected to produce. Replaying re-runs dominance and flagging over the
records and diffs the observed cells against the stored expectations.
"""

import json
from pathlib import Path
from typing import Any, Dict, List

from pydantic import BaseModel, ConfigDict, Field, ValidationError

from errors import ConfigError, FixtureMismatchError
from evaluation.dominance import DominanceReport, compare_records
from schemas import EvalRecord
from utils.logging import get_logger

log = get_logger(__name__)

FIXTURES_DIR = Path(__file__).resolve().parent.parent / "data" / "fixtures"
ROW_COLUMNS = ["method", "dataset", "model", "eff_mean", "eff_std", "cost_mean", "cost_std"]


class ExpectedCell(BaseModel):
    model_config = ConfigDict(extra="forbid")

    value: Any
    tolerance: float = 0.0


class FixtureFile(BaseModel):
    model_config = ConfigDict(extra="forbid")

    name: str
    description: str = ""
    s: int = Field(..., ge=1)
    focus: str
    columns: List[str] = Field(default_factory=lambda: list(ROW_COLUMNS))
    rows: List[List[Any]]
    expected: Dict[str, Any]

    def records(self) -> List[EvalRecord]:
        if self.columns != ROW_COLUMNS:
            raise ConfigError([f"fixture '{self.name}': columns must be {ROW_COLUMNS}"])
        return [EvalRecord(s=self.s, **dict(zip(self.columns, row))) for row in self.rows]

    def expectations(self) -> Dict[str, ExpectedCell]:
        out = {}
        for cell, raw in self.expected.items():
            out[cell] = ExpectedCell.model_validate(raw) if isinstance(raw, dict) else ExpectedCell(value=raw)
        return out


def available_fixtures(directory: Path = FIXTURES_DIR) -> List[str]:
    return sorted(p.stem.replace("_", "-") for p in Path(directory).glob("*.json"))


def load_fixture(name: str, directory: Path = FIXTURES_DIR) -> FixtureFile:
    if not name:
        raise ConfigError(["fixture name is empty"])
    path = Path(directory) / f"{name.replace('-', '_')}.json"
    if not path.exists():
        raise ConfigError([f"unknown fixture '{name}' (available: {', '.join(available_fixtures(directory))})"])
    try:
        return FixtureFile.model_validate(json.loads(path.read_text(encoding="utf-8")))
    except (json.JSONDecodeError, ValidationError) as exc:
        raise ConfigError([f"{path}: invalid fixture ({exc})"]) from exc


def observed_cells(report: DominanceReport, focus: str) -> Dict[str, Any]:
    """Flatten a dominance report into the cell names fixtures use."""
    cells: Dict[str, Any] = {}
    tally = report.tallies[focus]
    cells[f"{focus}.dominates"] = tally["dominates"]
    cells[f"{focus}.dominated"] = tally["dominated"]
    cells[f"{focus}.comparisons"] = tally["comparisons"]
    for row in report.focus_table:
        if row["competitor"] == "total":
            continue
        cells[f"{focus}.vs.{row['competitor']}.dominates"] = row["dominates"]
        cells[f"{focus}.vs.{row['competitor']}.dominated"] = row["dominated"]
    cells[f"{focus}.dominated_by"] = sorted(
        f"{p['winner']}@{p['dataset']}/{p['model']}" for p in report.dominated_by(focus)
    )
    for method, counts in report.flags.items():
        cells[f"{method}.records"] = counts["records"]
        cells[f"{method}.impractical"] = counts["impractical"]
        cells[f"{method}.eff_robust"] = counts["records"] - counts["eff_non_robust"]
        cells[f"{method}.cost_robust"] = counts["records"] - counts["cost_non_robust"]
    return cells


def _matches(observed: Any, expected: ExpectedCell) -> bool:
    if isinstance(expected.value, (int, float)) and isinstance(observed, (int, float)):
        return abs(observed - expected.value) <= expected.tolerance
    return observed == expected.value


def replay_fixture(name: str, directory: Path = FIXTURES_DIR, strict: bool = True) -> Dict[str, Any]:
    """
    Recompute dominance and flags for a fixture and compare with its expectations.

    Raises FixtureMismatchError listing every disagreeing cell when `strict`.
    """
    fixture = load_fixture(name, directory)
    report = compare_records(fixture.records(), focus=fixture.focus)
    cells = observed_cells(report, fixture.focus)
    mismatches: List[str] = []
    for cell, expected in fixture.expectations().items():
        if cell not in cells:
            mismatches.append(f"{cell}: not produced")
        elif not _matches(cells[cell], expected):
            mismatches.append(f"{cell}: expected {expected.value!r}, observed {cells[cell]!r}")
    result = {
        "fixture": fixture.name,
        "s": fixture.s,
        "focus": fixture.focus,
        "cells": cells,
        "mismatches": mismatches,
        "dominance": report.to_dict(),
    }
    if mismatches:
        log.error("fixture mismatch", extra={"ctx": {"fixture": fixture.name, "cells": mismatches}})
        if strict:
            raise FixtureMismatchError(mismatches)
    else:
        log.info("fixture replayed", extra={"ctx": {"fixture": fixture.name, "cells": len(fixture.expected)}})
    return result


def replay_summary(result: Dict[str, Any]) -> str:
    focus = result["focus"]
    cells = result["cells"]
    return (
        f"{result['fixture']}: {focus} dominates {cells[f'{focus}.dominates']}/"
        f"{cells[f'{focus}.comparisons']}, dominated {cells[f'{focus}.dominated']}"
    )
