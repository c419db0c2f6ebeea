"""
Evaluation of action sets: recourse cost, effectiveness, average cost, curves,
Pareto dominance, practicality/robustness flags and fold aggregation.
"""

from dataclasses import dataclass
from typing import List, Optional, Sequence, Union

import numpy as np

from errors import DataError, IncomparableRecordsError
from models.base import BaseClassifier
from schemas import CurvePoint, EvalRecord, RecordFlags
from services.actions import Action, apply_batch, cost_batch
from services.tabular import Instance, TabularBatch, to_batch

Population = Union[Sequence[Instance], TabularBatch]

PRACTICAL_THRESHOLD = 80.0
EFF_STD_LIMIT = 5.0


def _as_batch(xa: Population, model: BaseClassifier) -> TabularBatch:
    return xa if isinstance(xa, TabularBatch) else to_batch(list(xa), model.schema)


def recourse_costs(actions: Sequence[Action], xa: Population, model: BaseClassifier) -> np.ndarray:
    """Per-instance minimum cost over effective actions; NaN where nothing flips."""
    batch = _as_batch(xa, model)
    best = np.full(len(batch), np.inf)
    for action in actions:
        flipped = model.predict_rows(apply_batch(action, batch, model.schema)) == 1
        costs = cost_batch(action, batch, model.schema)
        best = np.where(flipped, np.minimum(best, costs), best)
    return np.where(np.isinf(best), np.nan, best)


def recourse_cost(actions: Sequence[Action], x: Instance, model: BaseClassifier) -> Optional[float]:
    value = recourse_costs(actions, [x], model)[0]
    return None if np.isnan(value) else float(value)


def effectiveness(actions: Sequence[Action], xa: Population, model: BaseClassifier) -> float:
    batch = _as_batch(xa, model)
    if len(batch) == 0:
        raise DataError("effectiveness over an empty affected set")
    return float(np.mean(~np.isnan(recourse_costs(actions, batch, model))))


def average_cost(actions: Sequence[Action], xa: Population, model: BaseClassifier) -> Optional[float]:
    costs = recourse_costs(actions, xa, model)
    covered = costs[~np.isnan(costs)]
    return float(covered.mean()) if covered.size else None


def curve_from_costs(costs: np.ndarray, grid: Sequence[float]) -> List[CurvePoint]:
    grid = [float(t) for t in grid]
    if any(b < a for a, b in zip(grid, grid[1:])):
        raise DataError("cost grid must be sorted ascending")
    n = len(costs)
    reached = np.sort(costs[~np.isnan(costs)])
    return [
        CurvePoint(
            cost_threshold=t,
            covered_fraction=float(np.searchsorted(reached, t, side="right")) / n if n else 0.0,
        )
        for t in grid
    ]


def default_grid(costs: np.ndarray, step: float = 0.5) -> List[float]:
    covered = costs[~np.isnan(costs)]
    top = float(np.ceil(covered.max() / step) * step) if covered.size else step
    return [round(i * step, 10) for i in range(int(round(top / step)) + 1)]


def effectiveness_cost_curve(
    actions: Sequence[Action], xa: Population, model: BaseClassifier, grid: Sequence[float]
) -> List[CurvePoint]:
    """Fraction of the affected set whose recourse cost is at most each threshold."""
    return curve_from_costs(recourse_costs(actions, xa, model), grid)


# -------------------------- Records --------------------------


def _cost_or_inf(value: Optional[float]) -> float:
    return float("inf") if value is None else value


def _dominates_values(e1: float, c1: Optional[float], e2: float, c2: Optional[float]) -> bool:
    c1, c2 = _cost_or_inf(c1), _cost_or_inf(c2)
    return e1 >= e2 and c1 <= c2 and (e1 > e2 or c1 < c2)


def pareto_dominates(r1: EvalRecord, r2: EvalRecord, per_fold: bool = False) -> bool:
    """
    Equal-or-better effectiveness and cost, strictly better in one, on fold means.

    With `per_fold`, r1 must dominate r2 on every fold. An absent cost counts
    as worse than any present cost.
    """
    if r1.key != r2.key:
        raise IncomparableRecordsError(f"records for {r1.key} and {r2.key} are not comparable", [r1, r2])
    if not per_fold:
        return _dominates_values(r1.eff_mean, r1.cost_mean, r2.eff_mean, r2.cost_mean)
    if (r1.fold_eff is None or r2.fold_eff is None or r1.fold_cost is None or r2.fold_cost is None
            or len(r1.fold_eff) != len(r2.fold_eff)):
        raise IncomparableRecordsError("per-fold dominance needs matching per-fold values", [r1, r2])
    return all(
        _dominates_values(e1, c1, e2, c2)
        for e1, c1, e2, c2 in zip(r1.fold_eff, r1.fold_cost, r2.fold_eff, r2.fold_cost)
    )


def flag_record(r: EvalRecord, practical_threshold: float = PRACTICAL_THRESHOLD) -> RecordFlags:
    """Practical at >= 80% effectiveness; robust with inclusive std bounds."""
    eff_robust = r.eff_std <= EFF_STD_LIMIT
    cost_robust = r.cost_mean is None or r.cost_std <= r.cost_mean / 2.0
    return RecordFlags(
        practical=r.eff_mean >= practical_threshold,
        robust=eff_robust and cost_robust,
        eff_robust=eff_robust,
        cost_robust=cost_robust,
    )


@dataclass(frozen=True)
class FoldMetrics:
    """One fold's outcome; effectiveness in percent."""

    effectiveness: float
    average_cost: Optional[float]
    size: int
    runtime_seconds: float = 0.0


def aggregate_folds(
    per_fold: Sequence[FoldMetrics],
    *,
    method: str = "GLANCE",
    dataset: str = "dataset",
    model: str = "model",
    s: int = 1,
    sample_std: bool = False,
) -> EvalRecord:
    """
    Mean and standard deviation across folds (population std unless
    `sample_std`). Folds without coverage are left out of the cost statistics
    and counted.
    """
    if not per_fold:
        raise DataError("aggregate_folds needs at least one fold")
    ddof = 1 if sample_std and len(per_fold) > 1 else 0
    effs = np.array([f.effectiveness for f in per_fold], dtype=float)
    costs = np.array([f.average_cost for f in per_fold if f.average_cost is not None], dtype=float)
    return EvalRecord(
        method=method,
        dataset=dataset,
        model=model,
        s=s,
        eff_mean=float(effs.mean()),
        eff_std=float(effs.std(ddof=ddof)),
        cost_mean=float(costs.mean()) if costs.size else None,
        cost_std=float(costs.std(ddof=ddof if costs.size > 1 else 0)) if costs.size else 0.0,
        size_actual=max(f.size for f in per_fold),
        runtime_seconds=float(np.mean([f.runtime_seconds for f in per_fold])),
        folds=len(per_fold),
        cost_folds_excluded=len(per_fold) - int(costs.size),
        fold_eff=[float(v) for v in effs],
        fold_cost=[f.average_cost for f in per_fold],
    )
