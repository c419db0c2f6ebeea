"""
Single-fold experiments around the main run.

- `sweep`: GLANCE over a grid of initial cluster counts x candidates per
  cluster (x optionally several s), one effectiveness/cost cell each.
- `local_baseline`: each affected instance gets its own generated candidates
  and keeps its cheapest one; the resulting effectiveness and cost are the
  reference point a global explanation is compared against.
"""

from dataclasses import dataclass
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np

from errors import DataError
from evaluation.metrics import recourse_costs
from glance.candidates import make_candidate_source
from glance.engine import glance
from models import train_model
from models.base import BaseClassifier, affected_set
from schemas import RunConfig
from services.actions import Action, cost
from services.tabular import Dataset, Instance, split_kfold
from utils.logging import get_logger

log = get_logger(__name__)


@dataclass
class FoldSetup:
    train: Dataset
    test: Dataset
    model: BaseClassifier
    affected: List[Instance]


def prepare_fold(config: RunConfig, dataset: Dataset, fold: int = 0,
                 preloaded: Optional[BaseClassifier] = None) -> FoldSetup:
    splits = split_kfold(dataset, config.folds, config.seed)
    if not 0 <= fold < len(splits):
        raise DataError(f"fold {fold} out of range 0..{len(splits) - 1}")
    train, test = splits[fold]
    model = preloaded or train_model(train, config.model)
    xa = affected_set(model, test)
    if not xa:
        raise DataError(f"fold {fold}: the affected set is empty")
    return FoldSetup(train, test, model, xa)


def _score(actions: Sequence[Action], setup: FoldSetup) -> Tuple[float, Optional[float]]:
    costs = recourse_costs(actions, setup.affected, setup.model)
    covered = costs[~np.isnan(costs)]
    return 100.0 * covered.size / len(costs), (float(covered.mean()) if covered.size else None)


def sweep(
    config: RunConfig,
    dataset: Dataset,
    ks: Sequence[int],
    ms: Sequence[int],
    s_values: Optional[Sequence[int]] = None,
    fold: int = 0,
) -> List[Dict[str, Any]]:
    """
    One row per (k, m, s). A decrease of effectiveness as s grows (k and m
    fixed) is logged as a warning; it is possible and not an error.
    """
    setup = prepare_fold(config, dataset, fold)
    s_values = list(s_values or [config.glance.s])
    rows: List[Dict[str, Any]] = []
    for k in ks:
        for m in ms:
            previous: Optional[Tuple[int, float]] = None
            for s in sorted(s_values):
                if s > k:
                    continue
                cfg = config.glance.model_copy(update={"k": k, "m": m, "s": s})
                solution = glance(setup.affected, setup.model, setup.train, cfg)
                eff, avg = _score(solution.actions, setup)
                rows.append({"k": k, "m": m, "s": s, "effectiveness": eff, "average_cost": avg,
                             "size": solution.size, "model_calls": solution.model_calls})
                if previous is not None and eff < previous[1]:
                    log.warning(
                        "effectiveness decreased as s grew",
                        extra={"ctx": {"k": k, "m": m, "from_s": previous[0], "to_s": s,
                                       "from": previous[1], "to": eff}},
                    )
                previous = (s, eff)
    log.info("sweep finished", extra={"ctx": {"cells": len(rows), "fold": fold}})
    return rows


def local_baseline(config: RunConfig, dataset: Dataset, fold: int = 0) -> Dict[str, Any]:
    """Per-instance cheapest generated action, aggregated over the affected set."""
    setup = prepare_fold(config, dataset, fold)
    schema = setup.model.schema
    source = make_candidate_source(setup.model, setup.train, config.glance.generator_config())
    costs: List[float] = []
    distinct = set()
    for i, x in enumerate(setup.affected):
        candidates = source(i, x)
        if not candidates:
            continue
        best = min(candidates, key=lambda a: (cost(a, x, schema), a.key))
        costs.append(cost(best, x, schema))
        distinct.add(best)
    n = len(setup.affected)
    result = {
        "fold": fold,
        "affected": n,
        "effectiveness": 100.0 * len(costs) / n,
        "average_cost": float(np.mean(costs)) if costs else None,
        "distinct_actions": len(distinct),
    }
    log.info("local baseline finished", extra={"ctx": result})
    return result
