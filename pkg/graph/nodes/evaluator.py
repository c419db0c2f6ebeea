"""
Evaluator node.

Scores the fold's action set on its affected set: effectiveness (percent),
average recourse cost over covered instances, and the effectiveness-cost
curve. Produces the fold's FoldResult and FoldMetrics.
"""

from typing import Any, Dict

import numpy as np

from evaluation.metrics import FoldMetrics, curve_from_costs, default_grid, recourse_costs
from schemas import ActionDiagnosticModel, FoldResult


def run(*, state: Dict[str, Any]) -> Dict[str, Any]:
    config = state["config"]
    solution = state.get("solution")
    xa = state["affected"]
    runtime = float(sum(state.get("timings", {}).values()))

    if solution is None:
        eff, avg, size, curve, diagnostics = 100.0, None, 0, [], []
    else:
        costs = recourse_costs(solution.actions, xa, state["model"])
        covered = costs[~np.isnan(costs)]
        eff = 100.0 * float(covered.size) / len(xa)
        avg = float(covered.mean()) if covered.size else None
        grid = config.curve_grid if config.curve_grid is not None else default_grid(costs)
        curve = curve_from_costs(costs, grid)
        size = solution.size
        diagnostics = [
            ActionDiagnosticModel(
                action=d.action.to_record(),
                source_cluster=d.source_cluster,
                cluster_size=d.cluster_size,
                local_effectiveness=d.local_effectiveness,
                local_cost=d.local_cost,
            )
            for d in solution.diagnostics
        ]

    state["fold_result"] = FoldResult(
        fold=state["fold"],
        train_rows=len(state["train"]),
        test_rows=len(state["test"]),
        train_accuracy=state["train_accuracy"],
        test_accuracy=state["test_accuracy"],
        affected=len(xa),
        effectiveness=eff,
        average_cost=avg,
        size=size,
        actions=diagnostics,
        curve=curve,
        warnings=list(state.get("warnings", [])),
    )
    state["fold_metrics"] = FoldMetrics(effectiveness=eff, average_cost=avg, size=size,
                                        runtime_seconds=runtime)
    return state
