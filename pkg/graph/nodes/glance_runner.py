"""
GLANCE Runner node.

Runs the global explanation on the fold's affected set with the training split
as the unaffected population for candidate generation. Skipped (solution None)
when nothing is affected.
"""

from typing import Any, Dict

from glance.engine import glance
from utils.logging import get_logger

log = get_logger(__name__)


def run(*, state: Dict[str, Any]) -> Dict[str, Any]:
    xa = state["affected"]
    config = state["config"]
    if not xa:
        state["solution"] = None
        return state

    # Clamp k to the affected-set size; s stays as configured.
    cfg = config.glance
    k = max(cfg.s, min(cfg.k, len(xa)))
    if k != cfg.k:
        cfg = cfg.model_copy(update={"k": k})

    solution = glance(xa, state["model"], state["train"], cfg,
                      record_assignments=config.dump_assignments)
    state["solution"] = solution
    state.setdefault("warnings", []).extend(solution.warnings)
    state.setdefault("timings", {}).update(solution.timings)
    state["model_calls"] = solution.model_calls
    log.info("fold explained",
             extra={"ctx": {"fold": state["fold"], "actions": solution.size, "k": k}})
    return state
