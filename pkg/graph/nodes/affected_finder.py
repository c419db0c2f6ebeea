"""Affected Finder node: test rows the fold's model predicts -1."""

from typing import Any, Dict

from models.base import affected_set
from utils.logging import get_logger

log = get_logger(__name__)


def run(*, state: Dict[str, Any]) -> Dict[str, Any]:
    xa = affected_set(state["model"], state["test"])
    state["affected"] = xa
    if not xa:
        msg = f"fold {state['fold']}: the affected set is empty, recourse is vacuous"
        state.setdefault("warnings", []).append(msg)
        log.warning(msg, extra={"ctx": {"fold": state["fold"]}})
    else:
        log.info("affected set computed",
                 extra={"ctx": {"fold": state["fold"], "affected": len(xa), "test_rows": len(state["test"])}})
    return state
