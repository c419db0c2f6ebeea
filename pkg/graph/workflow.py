"""
Per-fold workflow assembly using a Pydantic state model.

Linear flow:
    model_trainer -> affected_finder -> glance_runner -> evaluator

Key details:
- The graph's state type is a Pydantic model (BaseModel) to satisfy LangGraph.
- Node wrappers convert the Pydantic state <-> dict so node implementations
  can stay simple and return dictionaries.
- A small adapter lets callers pass either a dict or a FoldState into
  `.invoke(...)` and always get a plain dict back.
- `run_folds` fans folds out over a thread pool and returns them in fold order.
"""

from concurrent.futures import ThreadPoolExecutor
from typing import Any, Dict, List, Optional

from langgraph.graph import END, StateGraph
from pydantic import BaseModel, ConfigDict, Field

from errors import FoldError, GceError
from models.base import BaseClassifier
from schemas import RunConfig
from services.tabular import Dataset, split_kfold
from utils.logging import get_logger

log = get_logger(__name__)


class FoldState(BaseModel):
    """
    State carried through one fold. Datasets, models and solutions are plain
    Python objects; they are passed through untouched.
    """

    model_config = ConfigDict(extra="allow", arbitrary_types_allowed=True)

    fold: int
    config: Any
    train: Any
    test: Any
    model: Any = None
    train_accuracy: float = 0.0
    test_accuracy: float = 0.0
    affected: List[Any] = Field(default_factory=list)
    solution: Any = None
    model_calls: int = 0
    warnings: List[str] = Field(default_factory=list)
    timings: Dict[str, float] = Field(default_factory=dict)
    fold_result: Any = None
    fold_metrics: Any = None


def _as_dict(state: FoldState) -> Dict[str, Any]:
    # Shallow: model_dump would turn dataclass payloads into dicts.
    return {**{name: getattr(state, name) for name in FoldState.model_fields},
            **(state.model_extra or {})}


def build_workflow(*, preloaded: Optional[BaseClassifier] = None):
    """
    Build and compile the per-fold graph. `preloaded` replaces training with a
    model loaded from an artifact.
    """
    from .nodes.affected_finder import run as af_run
    from .nodes.evaluator import run as ev_run
    from .nodes.glance_runner import run as gr_run
    from .nodes.model_trainer import run as mt_run

    # ---- Node wrappers: FoldState -> dict -> FoldState ----

    def _mt_node(state: FoldState) -> FoldState:
        return FoldState.model_validate(mt_run(state=_as_dict(state), preloaded=preloaded))

    def _af_node(state: FoldState) -> FoldState:
        return FoldState.model_validate(af_run(state=_as_dict(state)))

    def _gr_node(state: FoldState) -> FoldState:
        return FoldState.model_validate(gr_run(state=_as_dict(state)))

    def _ev_node(state: FoldState) -> FoldState:
        return FoldState.model_validate(ev_run(state=_as_dict(state)))

    graph = StateGraph(FoldState)
    graph.add_node("model_trainer", _mt_node)
    graph.add_node("affected_finder", _af_node)
    graph.add_node("glance_runner", _gr_node)
    graph.add_node("evaluator", _ev_node)

    graph.set_entry_point("model_trainer")
    graph.add_edge("model_trainer", "affected_finder")
    graph.add_edge("affected_finder", "glance_runner")
    graph.add_edge("glance_runner", "evaluator")
    graph.add_edge("evaluator", END)

    compiled = graph.compile()

    class _CompiledWorkflowAdapter:
        """
        Small adapter to make `.invoke(...)` ergonomic:
        - Accepts dict OR FoldState
        - Always returns a plain dict
        """

        def __init__(self, inner):
            self._inner = inner

        def invoke(self, input_state: Any) -> Dict[str, Any]:
            if isinstance(input_state, FoldState):
                state = input_state
            else:
                state = FoldState.model_validate(input_state)
            out = self._inner.invoke(state)
            if isinstance(out, FoldState):
                return _as_dict(out)
            return dict(out)

    return _CompiledWorkflowAdapter(compiled)


def run_folds(
    config: RunConfig,
    dataset: Dataset,
    *,
    jobs: int = 1,
    preloaded: Optional[BaseClassifier] = None,
) -> List[Dict[str, Any]]:
    """
    Run every fold through the workflow, at most `jobs` at a time. Any fold
    failure aborts the run with a FoldError naming the fold.
    """
    workflow = build_workflow(preloaded=preloaded)
    splits = split_kfold(dataset, config.folds, config.seed)

    def one(i: int) -> Dict[str, Any]:
        train, test = splits[i]
        log.info("fold started", extra={"ctx": {"fold": i, "train": len(train), "test": len(test)}})
        try:
            out = workflow.invoke({"fold": i, "config": config, "train": train, "test": test})
        except GceError as exc:
            log.error("fold failed", extra={"ctx": {"fold": i, "error": str(exc)}})
            raise FoldError(i, exc) from exc
        log.info("fold finished", extra={"ctx": {"fold": i, "effectiveness": out["fold_result"].effectiveness}})
        return out

    if jobs > 1 and len(splits) > 1:
        with ThreadPoolExecutor(max_workers=min(jobs, len(splits))) as pool:
            return list(pool.map(one, range(len(splits))))
    return [one(i) for i in range(len(splits))]
