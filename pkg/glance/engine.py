"""
GLANCE: agglomerative clustering in the joint feature/action space.

    1. k-means over the affected instances.
    2. m candidate actions per cluster centroid.
    3. Repeatedly merge the pair of clusters with the smallest d1 + d2 until s
       clusters remain; candidate pools are merged with them.
    4. Pick one action per surviving cluster according to the selection
       strategy, scored on the cluster's own members.

The merge loop keeps a pairwise distance matrix and updates only the row and
column of the merged cluster, so each merge costs O(#clusters) distance
evaluations.
"""

import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence

import numpy as np

from errors import ConfigError, DataError
from glance.candidates import CandidateSource, make_candidate_source
from glance.clustering import (
    ClusterState,
    action_means,
    empty_action_penalty,
    encode_centroid,
    kmeans,
    merge,
    merge_distance,
)
from models.base import BaseClassifier, CountingClassifier
from schemas import GlanceConfig, SelectionKind, SelectionStrategy
from services.actions import Action, apply_batch, cost_batch
from services.tabular import Dataset, Instance, TabularBatch, to_batch
from utils.logging import get_logger

log = get_logger(__name__)


@dataclass(frozen=True)
class CandidateScore:
    action: Action
    effectiveness: float
    cost: Optional[float]

    @property
    def sort_cost(self) -> float:
        return float("inf") if self.cost is None else self.cost


@dataclass
class ActionDiagnostic:
    action: Action
    source_cluster: int
    cluster_size: int
    local_effectiveness: float
    local_cost: Optional[float]


@dataclass
class GceSolution:
    actions: List[Action]
    diagnostics: List[ActionDiagnostic] = field(default_factory=list)
    warnings: List[str] = field(default_factory=list)
    timings: Dict[str, float] = field(default_factory=dict)
    model_calls: int = 0
    initial_clusters: int = 0
    candidates: Dict[int, List[Action]] = field(default_factory=dict)
    assignments: List[Dict[str, Any]] = field(default_factory=list)

    @property
    def size(self) -> int:
        return len(self.actions)


# -------------------------- Selection --------------------------


def score_candidates(
    actions: Sequence[Action], population: TabularBatch, model: BaseClassifier
) -> List[CandidateScore]:
    """Effectiveness and mean cost over flipped rows, for each action on a population."""
    schema = model.schema
    scores: List[CandidateScore] = []
    for action in actions:
        flipped = model.predict_rows(apply_batch(action, population, schema)) == 1
        eff = float(flipped.mean()) if len(population) else 0.0
        avg = float(cost_batch(action, population, schema)[flipped].mean()) if flipped.any() else None
        scores.append(CandidateScore(action, eff, avg))
    return scores


def _max_effectiveness(scores: Sequence[CandidateScore]) -> CandidateScore:
    return min(scores, key=lambda c: (-c.effectiveness, c.sort_cost, c.action.key))


def pick_by_strategy(scores: Sequence[CandidateScore], strategy: SelectionStrategy) -> Optional[CandidateScore]:
    if not scores:
        return None
    kind = strategy.kind
    if kind == SelectionKind.MAX_EFFECTIVENESS:
        return _max_effectiveness(scores)

    if kind == SelectionKind.MIN_COST:
        pool = [c for c in scores if c.effectiveness > 0]
        key = lambda c: (c.sort_cost, -c.effectiveness, c.action.key)  # noqa: E731
    elif kind == SelectionKind.MIN_COST_ABOVE_EFF:
        pool = [c for c in scores if c.effectiveness >= strategy.threshold]
        key = lambda c: (c.sort_cost, -c.effectiveness, c.action.key)  # noqa: E731
    else:
        pool = [c for c in scores if c.cost is not None and c.cost <= strategy.budget]
        key = lambda c: (-c.effectiveness, c.sort_cost, c.action.key)  # noqa: E731

    if pool:
        return min(pool, key=key)
    log.info("no candidate satisfies the selection strategy, using max effectiveness",
             extra={"ctx": {"strategy": kind.value}})
    return _max_effectiveness(scores)


def select_final(
    cluster: ClusterState,
    strategy: SelectionStrategy,
    model: BaseClassifier,
    population: Optional[TabularBatch] = None,
) -> Optional[Action]:
    """The cluster's chosen action, scored on its members unless another population is given."""
    batch = population if population is not None else to_batch(cluster.members, model.schema)
    picked = pick_by_strategy(score_candidates(cluster.candidate_actions, batch, model), strategy)
    return picked.action if picked is not None else None


# -------------------------- Main loop --------------------------


def _assignment(clusters: Sequence[ClusterState], xa: Sequence[Instance]) -> Dict[str, int]:
    out: Dict[str, int] = {}
    for c in clusters:
        for idx in c.member_indices:
            out[xa[idx].id if xa[idx].id is not None else str(idx)] = c.id
    return dict(sorted(out.items()))


def _generate(clusters: List[ClusterState], source: CandidateSource, workers: int) -> List[ClusterState]:
    def one(c: ClusterState) -> ClusterState:
        return c.with_candidates(source(c.id, c.centroid))

    if workers > 1 and len(clusters) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(one, clusters))
    return [one(c) for c in clusters]


def glance(
    xa: Sequence[Instance],
    model: BaseClassifier,
    train: Dataset,
    cfg: GlanceConfig,
    candidate_source: Optional[CandidateSource] = None,
    record_assignments: bool = False,
) -> GceSolution:
    if not xa:
        raise DataError("the affected set is empty")
    if cfg.s > cfg.k:
        raise ConfigError([f"s={cfg.s} exceeds k={cfg.k}"])

    counted = CountingClassifier(model)
    schema = model.schema
    xa_batch = to_batch(xa, schema)
    if np.any(counted.predict_rows(xa_batch) == 1):
        raise DataError("every affected instance must be predicted -1")

    timings: Dict[str, float] = {}
    warnings: List[str] = []
    assignments: List[Dict[str, Any]] = []

    t0 = time.perf_counter()
    clusters = kmeans(list(xa), cfg.k, cfg.seed, schema)
    timings["clustering"] = time.perf_counter() - t0
    initial = len(clusters)

    t0 = time.perf_counter()
    source = candidate_source or make_candidate_source(counted, train, cfg.generator_config())
    clusters = _generate(clusters, source, cfg.workers)
    timings["generation"] = time.perf_counter() - t0
    for c in clusters:
        if not c.candidate_actions:
            msg = f"cluster {c.id} ({len(c)} members): generator returned no candidate actions"
            warnings.append(msg)
            log.warning(msg, extra={"ctx": {"cluster": c.id, "members": len(c)}})
    candidates = {c.id: list(c.candidate_actions) for c in clusters}

    t0 = time.perf_counter()
    if record_assignments:
        assignments.append({"clusters": len(clusters), "assignment": _assignment(clusters, xa)})
    penalty = empty_action_penalty(clusters, schema)
    points = [encode_centroid(c, schema) for c in clusters]
    means = [action_means(c, schema) for c in clusters]

    def pair_distance(i: int, j: int) -> float:
        return merge_distance(points[i], means[i], points[j], means[j], penalty)

    n = len(clusters)
    dist = np.full((n, n), np.inf)
    for i in range(n):
        for j in range(i + 1, n):
            dist[i, j] = pair_distance(i, j)

    while len(clusters) > cfg.s:
        # Row-major argmin: lowest (i, j) wins ties.
        flat = int(np.argmin(dist))
        i, j = divmod(flat, dist.shape[1])
        merged = merge(clusters[i], clusters[j], schema)
        clusters[i] = merged
        points[i] = encode_centroid(merged, schema)
        means[i] = action_means(merged, schema)
        del clusters[j], points[j], means[j]
        dist = np.delete(np.delete(dist, j, axis=0), j, axis=1)
        for other in range(len(clusters)):
            if other < i:
                dist[other, i] = pair_distance(other, i)
            elif other > i:
                dist[i, other] = pair_distance(i, other)
        if record_assignments:
            assignments.append({"clusters": len(clusters), "assignment": _assignment(clusters, xa)})
    timings["merging"] = time.perf_counter() - t0

    t0 = time.perf_counter()
    actions: List[Action] = []
    diagnostics: List[ActionDiagnostic] = []
    for c in clusters:
        members = to_batch(c.members, schema)
        population = xa_batch if cfg.selection_scope == "global" else members
        picked = pick_by_strategy(score_candidates(c.candidate_actions, population, counted),
                                  cfg.selection)
        if picked is None:
            msg = f"cluster {c.id} has no candidate actions and contributes none"
            warnings.append(msg)
            log.warning(msg, extra={"ctx": {"cluster": c.id}})
            continue
        if picked.action in actions:
            continue
        actions.append(picked.action)
        diagnostics.append(ActionDiagnostic(picked.action, c.id, len(c), picked.effectiveness, picked.cost))
    timings["selection"] = time.perf_counter() - t0

    log.info(
        "glance finished",
        extra={"ctx": {"affected": len(xa), "initial_clusters": initial, "s": cfg.s,
                       "actions": len(actions), "model_calls": counted.calls,
                       "timings": {k: round(v, 4) for k, v in timings.items()}}},
    )
    return GceSolution(
        actions=actions,
        diagnostics=diagnostics,
        warnings=warnings,
        timings=timings,
        model_calls=counted.calls,
        initial_clusters=initial,
        candidates=candidates,
        assignments=assignments,
    )
