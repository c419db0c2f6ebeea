"""
Initial partitioning of the affected population and the merge distances.

k-means runs in the L1 geometry of the encoded space (L1 assignment, median
update), so its objective is the same distance the cost model uses. Clusters
are immutable; merging returns a new ClusterState.
"""

from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np

from errors import DataError
from services.actions import Action, dedup, mean_action_vector
from services.tabular import Instance, TabularSchema, encode_batch, to_batch
from utils.logging import get_logger

log = get_logger(__name__)

MAX_ITERATIONS = 300


@dataclass(frozen=True)
class ClusterState:
    id: int
    members: Tuple[Instance, ...]
    member_indices: Tuple[int, ...]
    centroid: Instance
    candidate_actions: Tuple[Action, ...] = ()

    def __post_init__(self) -> None:
        if not self.members:
            raise DataError(f"cluster {self.id} has no members")

    def __len__(self) -> int:
        return len(self.members)

    def with_candidates(self, actions: Sequence[Action]) -> "ClusterState":
        return ClusterState(self.id, self.members, self.member_indices, self.centroid,
                            tuple(dedup(actions)))


@dataclass
class KMeansFit:
    labels: np.ndarray
    centers: np.ndarray
    objective_history: List[float] = field(default_factory=list)
    iterations: int = 0


def _l1_to_centers(z: np.ndarray, centers: np.ndarray) -> np.ndarray:
    out = np.empty((z.shape[0], centers.shape[0]), dtype=float)
    for c in range(centers.shape[0]):
        out[:, c] = np.abs(z - centers[c]).sum(axis=1)
    return out


def fit_kmeans(z: np.ndarray, k: int, seed: int, max_iter: int = MAX_ITERATIONS) -> KMeansFit:
    """
    Seeded Lloyd iterations with L1 assignment and coordinate-wise median centres.

    k is clamped to the number of distinct rows. Ties in assignment go to the
    lowest centre index. A centre left without points is re-seeded at the
    point farthest from its own centre.
    """
    z = np.asarray(z, dtype=float)
    n = z.shape[0]
    _, first = np.unique(z, axis=0, return_index=True)
    distinct = np.sort(first)
    k_eff = min(k, len(distinct))
    rng = np.random.default_rng(seed)
    centers = z[np.sort(rng.choice(distinct, size=k_eff, replace=False))].copy()

    labels = np.full(n, -1, dtype=int)
    history: List[float] = []
    iterations = 0
    for it in range(max_iter):
        iterations = it + 1
        dist = _l1_to_centers(z, centers)
        new_labels = np.argmin(dist, axis=1)
        own = dist[np.arange(n), new_labels]
        counts = np.bincount(new_labels, minlength=k_eff)
        for c in np.flatnonzero(counts == 0):
            movable = counts[new_labels] > 1
            score = np.where(movable, own, -1.0)
            far = int(np.argmax(score))
            if score[far] <= 0:
                continue
            counts[new_labels[far]] -= 1
            counts[c] += 1
            new_labels[far] = c
            own[far] = 0.0
            centers[c] = z[far]
        changed = not np.array_equal(new_labels, labels)
        labels = new_labels
        for c in range(k_eff):
            block = z[labels == c]
            if len(block):
                centers[c] = np.median(block, axis=0)
        history.append(float(np.abs(z - centers[labels]).sum()))
        if not changed:
            break
    return KMeansFit(labels=labels, centers=centers, objective_history=history, iterations=iterations)


def centroid(members: Sequence[Instance], schema: TabularSchema) -> Instance:
    """Numeric mean and categorical mode (ties go to the earlier label)."""
    if not members:
        raise DataError("centroid of an empty cluster")
    batch = to_batch(members, schema)
    values: List[object] = [None] * len(schema)
    for j, i in enumerate(schema.numeric_positions):
        values[i] = float(batch.numeric[:, j].mean())
    for j, i in enumerate(schema.categorical_positions):
        feat = schema.features[i]
        counts = np.bincount(batch.categorical[:, j], minlength=len(feat.categories))
        values[i] = feat.categories[int(np.argmax(counts))]
    return Instance(tuple(values))


def kmeans(points: Sequence[Instance], k: int, seed: int, schema: TabularSchema) -> List[ClusterState]:
    if not points:
        raise DataError("kmeans needs at least one point")
    if k < 1:
        raise DataError("k must be at least 1")
    z = encode_batch(to_batch(points, schema), schema)
    fit = fit_kmeans(z, k, seed)
    clusters: List[ClusterState] = []
    for label in sorted(set(int(v) for v in fit.labels)):
        idx = tuple(int(i) for i in np.flatnonzero(fit.labels == label))
        members = tuple(points[i] for i in idx)
        clusters.append(ClusterState(len(clusters), members, idx, centroid(members, schema)))
    log.debug(
        "kmeans finished",
        extra={"ctx": {"points": len(points), "k": k, "clusters": len(clusters),
                       "iterations": fit.iterations}},
    )
    return clusters


# -------------------------- Distances --------------------------


def encode_centroid(c: ClusterState, schema: TabularSchema) -> np.ndarray:
    return encode_batch(to_batch([c.centroid], schema), schema)[0]


def action_means(c: ClusterState, schema: TabularSchema) -> Optional[np.ndarray]:
    """Mean action vector of the candidate set, None when it is empty."""
    if not c.candidate_actions:
        return None
    return mean_action_vector(c.candidate_actions, schema)


def _l1(u: np.ndarray, v: np.ndarray) -> float:
    return float(np.abs(u - v).sum())


def merge_distance(
    p1: np.ndarray,
    m1: Optional[np.ndarray],
    p2: np.ndarray,
    m2: Optional[np.ndarray],
    empty_penalty: float,
) -> float:
    """d1 + d2 on encoded centroids and mean action vectors (None for an empty set)."""
    if m1 is None or m2 is None:
        return _l1(p1, p2) + float(empty_penalty)
    return _l1(p1, p2) + _l1(m1, m2)


def d1(c1: ClusterState, c2: ClusterState, schema: TabularSchema) -> float:
    return _l1(encode_centroid(c1, schema), encode_centroid(c2, schema))


def d2(
    c1: ClusterState,
    c2: ClusterState,
    schema: TabularSchema,
    empty_penalty: Optional[float] = None,
    clusters: Sequence[ClusterState] = (),
) -> float:
    """
    L1 between mean action vectors.

    When either candidate set is empty the result is the empty-set penalty:
    `empty_penalty` if given, otherwise `empty_action_penalty` over `clusters`
    (or over the two arguments when no clusters are passed).
    """
    if c1 == c2:
        return 0.0
    m1, m2 = action_means(c1, schema), action_means(c2, schema)
    if m1 is None or m2 is None:
        if empty_penalty is None:
            empty_penalty = empty_action_penalty(list(clusters) or [c1, c2], schema)
        return float(empty_penalty)
    return _l1(m1, m2)


def empty_action_penalty(clusters: Sequence[ClusterState], schema: TabularSchema) -> float:
    """Twice the largest d1+d2 over pairs whose candidate sets are both nonempty."""
    full = [c for c in clusters if c.candidate_actions]
    points = [encode_centroid(c, schema) for c in full]
    means = [action_means(c, schema) for c in full]
    best = 0.0
    for i in range(len(full)):
        for j in range(i + 1, len(full)):
            best = max(best, merge_distance(points[i], means[i], points[j], means[j], 0.0))
    return 2.0 * best if best > 0 else 1.0


def merge(c1: ClusterState, c2: ClusterState, schema: TabularSchema) -> ClusterState:
    if c1.id == c2.id:
        raise DataError(f"cannot merge cluster {c1.id} with itself")
    first, second = (c1, c2) if c1.id < c2.id else (c2, c1)
    members = first.members + second.members
    return ClusterState(
        id=first.id,
        members=members,
        member_indices=first.member_indices + second.member_indices,
        centroid=centroid(members, schema),
        candidate_actions=tuple(dedup(first.candidate_actions + second.candidate_actions)),
    )
