"""
Candidate action generators.

Each generator receives a (possibly synthetic) centroid instance and returns up
to m distinct actions, every one of which flips the model's prediction for
that centroid to +1. All randomness flows through an explicit numpy Generator
so output is a deterministic function of the seed.
"""

from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

from errors import DataError
from models.base import BaseClassifier
from schemas import GeneratorConfig, GeneratorKind
from services.actions import (
    Action,
    CategoricalSet,
    Change,
    NumericDelta,
    action_between,
    apply_batch,
    cost,
)
from services.tabular import Dataset, Instance, TabularBatch, encode_batch, to_batch
from utils.logging import get_logger

log = get_logger(__name__)

CandidateSource = Callable[[int, Instance], List[Action]]


# -------------------------- Permutation importance --------------------------


@dataclass(frozen=True)
class FeatureImportance:
    names: Tuple[str, ...]
    scores: Tuple[float, ...]

    @property
    def ranking(self) -> Tuple[str, ...]:
        # Highest score first; schema order breaks ties.
        order = sorted(range(len(self.names)), key=lambda i: (-self.scores[i], i))
        return tuple(self.names[i] for i in order)

    def top(self, k: int) -> Tuple[str, ...]:
        return self.ranking[:k]

    def as_dict(self) -> Dict[str, float]:
        return dict(zip(self.names, self.scores))


def permutation_importance(model: BaseClassifier, data: Dataset, seed: int) -> FeatureImportance:
    """Score = fraction of predictions that change when one column is shuffled."""
    schema = model.schema
    batch = to_batch(data.rows, schema)
    base = model.predict_rows(batch)
    rng = np.random.default_rng(seed)
    scores: List[float] = []
    for name in schema.names:
        shuffled = batch.copy()
        col = schema.column_of[name]
        perm = rng.permutation(len(batch))
        if schema.feature(name).is_numeric:
            shuffled.numeric[:, col] = batch.numeric[perm, col]
        else:
            shuffled.categorical[:, col] = batch.categorical[perm, col]
        scores.append(float(np.mean(model.predict_rows(shuffled) != base)))
    return FeatureImportance(names=schema.names, scores=tuple(scores))


# -------------------------- Shared context --------------------------


@dataclass
class GenerationContext:
    """Per-fold state shared by all clusters: positives, importance, frequent categories."""

    model: BaseClassifier
    train: Dataset
    cfg: GeneratorConfig
    positive_rows: List[Instance] = field(default_factory=list)
    positive_encoded: np.ndarray = field(default_factory=lambda: np.zeros((0, 0)))
    importance: Optional[FeatureImportance] = None
    frequent: Dict[str, Tuple[int, ...]] = field(default_factory=dict)

    @classmethod
    def build(cls, model: BaseClassifier, train: Dataset, cfg: GeneratorConfig) -> "GenerationContext":
        schema = model.schema
        batch = to_batch(train.rows, schema)
        labels = model.predict_rows(batch)
        mask = labels == 1
        positive_rows = [x for x, keep in zip(train.rows, mask) if keep]
        positives = batch.take(np.flatnonzero(mask))
        ctx = cls(
            model=model,
            train=train,
            cfg=cfg,
            positive_rows=positive_rows,
            positive_encoded=encode_batch(positives, schema),
        )
        if cfg.kind == GeneratorKind.RANDOM_SAMPLING:
            ctx.importance = permutation_importance(model, train, cfg.seed)
            pool = positives if len(positives) else batch
            for name in schema.names:
                feat = schema.feature(name)
                if feat.is_numeric:
                    continue
                counts = np.bincount(pool.categorical[:, schema.column_of[name]],
                                     minlength=len(feat.categories))
                order = sorted(range(len(counts)), key=lambda c: (-counts[c], c))
                ctx.frequent[name] = tuple(c for c in order if counts[c] > 0)[: cfg.k_c]
        return ctx


def _flips(model: BaseClassifier, actions: Sequence[Action], centroid: TabularBatch) -> np.ndarray:
    if not actions:
        return np.zeros(0, dtype=bool)
    schema = model.schema
    rows = [apply_batch(a, centroid, schema) for a in actions]
    stacked = TabularBatch(
        np.vstack([r.numeric for r in rows]), np.vstack([r.categorical for r in rows])
    )
    return model.predict_rows(stacked) == 1


def _rank(actions: Sequence[Action], centroid: Instance, ctx: GenerationContext, m: int) -> List[Action]:
    schema = ctx.model.schema
    unique = list(dict.fromkeys(actions))
    unique.sort(key=lambda a: (cost(a, centroid, schema), a.key))
    return unique[:m]


# -------------------------- Random sampling --------------------------


def generate_random_sampling(
    centroid: Instance,
    model: BaseClassifier,
    train: Dataset,
    cfg: GeneratorConfig,
    *,
    context: Optional[GenerationContext] = None,
    rng: Optional[np.random.Generator] = None,
) -> List[Action]:
    """
    Perturb the top-k_f important features of the centroid, one more feature
    per round, and keep the proposals the model accepts.

    Numeric steps are +-1..10 bin widths; categorical targets come from the
    k_c most frequent categories among model-positive training rows.
    """
    ctx = context
    if ctx is None or ctx.importance is None:
        ctx = GenerationContext.build(
            model, train, cfg.model_copy(update={"kind": GeneratorKind.RANDOM_SAMPLING})
        )
    rng = rng if rng is not None else np.random.default_rng(cfg.seed)
    schema = model.schema
    base = to_batch([centroid], schema)
    if model.predict_rows(base)[0] == 1:
        log.warning("centroid already receives the favourable outcome", extra={"ctx": {"id": centroid.id}})
        return []

    top = list(ctx.importance.top(min(cfg.k_f, len(schema))))
    budget = cfg.m * cfg.proposal_factor
    rounds = len(top)
    per_round = [budget // rounds + (1 if r < budget % rounds else 0) for r in range(rounds)]
    found: List[Action] = []
    for r, n_proposals in enumerate(per_round):
        n_changes = r + 1
        proposals: List[Action] = []
        for _ in range(n_proposals):
            chosen = rng.choice(len(top), size=n_changes, replace=False)
            changes: Dict[str, Change] = {}
            for idx in sorted(int(c) for c in chosen):
                name = top[idx]
                if schema.feature(name).is_numeric:
                    step = int(rng.integers(1, 11)) * (1 if rng.random() < 0.5 else -1)
                    changes[name] = NumericDelta(step * schema.feature(name).bin_width)
                else:
                    current = schema.category_index[name][centroid.values[schema.positions[name]]]
                    options = [c for c in ctx.frequent.get(name, ()) if c != current]
                    if options:
                        code = options[int(rng.integers(len(options)))]
                        changes[name] = CategoricalSet(schema.feature(name).categories[code])
            if changes:
                proposals.append(Action.from_mapping(changes))
        valid = _flips(model, proposals, base)
        found.extend(a for a, ok in zip(proposals, valid) if ok)
        if len(set(found)) >= cfg.m:
            break

    out = _rank(found, centroid, ctx, cfg.m)
    if len(out) < cfg.m:
        log.warning(
            "random sampling returned fewer candidates than requested",
            extra={"ctx": {"requested": cfg.m, "found": len(out), "budget": budget}},
        )
    return out


# -------------------------- Nearest neighbours --------------------------


def _neighbour_order(centroid: Instance, ctx: GenerationContext) -> np.ndarray:
    if not ctx.positive_rows:
        raise DataError("no unaffected population: the model predicts -1 for every training row")
    schema = ctx.model.schema
    z = encode_batch(to_batch([centroid], schema), schema)[0]
    dist = np.abs(ctx.positive_encoded - z).sum(axis=1)
    return np.argsort(dist, kind="stable")


def generate_nearest_neighbors(
    centroid: Instance,
    model: BaseClassifier,
    train: Dataset,
    cfg: GeneratorConfig,
    *,
    context: Optional[GenerationContext] = None,
    rng: Optional[np.random.Generator] = None,
) -> List[Action]:
    """Actions that move the centroid onto its m nearest model-positive training rows."""
    ctx = context or GenerationContext.build(model, train, cfg)
    schema = model.schema
    base = to_batch([centroid], schema)
    order = _neighbour_order(centroid, ctx)
    found: List[Action] = []
    seen = set()
    for start in range(0, len(order), cfg.m):
        chunk = []
        for idx in order[start:start + cfg.m]:
            action = action_between(centroid, ctx.positive_rows[int(idx)], schema)
            if action not in seen:
                seen.add(action)
                chunk.append(action)
        valid = _flips(model, chunk, base)
        found.extend(a for a, ok in zip(chunk, valid) if ok)
        if len(found) >= cfg.m:
            break
    return found[: cfg.m]


def generate_nearest_neighbors_scaled(
    centroid: Instance,
    model: BaseClassifier,
    train: Dataset,
    cfg: GeneratorConfig,
    *,
    context: Optional[GenerationContext] = None,
    rng: Optional[np.random.Generator] = None,
) -> List[Action]:
    """
    Walk the segment from the centroid towards each nearest neighbour and stop
    at the first sampled fraction whose point the model accepts.

    At each fraction the numeric coordinates are interpolated; the centroid's
    own categories are tried first and the neighbour's categories second. The
    full neighbour action is the fallback.
    """
    ctx = context or GenerationContext.build(model, train, cfg)
    schema = model.schema
    base = to_batch([centroid], schema)
    neighbours = generate_nearest_neighbors(centroid, model, train, cfg, context=ctx)
    fractions = [i / cfg.line_samples for i in range(1, cfg.line_samples + 1)]

    out: List[Action] = []
    for full in neighbours:
        target_values = list(centroid.values)
        for name, change in full.changes:
            i = schema.positions[name]
            if isinstance(change, NumericDelta):
                target_values[i] = float(centroid.values[i]) + change.delta
            else:
                target_values[i] = change.target
        target = Instance(tuple(target_values))

        steps: List[Action] = []
        for t in fractions:
            steps.append(action_between(centroid, target, schema, fraction=t, switch_categoricals=False))
            steps.append(action_between(centroid, target, schema, fraction=t, switch_categoricals=True))
        valid = _flips(model, steps, base)
        hits = np.flatnonzero(valid)
        chosen = steps[int(hits[0])] if len(hits) else full
        if cost(chosen, centroid, schema) > cost(full, centroid, schema):
            chosen = full
        out.append(chosen)
    return list(dict.fromkeys(out))


_GENERATORS = {
    GeneratorKind.RANDOM_SAMPLING: generate_random_sampling,
    GeneratorKind.NEAREST_NEIGHBORS: generate_nearest_neighbors,
    GeneratorKind.NEAREST_NEIGHBORS_SCALED: generate_nearest_neighbors_scaled,
}


def cluster_rng(seed: int, cluster_id: int) -> np.random.Generator:
    """Independent stream per cluster, independent of scheduling order."""
    return np.random.default_rng([seed, cluster_id])


def make_candidate_source(model: BaseClassifier, train: Dataset, cfg: GeneratorConfig) -> CandidateSource:
    """Bind a generator and its shared context into a per-cluster callable."""
    ctx = GenerationContext.build(model, train, cfg)
    generator = _GENERATORS[cfg.kind]

    def source(cluster_id: int, centroid: Instance) -> List[Action]:
        return generator(centroid, model, train, cfg, context=ctx, rng=cluster_rng(cfg.seed, cluster_id))

    return source


def fixed_pool_source(pool: Sequence[Action]) -> CandidateSource:
    """Every cluster receives the same explicit pool."""
    frozen = list(dict.fromkeys(pool))

    def source(cluster_id: int, centroid: Instance) -> List[Action]:
        return list(frozen)

    return source
