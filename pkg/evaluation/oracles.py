"""
Exact and greedy reference solvers for the explicit-action case.

When the candidate actions are given up front, choosing at most s of them to
maximise effectiveness is Max s-Cover. These solvers (and the reduction that
builds such instances) validate GLANCE and the metric stack on small inputs.
"""

import itertools
import math
from dataclasses import dataclass, field
from typing import Any, Dict, Hashable, List, Optional, Sequence, Tuple

import numpy as np

from errors import BudgetExceededError, DataError
from glance.candidates import fixed_pool_source
from glance.engine import glance
from models.base import BaseClassifier
from models.lookup import LookupClassifier
from schemas import FeatureKind, GlanceConfig
from services.actions import Action, NumericDelta, apply_batch, cost_batch
from services.tabular import (
    Dataset,
    FeatureSchema,
    Instance,
    TabularSchema,
    encode_batch,
    to_batch,
)
from utils.logging import get_logger

log = get_logger(__name__)

ENUMERATION_BUDGET = 10 ** 6
GREEDY_RATIO = 1.0 - 1.0 / math.e


@dataclass
class ExplicitInstance:
    xa: List[Instance]
    candidate_pool: List[Action]
    model: BaseClassifier
    s: int

    def __post_init__(self) -> None:
        if not self.candidate_pool:
            raise DataError("an explicit instance needs a nonempty candidate pool")
        if self.s < 1:
            raise DataError("s must be at least 1")
        if not self.xa:
            raise DataError("an explicit instance needs affected instances")


@dataclass
class OracleResult:
    actions: List[Action]
    covered: int
    total: int
    average_cost: Optional[float]

    @property
    def effectiveness(self) -> float:
        return self.covered / self.total


def coverage_table(inst: ExplicitInstance) -> Tuple[np.ndarray, np.ndarray]:
    """(flips, costs): one row per pool action, one column per affected instance."""
    schema = inst.model.schema
    batch = to_batch(inst.xa, schema)
    flips = np.zeros((len(inst.candidate_pool), len(batch)), dtype=bool)
    costs = np.zeros_like(flips, dtype=float)
    for i, action in enumerate(inst.candidate_pool):
        flips[i] = inst.model.predict_rows(apply_batch(action, batch, schema)) == 1
        costs[i] = cost_batch(action, batch, schema)
    return flips, costs


def _evaluate(subset: Sequence[int], flips: np.ndarray, costs: np.ndarray) -> Tuple[int, Optional[float]]:
    if not subset:
        return 0, None
    idx = list(subset)
    rc = np.where(flips[idx], costs[idx], np.inf).min(axis=0)
    covered = np.isfinite(rc)
    n = int(covered.sum())
    return n, (float(rc[covered].mean()) if n else None)


def subset_count(pool_size: int, s: int) -> int:
    return sum(math.comb(pool_size, r) for r in range(0, min(s, pool_size) + 1))


def exhaustive_best(inst: ExplicitInstance, budget: int = ENUMERATION_BUDGET) -> OracleResult:
    """
    Enumerate every subset of size <= s; maximise effectiveness, then minimise
    average cost. Among exact ties the first subset in (size, lexicographic)
    order wins.
    """
    p = len(inst.candidate_pool)
    count = subset_count(p, inst.s)
    if count > budget:
        raise BudgetExceededError(count, budget)
    flips, costs = coverage_table(inst)
    best: Tuple[int, ...] = ()
    best_n, best_cost = 0, None
    for r in range(1, min(inst.s, p) + 1):
        for combo in itertools.combinations(range(p), r):
            n, avg = _evaluate(combo, flips, costs)
            if n > best_n or (n == best_n and n > 0 and avg < (best_cost if best_cost is not None else math.inf)):
                best, best_n, best_cost = combo, n, avg
    return OracleResult([inst.candidate_pool[i] for i in best], best_n, len(inst.xa), best_cost)


def exhaustive_pareto_front(inst: ExplicitInstance, budget: int = ENUMERATION_BUDGET) -> List[OracleResult]:
    """Every non-dominated (effectiveness, average cost) point over subsets of size <= s."""
    p = len(inst.candidate_pool)
    count = subset_count(p, inst.s)
    if count > budget:
        raise BudgetExceededError(count, budget)
    flips, costs = coverage_table(inst)
    points: Dict[Tuple[int, float], Tuple[int, ...]] = {}
    for r in range(1, min(inst.s, p) + 1):
        for combo in itertools.combinations(range(p), r):
            n, avg = _evaluate(combo, flips, costs)
            if n == 0:
                continue
            points.setdefault((n, avg), combo)

    def dominated(a: Tuple[int, float]) -> bool:
        return any(b[0] >= a[0] and b[1] <= a[1] and b != a for b in points)

    front = sorted((k for k in points if not dominated(k)), key=lambda k: (k[0], k[1]))
    return [OracleResult([inst.candidate_pool[i] for i in points[k]], k[0], len(inst.xa), k[1]) for k in front]


def greedy_cover(inst: ExplicitInstance) -> OracleResult:
    """
    s rounds of maximum marginal coverage. Ties go to the lower mean cost over
    the newly covered instances, then to canonical action order. Stops as soon
    as no action adds coverage.
    """
    flips, costs = coverage_table(inst)
    covered = np.zeros(flips.shape[1], dtype=bool)
    chosen: List[int] = []
    for _ in range(inst.s):
        best: Optional[Tuple[int, float, str, int]] = None
        for i, action in enumerate(inst.candidate_pool):
            if i in chosen:
                continue
            new = flips[i] & ~covered
            gain = int(new.sum())
            if gain == 0:
                continue
            key = (-gain, float(costs[i][new].mean()), action.key, i)
            if best is None or key < best:
                best = key
        if best is None:
            break
        chosen.append(best[3])
        covered |= flips[best[3]]
    n, avg = _evaluate(chosen, flips, costs)
    return OracleResult([inst.candidate_pool[i] for i in chosen], n, len(inst.xa), avg)


# -------------------------- Max s-Cover reduction --------------------------


LEVER = "lever"


def max_cover_reduction(universe: Sequence[Hashable], family: Sequence[Sequence[Hashable]], s: int) -> ExplicitInstance:
    """
    One affected instance per universe element and one action per set, with a
    lookup classifier that accepts a_i(x_j) exactly when element j is in set i.

    Each element owns a binary categorical indicator feature; a numeric "lever"
    feature carries the actions (a_i moves the lever by i + 1).
    """
    if not family:
        raise DataError("the set family must be nonempty")
    if len(set(universe)) != len(universe):
        raise DataError("universe elements must be unique")
    members = set(universe)
    for subset in family:
        stray = set(subset) - members
        if stray:
            raise DataError(f"set mentions elements outside the universe: {sorted(map(str, stray))}")

    features = [
        FeatureSchema(name=f"e_{u}", kind=FeatureKind.CATEGORICAL, categories=("0", "1")) for u in universe
    ]
    features.append(
        FeatureSchema(name=LEVER, kind=FeatureKind.NUMERIC, observed_min=0.0, observed_max=float(len(family)))
    )
    schema = TabularSchema(features=tuple(features))

    def element(j: int, lever: float) -> Instance:
        flags = tuple("1" if k == j else "0" for k in range(len(universe)))
        return Instance(flags + (lever,), id=str(universe[j]))

    xa = [element(j, 0.0) for j in range(len(universe))]
    actions = [Action.from_mapping({LEVER: NumericDelta(float(i + 1))}) for i in range(len(family))]
    accepted = [
        element(j, float(i + 1))
        for i, subset in enumerate(family)
        for j, u in enumerate(universe)
        if u in set(subset)
    ]
    points = encode_batch(to_batch(accepted, schema), schema) if accepted else []
    model = LookupClassifier.from_points(schema, points)
    return ExplicitInstance(xa=xa, candidate_pool=actions, model=model, s=s)


def random_reduction_instance(rng: np.random.Generator, max_elements: int = 15, max_sets: int = 10,
                              max_s: int = 3) -> Tuple[ExplicitInstance, List[List[int]]]:
    n = int(rng.integers(3, max_elements + 1))
    p = int(rng.integers(2, max_sets + 1))
    s = int(rng.integers(1, max_s + 1))
    universe = list(range(n))
    family: List[List[int]] = []
    for _ in range(p):
        subset = [u for u in universe if rng.random() < 0.3]
        family.append(subset or [int(rng.integers(n))])
    return max_cover_reduction(universe, family, s), family


# -------------------------- Acceptance suite --------------------------


@dataclass
class OracleCheckReport:
    instances: List[Dict[str, Any]] = field(default_factory=list)
    violations: List[str] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return not self.violations

    def to_dict(self) -> Dict[str, Any]:
        return {"passed": self.passed, "instances": self.instances, "violations": self.violations}


def glance_on_pool(inst: ExplicitInstance, seed: int = 13) -> OracleResult:
    """GLANCE with every cluster restricted to the instance's candidate pool."""
    schema = inst.model.schema
    k = max(inst.s, min(len(inst.xa), 5))
    cfg = GlanceConfig(s=inst.s, k=k, m=len(inst.candidate_pool), seed=seed)
    train = Dataset(schema=schema, rows=tuple(inst.xa), name="explicit")
    solution = glance(inst.xa, inst.model, train, cfg, candidate_source=fixed_pool_source(inst.candidate_pool))
    flips, costs = coverage_table(inst)
    index = {a: i for i, a in enumerate(inst.candidate_pool)}
    n, avg = _evaluate([index[a] for a in solution.actions], flips, costs)
    return OracleResult(solution.actions, n, len(inst.xa), avg)


def oracle_check(n_instances: int = 50, seed: int = 13) -> OracleCheckReport:
    """
    Seeded random Max s-Cover instances: GLANCE never beats the exact optimum
    and greedy always reaches (1 - 1/e) of it.
    """
    rng = np.random.default_rng(seed)
    report = OracleCheckReport()
    for t in range(n_instances):
        inst, family = random_reduction_instance(rng)
        opt = exhaustive_best(inst)
        greedy = greedy_cover(inst)
        ours = glance_on_pool(inst, seed=seed + t)
        row = {
            "instance": t,
            "elements": len(inst.xa),
            "sets": family,
            "s": inst.s,
            "optimum": opt.covered,
            "greedy": greedy.covered,
            "glance": ours.covered,
        }
        report.instances.append(row)
        if ours.covered > opt.covered:
            report.violations.append(f"instance {t}: glance covers {ours.covered} > optimum {opt.covered}")
        if greedy.covered > opt.covered or greedy.covered < GREEDY_RATIO * opt.covered:
            report.violations.append(f"instance {t}: greedy covers {greedy.covered}, optimum {opt.covered}")
    log.info("oracle check finished",
             extra={"ctx": {"instances": n_instances, "violations": len(report.violations)}})
    return report
