"""
Tests for glance/engine.py: the GLANCE loop and final-action selection.
"""

import numpy as np
import pytest

from conftest import plane_rows
from errors import ConfigError, DataError
from evaluation.metrics import effectiveness
from glance.candidates import fixed_pool_source
from glance.clustering import ClusterState
from glance.engine import CandidateScore, glance, pick_by_strategy, select_final
from models.base import CountingClassifier
from schemas import GeneratorConfig, GlanceConfig, SelectionStrategy
from services.actions import Action, CategoricalSet, NumericDelta
from services.tabular import Dataset, Instance
from utils.logging import get_logger

log = get_logger(__name__)


def _a(delta: float) -> Action:
    return Action.from_mapping({"f": NumericDelta(delta)})


class TestSelection:
    """Strategies for the final action of a cluster."""

    @pytest.fixture
    def scores(self):
        return [
            CandidateScore(_a(1.0), 0.5, 1.0),
            CandidateScore(_a(2.0), 0.9, 2.0),
            CandidateScore(_a(3.0), 0.9, 1.5),
            CandidateScore(_a(4.0), 0.0, None),
        ]

    def test_max_effectiveness(self, scores):
        """Highest effectiveness, ties by lower cost."""
        assert pick_by_strategy(scores, SelectionStrategy()).action == _a(3.0)

    def test_min_cost(self, scores):
        """Cheapest among actions that flip anyone."""
        assert pick_by_strategy(scores, SelectionStrategy(kind="min_cost")).action == _a(1.0)

    def test_min_cost_above_threshold(self, scores):
        """Cheapest among actions reaching the threshold."""
        picked = pick_by_strategy(scores, SelectionStrategy(kind="min_cost_above_eff", threshold=0.8))
        assert picked.action == _a(3.0)

    def test_max_eff_below_budget(self, scores):
        """Most effective within the cost budget."""
        picked = pick_by_strategy(scores, SelectionStrategy(kind="max_eff_below_cost", budget=1.2))
        assert picked.action == _a(1.0)

    def test_unsatisfiable_falls_back(self, scores):
        """An impossible threshold falls back to max effectiveness."""
        picked = pick_by_strategy(scores, SelectionStrategy(kind="min_cost_above_eff", threshold=1.0))
        assert picked.action == _a(3.0)

    def test_missing_parameter(self):
        """Threshold strategies need their parameter."""
        with pytest.raises(ValueError):
            SelectionStrategy(kind="min_cost_above_eff")

    def test_empty(self):
        """No candidates, no pick."""
        assert pick_by_strategy([], SelectionStrategy()) is None

    def test_select_final_on_members(self, line_model):
        """Scored on the cluster's own members: the cheaper full flip wins."""
        members = (Instance((8.0, "A")), Instance((9.0, "A")))
        step, switch, jump = _a(1.0), Action.from_mapping({"g": CategoricalSet("B")}), _a(2.0)
        cluster = ClusterState(0, members, (0, 1), members[0], (step, switch, jump))
        assert select_final(cluster, SelectionStrategy(), line_model) == switch
        assert select_final(cluster, SelectionStrategy(kind="min_cost"), line_model) == switch
        picked = select_final(cluster, SelectionStrategy(kind="max_eff_below_cost", budget=1.0), line_model)
        assert picked == switch


class TestGlance:
    """End-to-end behaviour on synthetic data."""

    def test_at_most_s_valid_actions(self, plane_affected, plane_model, plane_train):
        """The explanation has at most s actions and covers most of the affected set."""
        cfg = GlanceConfig(s=3, k=10, m=5, seed=2)
        sol = glance(plane_affected, plane_model, plane_train, cfg)
        assert 1 <= sol.size <= 3
        assert len(set(sol.actions)) == sol.size
        assert sol.initial_clusters == 10
        assert effectiveness(sol.actions, plane_affected, plane_model) >= 0.5
        assert set(sol.timings) == {"clustering", "generation", "merging", "selection"}

    def test_deterministic(self, plane_affected, plane_model, plane_train):
        """Same inputs and seed, same actions."""
        cfg = GlanceConfig(s=2, k=6, m=4, seed=21)
        a = glance(plane_affected, plane_model, plane_train, cfg)
        b = glance(plane_affected, plane_model, plane_train, cfg)
        assert a.actions == b.actions

    def test_workers_do_not_change_the_result(self, plane_affected, plane_model, plane_train):
        """Parallel generation gives the same explanation as sequential."""
        cfg = GlanceConfig(s=2, k=6, m=4, seed=21)
        a = glance(plane_affected, plane_model, plane_train, cfg)
        b = glance(plane_affected, plane_model, plane_train, cfg.model_copy(update={"workers": 4}))
        assert a.actions == b.actions

    def test_s_equal_k_skips_merging(self, plane_affected, plane_model, plane_train):
        """With s = k every initial cluster contributes at most one action."""
        cfg = GlanceConfig(s=4, k=4, m=3, seed=1)
        sol = glance(plane_affected, plane_model, plane_train, cfg, record_assignments=True)
        assert len(sol.assignments) == 1
        assert sol.size <= 4

    def test_assignments_per_merge_level(self, plane_affected, plane_model, plane_train):
        """One assignment snapshot per cluster count, from k down to s."""
        cfg = GlanceConfig(s=2, k=5, m=3, seed=1)
        sol = glance(plane_affected, plane_model, plane_train, cfg, record_assignments=True)
        assert [snap["clusters"] for snap in sol.assignments] == [5, 4, 3, 2]
        assert len(sol.assignments[-1]["assignment"]) == len(plane_affected)

    def test_effectiveness_as_s_grows(self, plane_affected, plane_model, plane_train):
        """Seeded sweep over s in {1, 2, 4, 8}; drops in effectiveness are logged, sizes are checked."""
        drops = []
        for seed in range(5):
            previous = None
            for s in (1, 2, 4, 8):
                cfg = GlanceConfig(s=s, k=8, m=3, seed=seed)
                sol = glance(plane_affected, plane_model, plane_train, cfg)
                assert sol.size <= s
                eff = effectiveness(sol.actions, plane_affected, plane_model)
                if previous is not None and eff < previous[1]:
                    drops.append({"seed": seed, "from_s": previous[0], "to_s": s,
                                  "from": previous[1], "to": eff})
                previous = (s, eff)
        if drops:
            log.warning("effectiveness decreased as s grew", extra={"ctx": {"drops": drops}})

    def test_fixed_pool(self, plane_affected, plane_model, plane_train):
        """With an explicit pool the answer is drawn from it."""
        pool = [
            Action.from_mapping({"x1": NumericDelta(8.0)}),
            Action.from_mapping({"c": CategoricalSet("c"), "x2": NumericDelta(4.0)}),
        ]
        sol = glance(plane_affected, plane_model, plane_train, GlanceConfig(s=1, k=3, m=2),
                     candidate_source=fixed_pool_source(pool))
        assert sol.actions and set(sol.actions) <= set(pool)

    def test_empty_affected_set(self, plane_model, plane_train):
        """Nothing to explain is an error."""
        with pytest.raises(DataError):
            glance([], plane_model, plane_train, GlanceConfig(s=1, k=1))

    def test_positive_instance_rejected(self, plane_model, plane_train, plane_affected):
        """Every input must be predicted -1."""
        xa = plane_affected + [Instance((9.0, 9.0, "c"))]
        with pytest.raises(DataError):
            glance(xa, plane_model, plane_train, GlanceConfig(s=1, k=2))

    def test_s_above_k(self):
        """The configuration refuses s > k."""
        with pytest.raises(ValueError):
            GlanceConfig(s=5, k=3)

    def test_s_above_k_at_call_time(self, plane_affected, plane_model, plane_train):
        """A config copied past validation is still checked."""
        cfg = GlanceConfig(s=2, k=2).model_copy(update={"s": 4})
        with pytest.raises(ConfigError):
            glance(plane_affected, plane_model, plane_train, cfg)

    def test_no_candidates_anywhere(self, plane_affected, plane_model, plane_train):
        """Clusters without candidates contribute nothing and say so."""
        sol = glance(plane_affected, plane_model, plane_train, GlanceConfig(s=1, k=3),
                     candidate_source=lambda cid, c: [])
        assert sol.actions == []
        assert sol.warnings


class TestComplexity:
    """Classifier calls stay within twice the accounted budget."""

    @pytest.mark.parametrize("k,n", [(10, 200), (50, 200), (10, 1000), (50, 1000)])
    def test_call_envelope(self, k, n, plane_model, plane_train):
        """k*n*m selection + k*(1 + 50m) generation + importance over the training rows."""
        xa = plane_rows(np.random.default_rng(k * n), n, max_sum=9.0)
        m = 5
        counted = CountingClassifier(plane_model)
        cfg = GlanceConfig(s=4, k=k, m=m, seed=3, generator=GeneratorConfig(kind="random_sampling"))
        glance(xa, counted, plane_train, cfg)
        d = len(plane_train.schema)
        budget = k * n * m + k * (1 + 50 * m) + len(plane_train) * (d + 2)
        assert 0 < counted.calls <= 2 * budget


class TestDatasetScoring:
    """Fixture sanity."""

    def test_affected_really_affected(self, plane_affected, plane_model):
        """All synthetic affected rows are predicted -1."""
        ds = Dataset(schema=plane_model.schema, rows=tuple(plane_affected))
        assert (plane_model.predict_rows(ds.batch) == -1).all()
