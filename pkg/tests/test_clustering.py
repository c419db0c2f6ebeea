"""
Tests for glance/clustering.py.
"""

import numpy as np
import pytest

from errors import DataError
from glance.clustering import (
    ClusterState,
    action_means,
    centroid,
    d1,
    d2,
    empty_action_penalty,
    encode_centroid,
    fit_kmeans,
    kmeans,
    merge,
    merge_distance,
)
from services.actions import Action, CategoricalSet, NumericDelta
from services.tabular import Instance


def _cluster(cid, members, schema, actions=()):
    return ClusterState(cid, tuple(members), tuple(range(len(members))), centroid(members, schema),
                        tuple(actions))


class TestKMeans:
    """Seeded L1 k-means."""

    def test_objective_never_increases(self):
        """The within-cluster L1 objective is non-increasing across iterations."""
        rng = np.random.default_rng(0)
        for seed in range(20):
            z = rng.normal(size=(80, 4))
            hist = fit_kmeans(z, 6, seed).objective_history
            assert all(b <= a + 1e-9 for a, b in zip(hist, hist[1:]))

    def test_partition(self, plane_affected, plane_schema):
        """Clusters are nonempty and partition the points, members in input order."""
        clusters = kmeans(plane_affected, 8, 13, plane_schema)
        assert len(clusters) == 8
        seen = sorted(i for c in clusters for i in c.member_indices)
        assert seen == list(range(len(plane_affected)))
        for c in clusters:
            assert list(c.member_indices) == sorted(c.member_indices)
        assert [c.id for c in clusters] == list(range(8))

    def test_k_clamped_to_distinct_points(self, line_schema):
        """Duplicated rows cannot seed separate clusters."""
        pts = [Instance((1.0, "A"))] * 3 + [Instance((5.0, "B"))] * 2
        clusters = kmeans(pts, 10, 1, line_schema)
        assert len(clusters) == 2
        assert sorted(len(c) for c in clusters) == [2, 3]

    def test_deterministic(self, plane_affected, plane_schema):
        """Same seed, same partition."""
        a = kmeans(plane_affected, 5, 4, plane_schema)
        b = kmeans(plane_affected, 5, 4, plane_schema)
        assert [c.member_indices for c in a] == [c.member_indices for c in b]

    def test_bad_arguments(self, line_schema):
        """Empty input or k < 1 is rejected."""
        with pytest.raises(DataError):
            kmeans([], 2, 0, line_schema)
        with pytest.raises(DataError):
            kmeans([Instance((1.0, "A"))], 0, 0, line_schema)


class TestCentroid:
    """Numeric mean, categorical mode."""

    def test_mean_and_mode(self, line_schema):
        """Ties in the mode go to the earlier category."""
        members = [Instance((2.0, "B")), Instance((4.0, "A")), Instance((6.0, "B"))]
        assert centroid(members, line_schema).values == (4.0, "B")
        assert centroid(members[:2], line_schema).values == (3.0, "A")


class TestDistances:
    """d1, d2 and merging."""

    def test_d1_is_encoded_l1(self, line_schema):
        """Distance between decoded centroids in the encoded space."""
        a = _cluster(0, [Instance((2.0, "A"))], line_schema)
        b = _cluster(1, [Instance((5.0, "B"))], line_schema)
        assert d1(a, b, line_schema) == 3.0 + 2.0

    def test_d2(self, line_schema):
        """Mean action vectors; penalty when a side has no candidates; zero to itself."""
        x = [Instance((2.0, "A"))]
        up = Action.from_mapping({"f": NumericDelta(2.0)})
        flip = Action.from_mapping({"g": CategoricalSet("B")})
        a = _cluster(0, x, line_schema, [up])
        b = _cluster(1, x, line_schema, [up, flip])
        empty = _cluster(2, x, line_schema)
        assert d2(a, b, line_schema) == pytest.approx(1.0 + 0.5)
        assert d2(a, empty, line_schema, empty_penalty=7.0) == 7.0
        assert d2(a, a, line_schema) == 0.0

    def test_empty_penalty(self, line_schema):
        """Twice the largest d1 + d2 among clusters that do have candidates."""
        up = Action.from_mapping({"f": NumericDelta(2.0)})
        a = _cluster(0, [Instance((2.0, "A"))], line_schema, [up])
        b = _cluster(1, [Instance((5.0, "A"))], line_schema, [up])
        c = _cluster(2, [Instance((9.0, "A"))], line_schema)
        assert empty_action_penalty([a, b, c], line_schema) == 2.0 * 3.0
        assert empty_action_penalty([a, c], line_schema) == 1.0

    def test_d2_defaults_to_the_empty_penalty(self, line_schema):
        """Without an explicit penalty, an empty side costs twice the widest nonempty pair."""
        a = _cluster(0, [Instance((2.0, "A"))], line_schema, [Action.from_mapping({"f": NumericDelta(5.0)})])
        b = _cluster(1, [Instance((8.0, "A"))], line_schema, [Action.from_mapping({"f": NumericDelta(-5.0)})])
        e = _cluster(2, [Instance((5.0, "A"))], line_schema)
        penalty = empty_action_penalty([a, b, e], line_schema)
        assert penalty == 2.0 * (6.0 + 10.0)
        assert d2(a, e, line_schema, clusters=[a, b, e]) == penalty
        assert d2(e, b, line_schema, clusters=[a, b, e]) == penalty
        assert d2(a, e, line_schema) == 1.0

    def test_merge_distance_matches_d1_plus_d2(self, line_schema):
        """The engine's cached-vector distance agrees with the public operations."""
        a = _cluster(0, [Instance((2.0, "A"))], line_schema, [Action.from_mapping({"f": NumericDelta(5.0)})])
        b = _cluster(1, [Instance((8.0, "B"))], line_schema, [Action.from_mapping({"g": CategoricalSet("A")})])
        e = _cluster(2, [Instance((5.0, "A"))], line_schema)
        clusters = [a, b, e]
        penalty = empty_action_penalty(clusters, line_schema)
        for x, y in [(a, b), (a, e), (b, e)]:
            cached = merge_distance(encode_centroid(x, line_schema), action_means(x, line_schema),
                                    encode_centroid(y, line_schema), action_means(y, line_schema), penalty)
            expected = d1(x, y, line_schema) + d2(x, y, line_schema, clusters=clusters)
            assert cached == pytest.approx(expected)

    def test_merge(self, line_schema):
        """Union of members and candidates; centroid recomputed; lower id kept."""
        up = Action.from_mapping({"f": NumericDelta(2.0)})
        flip = Action.from_mapping({"g": CategoricalSet("B")})
        a = _cluster(3, [Instance((2.0, "A"))], line_schema, [up])
        b = _cluster(1, [Instance((4.0, "A"))], line_schema, [up, flip])
        m = merge(a, b, line_schema)
        assert m.id == 1
        assert len(m) == 2
        assert m.centroid.values == (3.0, "A")
        assert m.candidate_actions == (up, flip)
        with pytest.raises(DataError):
            merge(a, a, line_schema)
