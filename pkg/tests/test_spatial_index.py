import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from landsuit.geometry import Point2
from landsuit.spatial_index import KdTree, Metric, build, nearest
from oracles import brute_nn


def structural_audit(tree):
    """Walk the tree, checking split invariants; return the leaf index lists."""
    pts = tree.points
    seen = []

    def walk(node, idx):
        d = tree.split_dim[node]
        if d == -1:
            assert len(idx) <= tree.leaf_size
            seen.append(np.sort(idx))
            return
        left = tree.perm[tree.start[tree.left[node]]:tree.end[tree.left[node]]]
        right = tree.perm[tree.start[tree.right[node]]:tree.end[tree.right[node]]]
        assert len(left) and len(right), "empty child"
        assert np.array_equal(np.sort(np.concatenate([left, right])), np.sort(idx))
        v = tree.split_val[node]
        assert np.all(pts[left, d] <= v)
        assert np.all(pts[right, d] >= v)
        walk(tree.left[node], left)
        walk(tree.right[node], right)

    walk(0, tree.perm[tree.start[0]:tree.end[0]])
    return seen


class TestBuild:
    def test_single_point(self):
        t = build([Point2(1, 2)], leaf_size=4)
        assert t.n_nodes == 1 and t.n_leaves == 1 and t.depth == 0

    def test_empty(self):
        with pytest.raises(ValueError, match="cannot index empty set"):
            KdTree(np.empty((0, 2)))

    def test_sliding_midpoint_hand_trace(self):
        t = KdTree([(0, 0), (1, 0), (2, 0), (100, 0)], leaf_size=1)
        # midpoint 50 leaves the left side holding {0,1,2}; no slide needed on this side
        assert t.split_dim[0] == 0
        left = sorted(t.perm[t.start[t.left[0]]:t.end[t.left[0]]])
        right = sorted(t.perm[t.start[t.right[0]]:t.end[t.right[0]]])
        assert left == [0, 1, 2] and right == [3]
        structural_audit(t)

    def test_slide_when_one_side_empty(self):
        # midpoint of the x-extent is 50 but every point but one sits at 100
        pts = [(0, 0)] + [(100, y) for y in range(5)]
        t = KdTree(pts, leaf_size=1)
        structural_audit(t)
        left = t.perm[t.start[t.left[0]]:t.end[t.left[0]]]
        assert len(left) >= 1

    def test_uniform_10k_audit(self):
        pts = np.random.default_rng(0).random((10_000, 2))
        t = KdTree(pts)
        leaves = structural_audit(t)
        allidx = np.concatenate(leaves)
        assert len(allidx) == 10_000 and len(np.unique(allidx)) == 10_000
        assert t.depth <= 60
        assert t.n_nodes == 2 * t.n_leaves - 1

    def test_clustered_on_a_line(self):
        pts = np.column_stack([np.full(5000, 3.0), np.random.default_rng(1).random(5000)])
        t = KdTree(pts, leaf_size=8)
        for leaf in structural_audit(t):
            assert len(leaf) <= 8

    def test_all_duplicates(self):
        t = KdTree(np.ones((100, 2)), leaf_size=4)
        leaves = structural_audit(t)
        assert max(len(l) for l in leaves) <= 4
        assert t.nearest((1, 1)) == (0, 0.0)

    def test_deterministic(self):
        pts = np.random.default_rng(3).random((3000, 2))
        a, b = KdTree(pts), KdTree(pts.copy())
        for name in ("perm", "split_dim", "split_val", "left", "right", "start", "end"):
            assert np.array_equal(getattr(a, name), getattr(b, name))

    def test_caller_array_untouched(self):
        pts = np.random.default_rng(3).random((10, 2))
        KdTree(pts)
        pts[0, 0] = 5.0  # must still be writable

    def test_invalid_leaf_size(self):
        with pytest.raises(ValueError):
            KdTree([(0, 0)], leaf_size=0)


class TestNearest:
    def test_345(self):
        t = KdTree([(3, 4), (6, 8)])
        assert nearest(t, (0, 0), Metric.EUCLIDEAN) == (0, 5.0)
        assert nearest(t, (0, 0), "manhattan") == (0, 7.0)

    def test_nonfinite_query(self):
        with pytest.raises(ValueError):
            KdTree([(0, 0)]).nearest((np.nan, 0))

    def test_unknown_metric(self):
        with pytest.raises(ValueError, match="unknown metric"):
            KdTree([(0, 0)]).nearest((0, 0), "chebyshev")

    def test_tie_smallest_index(self):
        pts = [(1, 0), (-1, 0), (0, 1), (0, -1), (1, 0)]
        t = KdTree(pts, leaf_size=1)
        assert t.nearest((0, 0)) == (0, 1.0)
        assert t.nearest((0, 0), "manhattan") == (0, 1.0)

    @pytest.mark.parametrize("metric", ["euclidean", "manhattan"])
    @pytest.mark.parametrize("leaf_size", [1, 4, 16])
    def test_oracle_random(self, metric, leaf_size):
        rng = np.random.default_rng(leaf_size)
        pts = rng.random((1000, 2))
        q = rng.random((1000, 2)) * 1.2 - 0.1
        idx, dist = KdTree(pts, leaf_size).query(q, metric)
        bi, bd = brute_nn(q, pts, metric)
        assert np.array_equal(idx, bi)
        np.testing.assert_allclose(dist, bd, rtol=0, atol=1e-9)

    @pytest.mark.parametrize("metric", ["euclidean", "manhattan"])
    def test_oracle_integer_grid_ties(self, metric):
        # integer lattice data makes exact distance ties common
        rng = np.random.default_rng(9)
        pts = rng.integers(0, 20, (800, 2)).astype(float)
        q = rng.integers(0, 20, (800, 2)) + rng.choice([0.0, 0.5], (800, 2))
        idx, dist = KdTree(pts, 3).query(q, metric)
        bi, bd = brute_nn(q, pts, metric)
        assert np.array_equal(idx, bi)
        np.testing.assert_allclose(dist, bd, rtol=0, atol=1e-9)

    @settings(max_examples=60, deadline=None)
    @given(
        pts=arrays(np.float64, st.tuples(st.integers(1, 60), st.just(2)),
                   elements=st.floats(-1e3, 1e3, allow_subnormal=False)),
        q=arrays(np.float64, (5, 2), elements=st.floats(-1e3, 1e3, allow_subnormal=False)),
        leaf=st.integers(1, 8),
        metric=st.sampled_from(["euclidean", "manhattan"]),
    )
    def test_property_matches_scan(self, pts, q, leaf, metric):
        idx, dist = KdTree(pts, leaf).query(q, metric)
        bi, bd = brute_nn(q, pts, metric)
        np.testing.assert_allclose(dist, bd, rtol=0, atol=1e-9)
        # index must achieve the minimum; with exact equal distances the smallest index wins
        assert np.array_equal(idx, bi)


class TestPruning:
    def test_leaf_visits_bounded(self):
        pts = np.random.default_rng(2).random((5000, 2))
        t = KdTree(pts)
        _, _, visits, leaf_visits = t.query(np.random.default_rng(3).random((500, 2)),
                                            return_visits=True)
        assert np.all(leaf_visits <= t.n_leaves)
        assert np.all(visits <= t.n_nodes)

    def test_visits_grow_sublinearly(self):
        rng = np.random.default_rng(4)
        q = rng.random((4000, 2))
        means = []
        for n in (2**14, 2**15):
            t = KdTree(rng.random((n, 2)))
            means.append(t.query(q, return_visits=True)[2].mean())
        assert means[1] / means[0] < 1.5
