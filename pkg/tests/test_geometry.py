import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from landsuit.geometry import (
    FeatureLayer,
    LineString,
    Point2,
    Polygon,
    bbox,
    centroid,
    contains,
    contains_points,
    segments_intersect,
)
from oracles import ray_cast

UNIT = [(0, 0), (1, 0), (1, 1), (0, 1)]
HOLE = [(0.25, 0.25), (0.75, 0.25), (0.75, 0.75), (0.25, 0.75)]


def random_convex(rng, n=8, cx=0.0, cy=0.0):
    ang = np.sort(rng.uniform(0, 2 * np.pi, n))
    r = rng.uniform(1, 5)
    pts = np.column_stack([cx + r * np.cos(ang), cy + r * np.sin(ang)])
    # drop near-duplicate angles that would leave consecutive equal vertices
    keep = np.concatenate([[True], np.diff(ang) > 1e-6])
    return Polygon(pts[keep])


def random_star(rng, n=12):
    # jittered even angles keep the ring star-shaped about the origin, hence simple
    ang = (np.arange(n) + rng.uniform(0, 0.9, n)) * (2 * np.pi / n)
    rad = rng.uniform(0.5, 3.0, n)
    return Polygon(np.column_stack([rad * np.cos(ang), rad * np.sin(ang)]))


class TestPrimitives:
    def test_point_rejects_nonfinite(self):
        with pytest.raises(ValueError):
            Point2(float("nan"), 0)
        with pytest.raises(ValueError):
            Point2(0, math.inf)

    def test_linestring_validation(self):
        with pytest.raises(ValueError):
            LineString([(0, 0)])
        with pytest.raises(ValueError):
            LineString([(0, 0), (0, 0), (1, 1)])
        ls = LineString([(0, 0), (3, 4)])
        assert ls.length == 5.0
        with pytest.raises(ValueError):
            ls.vertices[0, 0] = 9.0

    def test_polygon_auto_closes_and_orients(self):
        p = Polygon(UNIT[::-1])
        assert p.exterior.shape == (5, 2)
        assert np.array_equal(p.exterior[0], p.exterior[-1])
        assert p.area == pytest.approx(1.0)
        h = Polygon(UNIT, [HOLE])
        assert h.area == pytest.approx(0.75)

    def test_polygon_rejects_bowtie(self):
        with pytest.raises(ValueError, match="self-intersecting"):
            Polygon([(0, 0), (1, 1), (1, 0), (0, 1)])

    def test_segments_intersect_touching(self):
        assert segments_intersect((0, 0), (1, 0), (1, 0), (2, 5))
        assert not segments_intersect((0, 0), (1, 0), (0, 1), (1, 1))


class TestCentroid:
    def test_unit_square(self):
        assert tuple(centroid(Polygon(UNIT))) == pytest.approx((0.5, 0.5))

    def test_triangle(self):
        c = centroid(Polygon([(0, 0), (1, 0), (0, 1)]))
        assert tuple(c) == pytest.approx((1 / 3, 1 / 3), abs=1e-15)

    def test_symmetric_hole(self):
        assert tuple(centroid(Polygon(UNIT, [HOLE]))) == pytest.approx((0.5, 0.5))

    def test_offset_hole_moves_centroid_away(self):
        p = Polygon([(0, 0), (4, 0), (4, 4), (0, 4)], [[(2.5, 1), (3.5, 1), (3.5, 3), (2.5, 3)]])
        # area 16 at (2,2) minus area 2 at (3,2)
        assert tuple(centroid(p)) == pytest.approx(((16 * 2 - 2 * 3) / 14, 2.0))

    def test_line_and_point(self):
        assert tuple(centroid(LineString([(0, 0), (2, 0), (2, 2)]))) == pytest.approx((1.5, 0.5))
        assert centroid(Point2(3, 7)) == Point2(3, 7)

    def test_degenerate_falls_back_with_flag(self):
        # exterior minus an identical hole has zero net area
        p = Polygon(UNIT, [UNIT])
        pt, flag = centroid(p, with_flag=True)
        assert flag
        assert tuple(pt) == pytest.approx((0.5, 0.5))

    def test_convex_centroid_inside(self):
        rng = np.random.default_rng(11)
        for _ in range(500):
            poly = random_convex(rng, n=int(rng.integers(3, 12)),
                                 cx=rng.uniform(-1e3, 1e3), cy=rng.uniform(-1e3, 1e3))
            assert contains(poly, centroid(poly))

    @settings(max_examples=100, deadline=None)
    @given(dx=st.floats(-1e6, 1e6), dy=st.floats(-1e6, 1e6), seed=st.integers(0, 2**32 - 1))
    def test_translation(self, dx, dy, seed):
        rng = np.random.default_rng(seed)
        poly = random_convex(rng)
        moved = Polygon(poly.exterior + (dx, dy))
        c0, c1 = centroid(poly), centroid(moved)
        assert c1.x - dx == pytest.approx(c0.x, abs=1e-9)
        assert c1.y - dy == pytest.approx(c0.y, abs=1e-9)
        b0 = bbox([poly])
        b1 = bbox([moved])
        assert np.allclose(np.subtract(b1, b0), (dx, dy, dx, dy), atol=1e-9, rtol=0)


class TestContains:
    def test_examples(self):
        sq = Polygon(UNIT)
        assert contains(sq, (0.5, 0.5))
        assert not contains(sq, (2, 2))
        assert not contains(Polygon(UNIT, [HOLE]), (0.5, 0.5))

    @pytest.mark.parametrize("pt", [(0, 0), (0.5, 0), (1, 0.3), (1, 1), (0, 0.999)])
    def test_boundary_counts_inside(self, pt):
        assert contains(Polygon(UNIT), pt)

    def test_hole_boundary_counts_inside(self):
        assert contains(Polygon(UNIT, [HOLE]), (0.25, 0.5))

    def test_agrees_with_ray_casting(self):
        rng = np.random.default_rng(5)
        checked = 0
        while checked < 10_000:
            poly = random_star(rng)
            pts = rng.uniform(-3.5, 3.5, (200, 2))
            got = contains_points(poly, pts)
            want = [ray_cast(poly.exterior.tolist(), x, y) for x, y in pts]
            assert np.array_equal(got, want)
            checked += len(pts)

    def test_vectorised_matches_scalar(self):
        rng = np.random.default_rng(1)
        poly = random_star(rng)
        pts = rng.uniform(-3, 3, (300, 2))
        assert np.array_equal(contains_points(poly, pts), [contains(poly, p) for p in pts])


class TestBbox:
    def test_examples(self):
        assert bbox(FeatureLayer.from_xy([(3, 7)])) == (3, 7, 3, 7)
        assert bbox(FeatureLayer.from_xy([(0, 0), (5, 4)])) == (0, 0, 5, 4)
        assert bbox(FeatureLayer((LineString([(1, 1), (9, 2), (4, 8)]),))) == (1, 1, 9, 8)

    def test_empty(self):
        with pytest.raises(ValueError, match="empty extent"):
            bbox(FeatureLayer(()))

    def test_contains_every_vertex(self):
        rng = np.random.default_rng(3)
        polys = tuple(random_star(rng) for _ in range(50))
        x0, y0, x1, y1 = bbox(FeatureLayer(polys))
        allv = np.vstack([p.exterior for p in polys])
        assert np.all((allv[:, 0] >= x0) & (allv[:, 0] <= x1))
        assert np.all((allv[:, 1] >= y0) & (allv[:, 1] <= y1))
        assert allv[:, 0].min() == x0 and allv[:, 1].max() == y1


class TestFeatureLayer:
    def test_uniform_kind(self):
        with pytest.raises(ValueError, match="mixed"):
            FeatureLayer((Point2(0, 0), LineString([(0, 0), (1, 1)])))

    def test_row_count(self):
        with pytest.raises(ValueError, match="rows"):
            FeatureLayer.from_xy([(0, 0), (1, 1)], {"a": [1]})

    def test_column_types(self):
        layer = FeatureLayer.from_xy([(0, 0), (1, 1)], {"i": [1, 2], "f": [1.5, None],
                                                        "s": ["a", None]})
        assert layer["i"].dtype == np.int64
        assert np.isnan(layer["f"][1])
        assert layer["s"][1] is None
        assert layer.crs_tag == ""

    def test_with_column_collision(self):
        layer = FeatureLayer.from_xy([(0, 0)], {"a": [1]})
        with pytest.raises(ValueError, match="already exists"):
            layer.with_column("a", [2])
        assert layer.with_column("a", [2], overwrite=True)["a"][0] == 2
        assert layer["a"][0] == 1

    def test_immutable(self):
        layer = FeatureLayer.from_xy([(0, 0)], {"a": [1.0]})
        with pytest.raises(ValueError):
            layer["a"][0] = 3.0

    def test_representative_points(self):
        layer = FeatureLayer((Polygon(UNIT),), {"px": [7.0], "py": [8.0]})
        assert layer.representative_points().tolist() == [[0.5, 0.5]]
        assert layer.representative_points(("px", "py")).tolist() == [[7.0, 8.0]]
