"""Planar geometry primitives, predicates and the feature-layer container."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Mapping, Sequence, Union

import numpy as np

BOUNDARY_EPS = 1e-12


def _as_coords(vertices, what: str) -> np.ndarray:
    arr = np.asarray(
        [(p.x, p.y) if isinstance(p, Point2) else p for p in vertices], dtype=float
    )
    if arr.ndim != 2 or arr.shape[1] != 2:
        raise ValueError(f"{what}: expected a sequence of (x, y) pairs")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{what}: non-finite coordinate")
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class Point2:
    x: float
    y: float

    def __post_init__(self):
        x, y = float(self.x), float(self.y)
        if not (math.isfinite(x) and math.isfinite(y)):
            raise ValueError(f"non-finite point ({self.x}, {self.y})")
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "y", y)

    @property
    def coords(self) -> np.ndarray:
        return np.array([[self.x, self.y]])

    def __iter__(self):
        yield self.x
        yield self.y


@dataclass(frozen=True, eq=False)
class LineString:
    """Polyline with at least two vertices and no repeated consecutive vertex."""

    vertices: np.ndarray

    def __post_init__(self):
        coords = _as_coords(self.vertices, "LineString")
        if len(coords) < 2:
            raise ValueError("LineString needs at least 2 vertices")
        if np.any(np.all(coords[1:] == coords[:-1], axis=1)):
            raise ValueError("LineString has identical consecutive vertices")
        object.__setattr__(self, "vertices", coords)

    @property
    def coords(self) -> np.ndarray:
        return self.vertices

    @property
    def length(self) -> float:
        return float(np.hypot(*np.diff(self.vertices, axis=0).T).sum())

    def __eq__(self, other):
        return isinstance(other, LineString) and np.array_equal(
            self.vertices, other.vertices
        )

    __hash__ = None


def signed_area(ring: np.ndarray) -> float:
    """Shoelace area of a closed ring; positive for counter-clockwise order."""
    x, y = ring[:-1, 0], ring[:-1, 1]
    xn, yn = ring[1:, 0], ring[1:, 1]
    return 0.5 * float(np.sum(x * yn - xn * y))


def _close_ring(ring: np.ndarray, what: str) -> np.ndarray:
    if not np.array_equal(ring[0], ring[-1]):
        ring = np.vstack([ring, ring[:1]])
    if len(ring) < 4:
        raise ValueError(f"{what}: ring needs at least 4 vertices (closed)")
    return ring


def _orient(o, a, b):
    return (a[..., 0] - o[..., 0]) * (b[..., 1] - o[..., 1]) - (
        a[..., 1] - o[..., 1]
    ) * (b[..., 0] - o[..., 0])


def _on_segment(p, s, e):
    """p within the bounding box of segment s-e (used once p is collinear)."""
    return (
        (np.minimum(s[..., 0], e[..., 0]) <= p[..., 0])
        & (p[..., 0] <= np.maximum(s[..., 0], e[..., 0]))
        & (np.minimum(s[..., 1], e[..., 1]) <= p[..., 1])
        & (p[..., 1] <= np.maximum(s[..., 1], e[..., 1]))
    )


def segments_intersect(p1, p2, q1, q2) -> np.ndarray:
    """Closed segment intersection test, broadcasting over leading axes."""
    p1, p2, q1, q2 = np.broadcast_arrays(*map(np.asarray, (p1, p2, q1, q2)))
    d1 = _orient(q1, q2, p1)
    d2 = _orient(q1, q2, p2)
    d3 = _orient(p1, p2, q1)
    d4 = _orient(p1, p2, q2)
    proper = (np.sign(d1) * np.sign(d2) < 0) & (np.sign(d3) * np.sign(d4) < 0)
    touch = (
        ((d1 == 0) & _on_segment(p1, q1, q2))
        | ((d2 == 0) & _on_segment(p2, q1, q2))
        | ((d3 == 0) & _on_segment(q1, p1, p2))
        | ((d4 == 0) & _on_segment(q2, p1, p2))
    )
    return proper | touch


def _ring_self_intersects(ring: np.ndarray) -> bool:
    """True if any two non-adjacent edges of a closed ring touch or cross."""
    a, b = ring[:-1], ring[1:]
    m = len(a)
    for i in range(m - 2):
        # edge 0 and edge m-1 share the closing vertex
        js = np.arange(i + 2, m - 1 if i == 0 else m)
        if js.size and np.any(segments_intersect(a[i], b[i], a[js], b[js])):
            return True
    return False


@dataclass(frozen=True, eq=False)
class Polygon:
    """Polygon with one exterior ring and optional holes.

    Rings are closed on construction if the caller left them open, the
    exterior is re-ordered counter-clockwise and holes clockwise.
    """

    exterior: np.ndarray
    holes: tuple = ()

    def __post_init__(self):
        ext = _close_ring(_as_coords(self.exterior, "Polygon exterior"), "exterior")
        if _ring_self_intersects(ext):
            raise ValueError("Polygon exterior ring is self-intersecting")
        if signed_area(ext) < 0:
            ext = ext[::-1]
        if signed_area(ext) <= 0:
            raise ValueError("Polygon exterior has zero area")
        holes = []
        for h in self.holes:
            ring = _close_ring(_as_coords(h, "Polygon hole"), "hole")
            if signed_area(ring) > 0:
                ring = ring[::-1]
            holes.append(np.ascontiguousarray(ring))
        ext = np.ascontiguousarray(ext)
        for r in (ext, *holes):
            r.setflags(write=False)
        object.__setattr__(self, "exterior", ext)
        object.__setattr__(self, "holes", tuple(holes))

    @property
    def rings(self) -> tuple:
        return (self.exterior, *self.holes)

    @property
    def coords(self) -> np.ndarray:
        return np.vstack(self.rings)

    @property
    def area(self) -> float:
        return signed_area(self.exterior) + sum(signed_area(h) for h in self.holes)

    @cached_property
    def bounds(self) -> tuple[float, float, float, float]:
        e = self.exterior
        return (e[:, 0].min(), e[:, 1].min(), e[:, 0].max(), e[:, 1].max())

    def __eq__(self, other):
        return (
            isinstance(other, Polygon)
            and np.array_equal(self.exterior, other.exterior)
            and len(self.holes) == len(other.holes)
            and all(np.array_equal(a, b) for a, b in zip(self.holes, other.holes))
        )

    __hash__ = None


Geometry = Union[Point2, LineString, Polygon]


def geometry_kind(geom) -> str:
    if isinstance(geom, Point2):
        return "point"
    if isinstance(geom, LineString):
        return "line"
    if isinstance(geom, Polygon):
        return "polygon"
    raise TypeError(f"unsupported geometry {type(geom).__name__}")


def centroid(geom: Geometry, *, with_flag: bool = False):
    """Representative centroid of a geometry.

    Polygons use the area-weighted centroid with holes subtracted, lines the
    length-weighted midpoint of their segments. When a polygon's net area is
    zero the vertex mean is used instead; ``with_flag=True`` returns
    ``(point, degenerate)`` so callers can see that fallback happened.
    """
    degenerate = False
    if isinstance(geom, Point2):
        pt = geom
    elif isinstance(geom, LineString):
        v = geom.vertices
        seg = np.hypot(*np.diff(v, axis=0).T)
        mids = 0.5 * (v[1:] + v[:-1])
        pt = Point2(*(seg @ mids / seg.sum()))
    elif isinstance(geom, Polygon):
        area_sum = 0.0
        cx = cy = 0.0
        # shift to a local origin to limit cancellation on projected coordinates
        ox, oy = geom.exterior[0]
        for ring in geom.rings:
            r = ring - (ox, oy)
            x0, y0, x1, y1 = r[:-1, 0], r[:-1, 1], r[1:, 0], r[1:, 1]
            cross = x0 * y1 - x1 * y0
            area_sum += cross.sum() / 2.0
            cx += np.sum((x0 + x1) * cross) / 6.0
            cy += np.sum((y0 + y1) * cross) / 6.0
        if abs(area_sum) <= BOUNDARY_EPS:
            degenerate = True
            mean = geom.exterior[:-1].mean(axis=0)
            pt = Point2(*mean)
        else:
            pt = Point2(cx / area_sum + ox, cy / area_sum + oy)
    else:
        raise TypeError(f"unsupported geometry {type(geom).__name__}")
    return (pt, degenerate) if with_flag else pt


def _on_ring_boundary(ring: np.ndarray, px: np.ndarray, py: np.ndarray) -> np.ndarray:
    a, b = ring[:-1], ring[1:]
    out = np.zeros(px.shape, dtype=bool)
    for (ax, ay), (bx, by) in zip(a, b):
        dx, dy = bx - ax, by - ay
        L2 = dx * dx + dy * dy
        t = np.clip(((px - ax) * dx + (py - ay) * dy) / L2, 0.0, 1.0)
        ex = px - (ax + t * dx)
        ey = py - (ay + t * dy)
        out |= ex * ex + ey * ey <= BOUNDARY_EPS * BOUNDARY_EPS
    return out


def _crossings(ring: np.ndarray, px: np.ndarray, py: np.ndarray) -> np.ndarray:
    """Even-odd parity of a horizontal ray cast to +x against one ring."""
    inside = np.zeros(px.shape, dtype=bool)
    xs, ys = ring[:, 0], ring[:, 1]
    for i in range(len(ring) - 1):
        x0, y0, x1, y1 = xs[i], ys[i], xs[i + 1], ys[i + 1]
        straddle = (y0 > py) != (y1 > py)
        if not np.any(straddle):
            continue
        xint = x0 + (py - y0) * (x1 - x0) / (y1 - y0)
        inside ^= straddle & (px < xint)
    return inside


def contains_points(poly: Polygon, xy) -> np.ndarray:
    """Vectorised containment of many points; boundary points count as inside."""
    xy = np.asarray(xy, dtype=float).reshape(-1, 2)
    px, py = xy[:, 0], xy[:, 1]
    parity = np.zeros(len(xy), dtype=bool)
    boundary = np.zeros(len(xy), dtype=bool)
    for ring in poly.rings:
        parity ^= _crossings(ring, px, py)
        boundary |= _on_ring_boundary(ring, px, py)
    return parity | boundary


def contains(poly: Polygon, pt) -> bool:
    if not isinstance(pt, Point2):
        pt = Point2(*pt)
    return bool(contains_points(poly, [[pt.x, pt.y]])[0])


@dataclass(frozen=True, eq=False)
class FeatureLayer:
    """Ordered, homogeneous geometries plus a columnar attribute table.

    Attribute columns are numpy arrays, one row per geometry. Missing values
    are NaN in float columns and ``None`` in object columns. Layers are
    immutable; :meth:`with_column` returns a new layer.
    """

    geometries: tuple
    attributes: Mapping[str, np.ndarray] = field(default_factory=dict)
    crs_tag: str = ""

    def __post_init__(self):
        geoms = tuple(self.geometries)
        kinds = {geometry_kind(g) for g in geoms}
        if len(kinds) > 1:
            raise ValueError(f"mixed geometry kinds in layer: {sorted(kinds)}")
        cols = {}
        for name, values in dict(self.attributes).items():
            arr = _column_array(values)
            if len(arr) != len(geoms):
                raise ValueError(
                    f"column {name!r} has {len(arr)} rows, layer has {len(geoms)}"
                )
            cols[str(name)] = arr
        object.__setattr__(self, "geometries", geoms)
        object.__setattr__(self, "attributes", cols)

    @classmethod
    def from_xy(cls, xy, attributes=None, crs_tag: str = "") -> "FeatureLayer":
        xy = np.asarray(xy, dtype=float).reshape(-1, 2)
        return cls(tuple(Point2(x, y) for x, y in xy), attributes or {}, crs_tag)

    def __len__(self) -> int:
        return len(self.geometries)

    @property
    def kind(self) -> str | None:
        return geometry_kind(self.geometries[0]) if self.geometries else None

    @property
    def columns(self) -> list[str]:
        return list(self.attributes)

    def __getitem__(self, column: str) -> np.ndarray:
        try:
            return self.attributes[column]
        except KeyError:
            raise KeyError(f"no attribute column {column!r}") from None

    def with_column(self, name: str, values, *, overwrite: bool = False) -> "FeatureLayer":
        if name in self.attributes and not overwrite:
            raise ValueError(f"column {name!r} already exists (pass overwrite=True)")
        attrs = dict(self.attributes)
        attrs[name] = values
        return FeatureLayer(self.geometries, attrs, self.crs_tag)

    @cached_property
    def xy(self) -> np.ndarray:
        """Point coordinates as an (n, 2) array (point layers only)."""
        if self.kind not in (None, "point"):
            raise TypeError(f"xy is only defined for point layers, not {self.kind}")
        arr = np.array([(g.x, g.y) for g in self.geometries], dtype=float).reshape(-1, 2)
        arr.setflags(write=False)
        return arr

    def representative_points(self, xy_columns: Sequence[str] | None = None) -> np.ndarray:
        """One point per feature: the centroid, or the given (x, y) columns."""
        if xy_columns is not None:
            xc, yc = xy_columns
            arr = np.column_stack(
                [np.asarray(self[xc], dtype=float), np.asarray(self[yc], dtype=float)]
            )
            if not np.all(np.isfinite(arr)):
                raise ValueError("representative point columns contain non-finite values")
            return arr
        if self.kind == "point":
            return np.array(self.xy)
        return np.array(
            [tuple(centroid(g)) for g in self.geometries], dtype=float
        ).reshape(-1, 2)


def _column_array(values) -> np.ndarray:
    if isinstance(values, np.ndarray):
        arr = values.copy()
    else:
        values = list(values)
        if all(isinstance(v, (int, np.integer)) and not isinstance(v, bool) for v in values):
            arr = np.array(values, dtype=np.int64)
        elif all(
            v is None or (isinstance(v, (int, float, np.number)) and not isinstance(v, bool))
            for v in values
        ) and any(v is not None for v in values):
            arr = np.array([np.nan if v is None else v for v in values], dtype=float)
        else:
            arr = np.empty(len(values), dtype=object)
            arr[:] = values
    arr.setflags(write=False)
    return arr


def bbox(layer: FeatureLayer | Sequence[Geometry]) -> tuple[float, float, float, float]:
    geoms = layer.geometries if isinstance(layer, FeatureLayer) else tuple(layer)
    if not geoms:
        raise ValueError("empty extent")
    pts = np.vstack([g.coords for g in geoms])
    return (
        float(pts[:, 0].min()),
        float(pts[:, 1].min()),
        float(pts[:, 0].max()),
        float(pts[:, 1].max()),
    )
