"""Affine grid mapping, supercover line rasterization and zonal cell counts."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .geometry import FeatureLayer, LineString, Point2, Polygon, bbox, contains_points

NODATA = -9999.0


@dataclass(frozen=True)
class AffineTransform:
    """North-up grid transform: ``x = c*col + l``, ``y = -c*row + t``."""

    c: float
    l: float
    t: float

    def __post_init__(self):
        if not (math.isfinite(self.c) and self.c > 0):
            raise ValueError(f"cell size must be positive and finite, got {self.c}")
        if not (math.isfinite(self.l) and math.isfinite(self.t)):
            raise ValueError("transform origin must be finite")

    @property
    def matrix(self) -> np.ndarray:
        return np.array([[self.c, 0.0, self.l], [0.0, -self.c, self.t], [0.0, 0.0, 1.0]])

    def col_of(self, x):
        return np.floor((np.asarray(x, dtype=float) - self.l) / self.c).astype(np.int64)

    def row_of(self, y):
        return np.floor((self.t - np.asarray(y, dtype=float)) / self.c).astype(np.int64)


def cell_to_world(tf: AffineTransform, col: int, row: int) -> Point2:
    """Center of cell ``(col, row)``."""
    return Point2(tf.c * (col + 0.5) + tf.l, -tf.c * (row + 0.5) + tf.t)


def world_to_cell(tf: AffineTransform, pt) -> tuple[int, int]:
    x, y = pt
    return int(tf.col_of(x)), int(tf.row_of(y))


@dataclass(frozen=True, eq=False)
class Grid:
    transform: AffineTransform
    cells: np.ndarray
    nodata: float = NODATA

    def __post_init__(self):
        cells = np.array(self.cells)
        if cells.ndim != 2 or cells.shape[0] < 1 or cells.shape[1] < 1:
            raise ValueError("grid cells must be a non-empty 2-D array")
        cells.setflags(write=False)
        object.__setattr__(self, "cells", cells)

    @property
    def n_rows(self) -> int:
        return self.cells.shape[0]

    @property
    def n_cols(self) -> int:
        return self.cells.shape[1]

    def cell_centers(self, mask=None) -> np.ndarray:
        """World coordinates of cell centers (of ``mask`` cells, row-major)."""
        if mask is None:
            rows, cols = np.indices(self.cells.shape).reshape(2, -1)
        else:
            rows, cols = np.nonzero(mask)
        tf = self.transform
        return np.column_stack([tf.c * (cols + 0.5) + tf.l, -tf.c * (rows + 0.5) + tf.t])

    def set_cell_centers(self) -> np.ndarray:
        return self.cell_centers(self.cells.astype(bool) & (self.cells != self.nodata))


def _segment_cells(x0, y0, x1, y1, tf, n_rows, n_cols, out):
    """Mark every cell whose closed square meets the closed segment."""
    c, l, t = tf.c, tf.l, tf.t
    xa, xb = min(x0, x1), max(x0, x1)
    col_lo = max(math.ceil((xa - l) / c) - 1, 0)
    col_hi = min(math.floor((xb - l) / c), n_cols - 1)

    def y_at(x):
        if x == x0:
            return y0
        if x == x1:
            return y1
        return y0 + (x - x0) * (y1 - y0) / (x1 - x0)

    for col in range(col_lo, col_hi + 1):
        if x0 == x1:
            ya, yb = y0, y1
        else:
            lo = max(xa, l + col * c)
            hi = min(xb, l + (col + 1) * c)
            if lo > hi:
                continue
            ya, yb = y_at(lo), y_at(hi)
        ylo, yhi = min(ya, yb), max(ya, yb)
        row_lo = max(math.ceil((t - yhi) / c) - 1, 0)
        row_hi = min(math.floor((t - ylo) / c), n_rows - 1)
        if row_lo <= row_hi:
            out[row_lo:row_hi + 1, col] = 1


def rasterize_lines(lines: FeatureLayer, cell_size: float) -> Grid:
    """Burn a line layer onto a binary grid using the supercover rule.

    The grid's top-left corner is the layer's (min x, max y); the extent is
    padded to whole cells so the maximum x / minimum y vertices fall inside.
    """
    cell_size = float(cell_size)
    if not (math.isfinite(cell_size) and cell_size > 0):
        raise ValueError(f"cell_size must be positive, got {cell_size}")
    if len(lines) == 0:
        raise ValueError("empty extent")
    if lines.kind != "line":
        raise TypeError(f"rasterize_lines needs a line layer, got {lines.kind}")
    min_x, min_y, max_x, max_y = bbox(lines)
    tf = AffineTransform(cell_size, min_x, max_y)
    n_cols = int(math.floor((max_x - min_x) / cell_size)) + 1
    n_rows = int(math.floor((max_y - min_y) / cell_size)) + 1
    cells = np.zeros((n_rows, n_cols), dtype=np.uint8)
    for geom in lines.geometries:
        v = geom.vertices
        for (x0, y0), (x1, y1) in zip(v[:-1], v[1:]):
            _segment_cells(float(x0), float(y0), float(x1), float(y1), tf, n_rows, n_cols, cells)
    return Grid(tf, cells)


def zonal_cell_count(grid: Grid, zone: Polygon) -> int:
    """Number of set cells whose centers lie inside ``zone`` (boundary inclusive)."""
    zx0, zy0, zx1, zy1 = zone.bounds
    tf = grid.transform
    # restrict to the window of cells whose centers can fall in the zone bbox
    c0 = max(int(math.floor((zx0 - tf.l) / tf.c - 0.5)), 0)
    c1 = min(int(math.ceil((zx1 - tf.l) / tf.c - 0.5)), grid.n_cols - 1)
    r0 = max(int(math.floor((tf.t - zy1) / tf.c - 0.5)), 0)
    r1 = min(int(math.ceil((tf.t - zy0) / tf.c - 0.5)), grid.n_rows - 1)
    if c0 > c1 or r0 > r1:
        return 0
    window = grid.cells[r0:r1 + 1, c0:c1 + 1]
    rows, cols = np.nonzero((window != 0) & (window != grid.nodata))
    if rows.size == 0:
        return 0
    rows = rows + r0
    cols = cols + c0
    centers = np.column_stack([tf.c * (cols + 0.5) + tf.l, -tf.c * (rows + 0.5) + tf.t])
    return int(np.count_nonzero(contains_points(zone, centers)))


def line_layer(*polylines) -> FeatureLayer:
    """Convenience constructor for a line layer from vertex sequences."""
    return FeatureLayer(tuple(LineString(p) for p in polylines))
