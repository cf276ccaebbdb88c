"""Immutable 2-D KD-tree with sliding-midpoint splits.

The tree is stored as flat node arrays. Leaves hold a contiguous slice of a
permutation of the input points, so a leaf scan is a tight loop over
contiguous memory. Queries return the nearest indexed point under the
Euclidean or Manhattan metric, breaking distance ties by smallest original
index.
"""
from __future__ import annotations

from enum import Enum

import numba
import numpy as np

DEFAULT_LEAF_SIZE = 16

_EUCLIDEAN = 0
_MANHATTAN = 1


class Metric(str, Enum):
    EUCLIDEAN = "euclidean"
    MANHATTAN = "manhattan"

    @classmethod
    def parse(cls, value) -> "Metric":
        if isinstance(value, Metric):
            return value
        try:
            return cls(str(value).lower())
        except ValueError:
            raise ValueError(
                f"unknown metric {value!r}; expected 'euclidean' or 'manhattan'"
            ) from None

    @property
    def code(self) -> int:
        return _EUCLIDEAN if self is Metric.EUCLIDEAN else _MANHATTAN


@numba.njit(cache=True)
def _build(pts, leaf_size):
    n = pts.shape[0]
    max_nodes = 2 * n
    perm = np.arange(n)
    split_dim = np.full(max_nodes, -1, dtype=np.int64)
    split_val = np.zeros(max_nodes)
    left = np.full(max_nodes, -1, dtype=np.int64)
    right = np.full(max_nodes, -1, dtype=np.int64)
    start = np.zeros(max_nodes, dtype=np.int64)
    end = np.zeros(max_nodes, dtype=np.int64)
    boxes = np.zeros((max_nodes, 4))
    depth = np.zeros(max_nodes, dtype=np.int64)

    stack = np.empty(max_nodes, dtype=np.int64)
    sp = 0
    n_nodes = 1
    start[0] = 0
    end[0] = n
    stack[sp] = 0
    sp += 1
    while sp > 0:
        sp -= 1
        node = stack[sp]
        s = start[node]
        e = end[node]
        xmin = np.inf
        ymin = np.inf
        xmax = -np.inf
        ymax = -np.inf
        for i in range(s, e):
            p = perm[i]
            x = pts[p, 0]
            y = pts[p, 1]
            if x < xmin:
                xmin = x
            if x > xmax:
                xmax = x
            if y < ymin:
                ymin = y
            if y > ymax:
                ymax = y
        boxes[node, 0] = xmin
        boxes[node, 1] = ymin
        boxes[node, 2] = xmax
        boxes[node, 3] = ymax
        if e - s <= leaf_size:
            continue

        if xmax - xmin >= ymax - ymin:
            dim = 0
            lo = xmin
            hi = xmax
        else:
            dim = 1
            lo = ymin
            hi = ymax

        if hi == lo:
            # every point identical: split by count so leaves stay bounded
            mid = s + (e - s) // 2
            val = lo
        else:
            val = 0.5 * (lo + hi)
            # partition: coord < val to the left
            i = s
            j = e - 1
            while i <= j:
                if pts[perm[i], dim] < val:
                    i += 1
                else:
                    tmp = perm[i]
                    perm[i] = perm[j]
                    perm[j] = tmp
                    j -= 1
            mid = i
            if mid == s:
                # left side empty: slide the plane down to the smallest coordinate
                val = lo
                i = s
                j = e - 1
                while i <= j:
                    if pts[perm[i], dim] <= val:
                        i += 1
                    else:
                        tmp = perm[i]
                        perm[i] = perm[j]
                        perm[j] = tmp
                        j -= 1
                mid = i
            elif mid == e:
                # right side empty: slide the plane up to the largest coordinate
                val = hi
                i = s
                j = e - 1
                while i <= j:
                    if pts[perm[i], dim] < val:
                        i += 1
                    else:
                        tmp = perm[i]
                        perm[i] = perm[j]
                        perm[j] = tmp
                        j -= 1
                mid = i

        split_dim[node] = dim
        split_val[node] = val
        lc = n_nodes
        rc = n_nodes + 1
        n_nodes += 2
        left[node] = lc
        right[node] = rc
        start[lc] = s
        end[lc] = mid
        start[rc] = mid
        end[rc] = e
        depth[lc] = depth[node] + 1
        depth[rc] = depth[node] + 1
        stack[sp] = rc
        sp += 1
        stack[sp] = lc
        sp += 1

    # keep each leaf's slice in ascending original-index order (deterministic scans)
    for node in range(n_nodes):
        if split_dim[node] == -1:
            perm[start[node]:end[node]] = np.sort(perm[start[node]:end[node]])
    return (
        perm,
        split_dim[:n_nodes].copy(),
        split_val[:n_nodes].copy(),
        left[:n_nodes].copy(),
        right[:n_nodes].copy(),
        start[:n_nodes].copy(),
        end[:n_nodes].copy(),
        boxes[:n_nodes].copy(),
        depth[:n_nodes].copy(),
    )


@numba.njit(cache=True, inline="always")
def _box_lower_bound(qx, qy, box, metric):
    gx = 0.0
    if qx < box[0]:
        gx = box[0] - qx
    elif qx > box[2]:
        gx = qx - box[2]
    gy = 0.0
    if qy < box[1]:
        gy = box[1] - qy
    elif qy > box[3]:
        gy = qy - box[3]
    if metric == 0:
        return gx * gx + gy * gy
    return gx + gy


@numba.njit(cache=True)
def _query(pts_perm, perm, split_dim, split_val, left, right, start, end, boxes,
           queries, metric):
    """Nearest neighbour for each query.

    Distances are compared in the metric's native form (squared for
    Euclidean); a subtree is skipped only when its box lower bound is
    strictly worse than the current best, so equal-distance candidates are
    always examined and the smallest-index rule is exact.
    """
    m = queries.shape[0]
    out_idx = np.empty(m, dtype=np.int64)
    out_dist = np.empty(m)
    visits = np.zeros(m, dtype=np.int64)
    leaf_visits = np.zeros(m, dtype=np.int64)
    n_nodes = split_dim.shape[0]
    stack = np.empty(n_nodes + 1, dtype=np.int64)
    for q in range(m):
        qx = queries[q, 0]
        qy = queries[q, 1]
        best = np.inf
        best_i = -1
        sp = 0
        stack[sp] = 0
        sp += 1
        nv = 0
        nl = 0
        while sp > 0:
            sp -= 1
            node = stack[sp]
            if _box_lower_bound(qx, qy, boxes[node], metric) > best:
                continue
            nv += 1
            d = split_dim[node]
            if d == -1:
                nl += 1
                for i in range(start[node], end[node]):
                    dx = qx - pts_perm[i, 0]
                    dy = qy - pts_perm[i, 1]
                    if metric == 0:
                        dist = dx * dx + dy * dy
                    else:
                        dist = abs(dx) + abs(dy)
                    if dist < best or (dist == best and perm[i] < best_i):
                        best = dist
                        best_i = perm[i]
                continue
            qc = qx if d == 0 else qy
            # push far child first so the near child is searched first
            if qc < split_val[node]:
                stack[sp] = right[node]
                stack[sp + 1] = left[node]
            else:
                stack[sp] = left[node]
                stack[sp + 1] = right[node]
            sp += 2
        out_idx[q] = best_i
        out_dist[q] = np.sqrt(best) if metric == 0 else best
        visits[q] = nv
        leaf_visits[q] = nl
    return out_idx, out_dist, visits, leaf_visits


class KdTree:
    """Sliding-midpoint KD-tree over 2-D points.

    Parameters
    ----------
    points : array_like, shape (n, 2) or sequence of Point2
        Points to index. Their positions in this sequence are the indices
        reported by :meth:`nearest`.
    leaf_size : int
        Maximum number of points stored in a leaf.
    """

    def __init__(self, points, leaf_size: int = DEFAULT_LEAF_SIZE):
        pts = _as_xy(points).copy()
        if len(pts) == 0:
            raise ValueError("cannot index empty set")
        if not np.all(np.isfinite(pts)):
            raise ValueError("cannot index non-finite coordinates")
        leaf_size = int(leaf_size)
        if leaf_size < 1:
            raise ValueError("leaf_size must be a positive integer")
        self.leaf_size = leaf_size
        (
            self.perm,
            self.split_dim,
            self.split_val,
            self.left,
            self.right,
            self.start,
            self.end,
            self.boxes,
            self.node_depth,
        ) = _build(pts, leaf_size)
        self.points = pts
        self._pts_perm = np.ascontiguousarray(pts[self.perm])
        for arr in (self.points, self._pts_perm, self.perm, self.split_dim,
                    self.split_val, self.left, self.right, self.start, self.end,
                    self.boxes, self.node_depth):
            arr.setflags(write=False)

    def __len__(self) -> int:
        return len(self.points)

    @property
    def n_nodes(self) -> int:
        return len(self.split_dim)

    @property
    def n_leaves(self) -> int:
        return int(np.sum(self.split_dim == -1))

    @property
    def depth(self) -> int:
        return int(self.node_depth.max())

    def leaves(self):
        """Yield the original point indices stored in each leaf."""
        for node in np.flatnonzero(self.split_dim == -1):
            yield self.perm[self.start[node]:self.end[node]]

    def query(self, queries, metric="euclidean", *, return_visits: bool = False):
        """Nearest neighbour of every row of ``queries``.

        Returns ``(indices, distances)``, or additionally the per-query count
        of visited nodes and visited leaves when ``return_visits`` is set.
        """
        q = _as_xy(queries)
        if not np.all(np.isfinite(q)):
            raise ValueError("query point must be finite")
        code = Metric.parse(metric).code
        idx, dist, visits, leaf_visits = _query(
            self._pts_perm, self.perm, self.split_dim, self.split_val, self.left,
            self.right, self.start, self.end, self.boxes, q, code,
        )
        if return_visits:
            return idx, dist, visits, leaf_visits
        return idx, dist

    def nearest(self, point, metric="euclidean") -> tuple[int, float]:
        idx, dist = self.query(np.asarray(tuple(point), dtype=float).reshape(1, 2), metric)
        return int(idx[0]), float(dist[0])


def _as_xy(points) -> np.ndarray:
    if isinstance(points, np.ndarray):
        arr = np.ascontiguousarray(points, dtype=float)
    else:
        arr = np.ascontiguousarray([tuple(p) for p in points], dtype=float)
    return arr.reshape(-1, 2)


def build(points, leaf_size: int = DEFAULT_LEAF_SIZE) -> KdTree:
    return KdTree(points, leaf_size)


def nearest(tree: KdTree, query, metric="euclidean") -> tuple[int, float]:
    return tree.nearest(query, metric)
