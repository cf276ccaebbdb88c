"""Timing harness: indexed implementations against O(mn) brute-force scans.

Each suite times the library's indexed path and a straightforward
brute-force baseline on the same seeded synthetic data, then fits log-log
slopes across sizes. Only speed ratios are asserted; absolute times are
informational.
"""
from __future__ import annotations

import json
import math
import time
from dataclasses import dataclass, field

import numba
import numpy as np

from .geometry import FeatureLayer, Polygon, contains_points
from .measure import DEFAULT_NEIGHBORS, IdwConfig, _IdwIndex, density_of_point
from .spatial_index import KdTree

SUITES = ("nn", "idw", "density")
ASSERT_FLOOR = 10_000


class BenchAssertionError(AssertionError):
    pass


def synthetic_points(n: int, seed: int) -> np.ndarray:
    """``n`` uniform points in the unit square scaled to side ``sqrt(n)`` (unit density)."""
    rng = np.random.default_rng(seed)
    return rng.random((n, 2)) * math.sqrt(n)


@numba.njit(cache=True)
def brute_nearest(sources, targets):
    """Index and Euclidean distance of the nearest target for each source (full scan)."""
    m = sources.shape[0]
    idx = np.empty(m, dtype=np.int64)
    dist = np.empty(m)
    for i in range(m):
        sx, sy = sources[i, 0], sources[i, 1]
        best, bj = np.inf, -1
        for j in range(targets.shape[0]):
            dx = targets[j, 0] - sx
            dy = targets[j, 1] - sy
            d2 = dx * dx + dy * dy
            if d2 < best:
                best, bj = d2, j
        idx[i] = bj
        dist[i] = math.sqrt(best)
    return idx, dist


@numba.njit(cache=True)
def brute_idw(queries, known, z, k, power):
    """Shepard estimate from the ``k`` nearest known points found by full scan."""
    m = queries.shape[0]
    n = known.shape[0]
    out = np.empty(m)
    kd = np.empty(k)
    ki = np.empty(k, dtype=np.int64)
    for i in range(m):
        filled = 0
        for j in range(n):
            dx = known[j, 0] - queries[i, 0]
            dy = known[j, 1] - queries[i, 1]
            d = math.sqrt(dx * dx + dy * dy)
            if filled < k:
                p = filled
                filled += 1
            elif d < kd[k - 1]:
                p = k - 1
            else:
                continue
            # insertion into the sorted k-buffer
            while p > 0 and kd[p - 1] > d:
                kd[p] = kd[p - 1]
                ki[p] = ki[p - 1]
                p -= 1
            kd[p] = d
            ki[p] = j
        if kd[0] == 0.0:
            out[i] = z[ki[0]]
            continue
        num = 0.0
        den = 0.0
        for t in range(filled):
            w = (kd[0] / kd[t]) ** power
            num += w * z[ki[t]]
            den += w
        out[i] = num / den
    return out


def _zones(n: int) -> FeatureLayer:
    side = math.sqrt(n)
    g = max(1, int(math.sqrt(n / 100)))
    step = side / g
    polys = tuple(
        Polygon([(i * step, j * step), ((i + 1) * step, j * step),
                 ((i + 1) * step, (j + 1) * step), (i * step, (j + 1) * step)])
        for i in range(g) for j in range(g)
    )
    return FeatureLayer(polys, {})


def brute_density(zones: FeatureLayer, pts: np.ndarray) -> np.ndarray:
    """Point-in-polygon test of every point against every zone."""
    return np.array([np.count_nonzero(contains_points(z, pts)) / z.area
                     for z in zones.geometries])


def _case(suite: str, n: int, seed: int):
    """(indexed, brute) zero-argument callables over the same data."""
    if suite == "nn":
        src = synthetic_points(n, seed)
        tgt = synthetic_points(n, seed + 1)
        return (lambda: KdTree(tgt).query(src)), (lambda: brute_nearest(src, tgt))
    if suite == "idw":
        q = synthetic_points(n, seed)
        known = synthetic_points(n, seed + 1)
        z = np.random.default_rng(seed + 2).random(n) * 100
        cfg = IdwConfig(2.0, DEFAULT_NEIGHBORS)
        k = min(DEFAULT_NEIGHBORS, n)
        return ((lambda: _IdwIndex(known, z).estimate(q, cfg)),
                (lambda: brute_idw(q, known, z, k, 2.0)))
    if suite == "density":
        pts = synthetic_points(n, seed)
        zones = _zones(n)
        layer = FeatureLayer.from_xy(pts)
        return (lambda: density_of_point(zones, layer)), (lambda: brute_density(zones, pts))
    raise ValueError(f"unknown bench suite {suite!r}; expected one of {SUITES}")


def _timed(fn, repeat: int) -> float:
    best = math.inf
    for _ in range(repeat):
        t = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t)
    return best


def loglog_slope(sizes, times) -> float:
    """Least-squares slope of log(time) against log(n)."""
    if len(sizes) < 2:
        return math.nan
    return float(np.polyfit(np.log(sizes), np.log(np.maximum(times, 1e-9)), 1)[0])


@dataclass
class BenchResult:
    suite: str
    seed: int
    sizes: list
    indexed: list = field(default_factory=list)
    brute: list = field(default_factory=list)
    min_speedup: float = 1.0
    asserted: bool = False

    @property
    def ratios(self) -> list:
        return [i / b if b > 0 else math.inf for i, b in zip(self.indexed, self.brute)]

    @property
    def indexed_slope(self) -> float:
        return loglog_slope(self.sizes, self.indexed)

    @property
    def brute_slope(self) -> float:
        return loglog_slope(self.sizes, self.brute)

    def to_dict(self) -> dict:
        return {
            "suite": self.suite,
            "seed": self.seed,
            "rows": [
                {"n": n, "indexed_s": i, "brute_s": b, "ratio": r}
                for n, i, b, r in zip(self.sizes, self.indexed, self.brute, self.ratios)
            ],
            "indexed_slope": _nan_to_none(self.indexed_slope),
            "brute_slope": _nan_to_none(self.brute_slope),
            "min_speedup": self.min_speedup,
            "asserted": self.asserted,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    def to_table(self) -> str:
        lines = [f"suite {self.suite} seed {self.seed}",
                 f"{'n':>10} {'indexed_s':>12} {'brute_s':>12} {'ratio':>10}"]
        for n, i, b, r in zip(self.sizes, self.indexed, self.brute, self.ratios):
            lines.append(f"{n:>10d} {i:>12.6f} {b:>12.6f} {r:>10.4f}")
        lines.append(f"log-log slope indexed {self.indexed_slope:.3f} brute {self.brute_slope:.3f}")
        return "\n".join(lines)


def _nan_to_none(v):
    return None if math.isnan(v) else v


def run_bench(
    suite: str,
    sizes,
    seed: int = 0,
    *,
    repeat: int = 1,
    min_speedup: float = 1.0,
    assert_floor: int = ASSERT_FLOOR,
) -> BenchResult:
    """Time ``suite`` at each size; assert the speedup at the largest size.

    The assertion only applies when the largest size reaches
    ``assert_floor``: the indexed path must then be at least ``min_speedup``
    times faster than brute force, else :class:`BenchAssertionError`.
    """
    sizes = [int(n) for n in sizes]
    if not sizes or any(n < 1 for n in sizes):
        raise ValueError("sizes must be positive integers")
    if sizes != sorted(sizes):
        raise ValueError("sizes must be ascending")
    if suite not in SUITES:
        raise ValueError(f"unknown bench suite {suite!r}; expected one of {SUITES}")
    # compile and warm both paths outside the timed region
    for fn in _case(suite, min(sizes[0], 64), seed):
        fn()
    result = BenchResult(suite, seed, sizes, min_speedup=min_speedup)
    for n in sizes:
        indexed, brute = _case(suite, n, seed)
        result.indexed.append(_timed(indexed, repeat))
        result.brute.append(_timed(brute, repeat))
    if sizes[-1] >= assert_floor:
        result.asserted = True
        speedup = result.brute[-1] / result.indexed[-1]
        if speedup < min_speedup:
            raise BenchAssertionError(
                f"{suite}: indexed path only {speedup:.2f}x faster than brute force "
                f"at n={sizes[-1]} (need {min_speedup}x)"
            )
    return result
