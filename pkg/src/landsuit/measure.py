"""Geospatial measurements of land units against target features.

Every measurement produces one value per source feature, wrapped in a
:class:`MeasurementResult` that can be attached to the source layer as a new
attribute column.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.spatial import cKDTree
from sklearn.base import BaseEstimator, RegressorMixin, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from ._validation import check_1d, check_positive, check_xy
from .geometry import FeatureLayer, contains_points
from .raster import rasterize_lines, zonal_cell_count
from .spatial_index import DEFAULT_LEAF_SIZE, KdTree, Metric

DEFAULT_POWERS = (0.5, 1.0, 1.5, 2.0, 2.5, 3.0, 3.5, 4.0)
DEFAULT_NEIGHBORS = 12


@dataclass(frozen=True, eq=False)
class MeasurementResult:
    values: np.ndarray
    column_name: str
    units: str = ""
    warnings: tuple = ()

    @property
    def nodata(self) -> np.ndarray:
        return np.isnan(self.values)

    def __len__(self) -> int:
        return len(self.values)

    def attach(self, layer: FeatureLayer, *, overwrite: bool = False) -> FeatureLayer:
        if len(layer) != len(self.values):
            raise ValueError(
                f"result has {len(self.values)} values but layer has {len(layer)} features"
            )
        return layer.with_column(self.column_name, self.values, overwrite=overwrite)


@dataclass(frozen=True)
class IdwConfig:
    """Shepard interpolation settings.

    ``n_neighbors`` is a positive integer or the string ``"all"``;
    ``search_radius`` (optional) drops known points farther than it.
    """

    power: float = 2.0
    n_neighbors: int | str = DEFAULT_NEIGHBORS
    search_radius: float | None = None

    def __post_init__(self):
        check_positive(self.power, "power")
        if self.n_neighbors != "all":
            if isinstance(self.n_neighbors, bool) or int(self.n_neighbors) != self.n_neighbors \
                    or int(self.n_neighbors) < 1:
                raise ValueError(
                    f"n_neighbors must be a positive integer or 'all', got {self.n_neighbors!r}"
                )
        if self.search_radius is not None:
            check_positive(self.search_radius, "search_radius")


def _source_points(sources: FeatureLayer, xy_columns) -> np.ndarray:
    if len(sources) == 0:
        raise ValueError("no source features")
    return check_xy(sources.representative_points(xy_columns), "source points")


def _target_points(targets: FeatureLayer, what: str = "targets") -> np.ndarray:
    if len(targets) == 0:
        raise ValueError(f"no {what}")
    if targets.kind != "point":
        raise TypeError(f"{what} must be a point layer, got {targets.kind}")
    return np.asarray(targets.xy)


def distance_to_point(
    sources: FeatureLayer,
    targets: FeatureLayer,
    metric="euclidean",
    *,
    column: str = "distance",
    xy_columns: Sequence[str] | None = None,
    leaf_size: int = DEFAULT_LEAF_SIZE,
) -> MeasurementResult:
    """Distance from each source's representative point to its nearest target."""
    metric = Metric.parse(metric)
    tpts = _target_points(targets)
    spts = _source_points(sources, xy_columns)
    _, dist = KdTree(tpts, leaf_size).query(spts, metric)
    return MeasurementResult(dist, column, "map units")


def distance_to_line(
    sources: FeatureLayer,
    lines: FeatureLayer,
    cell_size: float,
    metric="euclidean",
    *,
    column: str = "distance",
    xy_columns: Sequence[str] | None = None,
) -> MeasurementResult:
    """Distance to the nearest cell center of the rasterized line network.

    Accuracy is bounded by the cell size: each reported distance is within
    ``(sqrt(2)/2) * cell_size`` of the true Euclidean distance to the lines.
    """
    metric = Metric.parse(metric)
    grid = rasterize_lines(lines, cell_size)
    centers = grid.set_cell_centers()
    spts = _source_points(sources, xy_columns)
    _, dist = KdTree(centers).query(spts, metric)
    return MeasurementResult(dist, column, "map units")


def _zone_areas(zones: FeatureLayer):
    if len(zones) == 0:
        raise ValueError("no zones")
    if zones.kind != "polygon":
        raise TypeError(f"zones must be a polygon layer, got {zones.kind}")
    areas = np.array([g.area for g in zones.geometries], dtype=float)
    degenerate = ~(areas > 0)
    warnings = tuple(f"zone {i} has zero area; set to nodata" for i in np.flatnonzero(degenerate))
    return areas, degenerate, warnings


def density_of_point(
    zones: FeatureLayer,
    targets: FeatureLayer,
    value_column: str | None = None,
    *,
    column: str = "density",
) -> MeasurementResult:
    """Sum of target values (1 each when no column is given) per unit zone area."""
    areas, degenerate, warnings = _zone_areas(zones)
    if len(targets) == 0:
        return MeasurementResult(np.where(degenerate, np.nan, 0.0), column,
                                 "per square map unit", warnings)
    tpts = _target_points(targets)
    if value_column is None:
        weights = np.ones(len(tpts))
    else:
        if value_column not in targets.attributes:
            raise ValueError(f"missing value_column {value_column!r} in targets")
        weights = check_1d(targets[value_column], value_column)

    order = np.argsort(tpts[:, 0], kind="stable")
    xs = tpts[order, 0]
    totals = np.zeros(len(zones))
    for i, zone in enumerate(zones.geometries):
        if degenerate[i]:
            continue
        x0, y0, x1, y1 = zone.bounds
        lo = np.searchsorted(xs, x0, side="left")
        hi = np.searchsorted(xs, x1, side="right")
        cand = order[lo:hi]
        cy = tpts[cand, 1]
        cand = cand[(cy >= y0) & (cy <= y1)]
        if cand.size:
            inside = contains_points(zone, tpts[cand])
            # sum in original target order for order-independent rounding
            totals[i] = np.sum(weights[np.sort(cand[inside])])
    values = np.full(len(zones), np.nan)
    ok = ~degenerate
    values[ok] = totals[ok] / areas[ok]
    return MeasurementResult(values, column, "per square map unit", warnings)


def density_of_line(
    zones: FeatureLayer,
    lines: FeatureLayer,
    cell_size: float,
    mode: str = "cell-count",
    *,
    column: str = "density",
) -> MeasurementResult:
    """Rasterized line density per zone.

    ``mode="cell-count"`` divides the number of line cells whose centers fall
    in the zone by the zone area; ``mode="length-approx"`` multiplies that
    count by the cell size first, approximating line length per unit area.
    """
    if mode not in ("cell-count", "length-approx"):
        raise ValueError(f"unknown density mode {mode!r}")
    areas, degenerate, warnings = _zone_areas(zones)
    grid = rasterize_lines(lines, cell_size)
    counts = np.array(
        [0 if degenerate[i] else zonal_cell_count(grid, z) for i, z in enumerate(zones.geometries)],
        dtype=float,
    )
    values = np.full(len(zones), np.nan)
    ok = ~degenerate
    values[ok] = counts[ok] / areas[ok]
    if mode == "length-approx":
        values = values * grid.transform.c
        units = "map units per square map unit"
    else:
        units = "cells per square map unit"
    return MeasurementResult(values, column, units, warnings)


class _IdwIndex:
    """Neighbour lookups over the known points for Shepard interpolation."""

    def __init__(self, xy: np.ndarray, z: np.ndarray):
        self.xy = xy
        self.z = z
        self.exact = KdTree(xy)
        self.knn = cKDTree(xy)

    def neighbors(self, P: np.ndarray, n_neighbors, radius):
        n = len(self.xy)
        k = n if n_neighbors == "all" else min(int(n_neighbors), n)
        bound = np.inf if radius is None else float(radius)
        if k == n and bound == np.inf:
            # every known point takes part: skip the tree entirely
            d = np.hypot(P[:, 0:1] - self.xy[:, 0], P[:, 1:2] - self.xy[:, 1])
            idx = np.broadcast_to(np.arange(n), d.shape)
            return d, idx
        d, idx = self.knn.query(P, k=k, distance_upper_bound=bound)
        return d.reshape(len(P), k), idx.reshape(len(P), k)

    def estimate(self, P: np.ndarray, config: IdwConfig) -> np.ndarray:
        hit, hit_d = self.exact.query(P)
        d, idx = self.neighbors(P, config.n_neighbors, config.search_radius)
        return _shepard(d, idx, self.z, config.power, hit, hit_d)


def _shepard(d, idx, z, power, hit=None, hit_d=None) -> np.ndarray:
    """Inverse-distance weighted mean per row; rows with no neighbour give NaN.

    ``d`` holds neighbour distances (``inf`` for missing neighbours). Where a
    known point coincides with the estimate location, its value is returned
    exactly (``hit`` gives the smallest coincident index).
    """
    valid = np.isfinite(d)
    safe_idx = np.where(valid, idx, 0)
    dz = np.where(valid, d, np.inf)
    dmin = dz.min(axis=1, keepdims=True)
    with np.errstate(divide="ignore", invalid="ignore"):
        # (dmin/d)^u is the standard weight rescaled by dmin^u: avoids overflow at large u
        w = np.where(valid, (dmin / np.where(valid, d, 1.0)) ** power, 0.0)
        num = np.sum(w * z[safe_idx], axis=1)
        den = np.sum(w, axis=1)
        out = num / den
    out[~valid.any(axis=1)] = np.nan
    if hit is not None:
        zero = hit_d == 0.0
        out[zero] = z[hit[zero]]
    return out


def idw_estimate(
    zones: FeatureLayer,
    known: FeatureLayer,
    value_column: str,
    config: IdwConfig = IdwConfig(),
    *,
    column: str = "idw",
    xy_columns: Sequence[str] | None = None,
) -> MeasurementResult:
    """Shepard inverse-distance estimate at each zone's representative point."""
    kxy = _target_points(known, "known points")
    if value_column not in known.attributes:
        raise ValueError(f"missing value_column {value_column!r} in known points")
    z = check_1d(known[value_column], value_column)
    P = _source_points(zones, xy_columns)
    values = _IdwIndex(kxy, z).estimate(P, config)
    n_missing = int(np.isnan(values).sum())
    warnings = (f"{n_missing} zones have no known point within the search radius",) \
        if n_missing else ()
    return MeasurementResult(values, column, "", warnings)


@dataclass(frozen=True)
class IdwCvResult:
    best_power: float
    rmse: dict = field(default_factory=dict)
    n_skipped: int = 0

    def __iter__(self):
        yield self.best_power
        yield self.rmse


def idw_cv(
    known: FeatureLayer | np.ndarray,
    value_column: str | np.ndarray,
    candidate_powers: Sequence[float] = DEFAULT_POWERS,
    *,
    n_neighbors=DEFAULT_NEIGHBORS,
    search_radius: float | None = None,
) -> IdwCvResult:
    """Leave-one-out RMSE for each candidate power; smallest RMSE wins.

    ``known`` is a point layer with ``value_column``, or an (n, 2) array with
    ``value_column`` given as the matching values. Points sharing their
    location with another known point are left out of the scoring (their
    held-out prediction is undefined) and counted in ``n_skipped``.
    """
    if isinstance(known, FeatureLayer):
        xy = _target_points(known, "known points")
        if value_column not in known.attributes:
            raise ValueError(f"missing value_column {value_column!r} in known points")
        z = check_1d(known[value_column], value_column)
    else:
        xy = check_xy(known, "known")
        z = check_1d(value_column, "values")
    if len(xy) < 3:
        raise ValueError("idw_cv needs at least 3 known points")
    powers = [check_positive(u, "candidate power") for u in candidate_powers]
    if not powers:
        raise ValueError("no candidate powers")
    IdwConfig(powers[0], n_neighbors, search_radius)

    n = len(xy)
    tree = cKDTree(xy)
    k_others = n - 1 if n_neighbors == "all" else min(int(n_neighbors), n - 1)
    bound = np.inf if search_radius is None else float(search_radius)
    # self plus k others; coincident points make the nearest "other" sit at 0
    d, idx = tree.query(xy, k=k_others + 1)
    d, idx = d.reshape(n, -1), idx.reshape(n, -1)
    coincident = np.array([np.count_nonzero(d[i] == 0.0) > 1 for i in range(n)])
    keep = ~coincident
    rows = np.flatnonzero(keep)
    # drop the self column from each retained row
    self_mask = idx[rows] == rows[:, None]
    nd = d[rows][~self_mask].reshape(len(rows), k_others)
    ni = idx[rows][~self_mask].reshape(len(rows), k_others)
    nd = np.where(nd <= bound, nd, np.inf)

    rmse = {}
    for u in powers:
        pred = _shepard(nd, ni, z, u)
        err = pred - z[rows]
        ok = np.isfinite(err)
        rmse[u] = float(np.sqrt(np.mean(err[ok] ** 2))) if ok.any() else math.nan
    finite = [u for u in powers if math.isfinite(rmse[u])]
    if not finite:
        raise ValueError("no held-out point could be predicted")
    best = min(finite, key=lambda u: (rmse[u], u))
    return IdwCvResult(best, rmse, int(coincident.sum()))


class NearestDistance(TransformerMixin, BaseEstimator):
    """Distance to the nearest fitted target point.

    ``fit`` indexes target coordinates; ``transform`` maps query coordinates
    of shape (m, 2) to a column of nearest-target distances.
    """

    def __init__(self, metric="euclidean", leaf_size=DEFAULT_LEAF_SIZE):
        self.metric = metric
        self.leaf_size = leaf_size

    def fit(self, X, y=None):
        Metric.parse(self.metric)
        self.tree_ = KdTree(check_xy(X, "targets"), self.leaf_size)
        self.n_features_in_ = 2
        return self

    def query(self, X):
        check_is_fitted(self, "tree_")
        idx, dist = self.tree_.query(check_xy(X), self.metric)
        return dist, idx

    def transform(self, X):
        return self.query(X)[0].reshape(-1, 1)


class IDWRegressor(RegressorMixin, BaseEstimator):
    """Shepard inverse-distance-weighted interpolation as a regressor."""

    def __init__(self, power=2.0, n_neighbors=DEFAULT_NEIGHBORS, search_radius=None):
        self.power = power
        self.n_neighbors = n_neighbors
        self.search_radius = search_radius

    def fit(self, X, y):
        self.config_ = IdwConfig(self.power, self.n_neighbors, self.search_radius)
        X = check_xy(X)
        y = check_1d(y, "y")
        if len(y) != len(X):
            raise ValueError(f"X has {len(X)} rows but y has {len(y)}")
        self.index_ = _IdwIndex(X, y)
        self.n_features_in_ = 2
        return self

    def predict(self, X):
        check_is_fitted(self, "index_")
        return self.index_.estimate(check_xy(X), self.config_)
