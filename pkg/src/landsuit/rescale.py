"""Transformations from raw measurements onto a common suitability scale."""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from ._validation import check_1d, check_2d


class ConstantInputWarning(UserWarning):
    """Linear rescaling of a constant input; outputs were set to the scale midpoint."""


@dataclass(frozen=True)
class ReclassifyTable:
    """Lookup from raw values to suitability scores.

    Use :meth:`categorical` for exact-value lookups and :meth:`ranges` for
    half-open ``[low, high)`` intervals. Unmatched values take ``default``
    or raise.
    """

    kind: str
    entries: tuple
    default: float | None = None

    def __post_init__(self):
        if self.kind == "categorical":
            keys = [k for k, _ in self.entries]
            if len(set(keys)) != len(keys):
                raise ValueError("categorical reclassify keys must be unique")
        elif self.kind == "range":
            prev_high = -math.inf
            for low, high, _ in self.entries:
                if not low < high:
                    raise ValueError(f"empty or inverted range [{low}, {high})")
                if low < prev_high:
                    raise ValueError("ranges must be sorted and non-overlapping")
                prev_high = high
        else:
            raise ValueError(f"unknown reclassify kind {self.kind!r}")

    @classmethod
    def categorical(cls, mapping: Mapping, default=None) -> "ReclassifyTable":
        return cls("categorical", tuple((k, float(v)) for k, v in mapping.items()), default)

    @classmethod
    def ranges(cls, entries: Sequence, default=None) -> "ReclassifyTable":
        return cls(
            "range",
            tuple((float(lo), float(hi), float(s)) for lo, hi, s in entries),
            default,
        )

    @classmethod
    def from_dict(cls, doc: Mapping) -> "ReclassifyTable":
        """Build from a config mapping: ``{"kind": ..., "table"|"ranges": ..., "default": ...}``."""
        kind = doc.get("kind")
        default = doc.get("default")
        if kind == "categorical":
            table = doc.get("table")
            if not isinstance(table, Mapping):
                raise ValueError("categorical reclassify needs a 'table' object")
            return cls.categorical(table, default)
        if kind == "range":
            ranges = doc.get("ranges")
            if not isinstance(ranges, (list, tuple)):
                raise ValueError("range reclassify needs a 'ranges' list of [low, high, score]")
            return cls.ranges(ranges, default)
        raise ValueError(f"unknown reclassify kind {kind!r}")


def _is_missing(v) -> bool:
    return v is None or (isinstance(v, float) and math.isnan(v))


def reclassify(values, table: ReclassifyTable) -> np.ndarray:
    """Map each value to its score; nodata (None/NaN) passes through as NaN."""
    values = list(values)
    out = np.empty(len(values))
    if table.kind == "categorical":
        lookup = dict(table.entries)
        # numeric categories match by value whatever their container type
        numeric = {float(k): s for k, s in table.entries
                   if isinstance(k, (int, float)) and not isinstance(k, bool)}
        for i, v in enumerate(values):
            if _is_missing(v):
                out[i] = np.nan
                continue
            if isinstance(v, np.generic):
                v = v.item()
            if v in lookup:
                out[i] = lookup[v]
            elif isinstance(v, (int, float)) and float(v) in numeric:
                out[i] = numeric[float(v)]
            elif str(v) in lookup:
                out[i] = lookup[str(v)]
            elif table.default is not None:
                out[i] = table.default
            else:
                raise ValueError(f"value {v!r} matches no reclassify entry")
        return out

    lows = np.array([e[0] for e in table.entries])
    highs = np.array([e[1] for e in table.entries])
    scores = np.array([e[2] for e in table.entries])
    for i, v in enumerate(values):
        if _is_missing(v):
            out[i] = np.nan
            continue
        x = float(v)
        j = np.searchsorted(lows, x, side="right") - 1
        if j >= 0 and x < highs[j]:
            out[i] = scores[j]
        elif table.default is not None:
            out[i] = table.default
        else:
            raise ValueError(f"value {v!r} matches no reclassify entry")
    return out


@dataclass(frozen=True, eq=False)
class ClassBreaks:
    k: int
    breaks: np.ndarray
    gvf: float
    sdam: float
    sdcm: float
    class_sizes: tuple

    def classify(self, values) -> np.ndarray:
        """Class label 0..k-1 for each value (a value equal to a break goes up)."""
        x = np.asarray(values, dtype=float)
        labels = np.searchsorted(self.breaks, x, side="right").astype(float)
        labels[np.isnan(x)] = np.nan
        return labels


def natural_breaks(values, k: int) -> ClassBreaks:
    """Exact Jenks classification by dynamic programming.

    Sorted values are split into ``k`` contiguous classes minimising the sum
    of squared deviations from class means. Splits between equal values are
    never taken (one always exists that is at least as good), so each
    distinct value lands in exactly one class. Breaks are the midpoints
    between the last value of one class and the first of the next.
    """
    x = np.sort(check_1d(values, "values"))
    k = int(k)
    if k < 2:
        raise ValueError("natural_breaks needs k >= 2")
    n_distinct = len(np.unique(x))
    if n_distinct < k:
        raise ValueError(f"{n_distinct} distinct values cannot form {k} classes")
    n = len(x)
    # shift by the mean to keep prefix sums well conditioned
    xc = x - x.mean()
    s1 = np.concatenate([[0.0], np.cumsum(xc)])
    s2 = np.concatenate([[0.0], np.cumsum(xc * xc)])
    # cut allowed before position m (1..n-1) only between distinct values
    cut_ok = np.concatenate([[True], x[1:] != x[:-1], [True]])

    def ssd(i, j):
        """Squared deviation of x[i:j] about its mean (vectorised over i)."""
        cnt = j - i
        s = s1[j] - s1[i]
        return np.maximum(s2[j] - s2[i] - s * s / cnt, 0.0)

    # cost[c][j]: best SDCM of x[:j] in c+1 classes
    idx = np.arange(n + 1)
    cost = np.full((k, n + 1), np.inf)
    back = np.zeros((k, n + 1), dtype=np.int64)
    cost[0, 1:] = ssd(np.zeros(n, dtype=np.int64), idx[1:])
    for c in range(1, k):
        for j in range(c + 1, n + 1):
            i = idx[c:j]
            cand = cost[c - 1, i] + ssd(i, j)
            cand = np.where(cut_ok[i], cand, np.inf)
            b = int(np.argmin(cand))
            cost[c, j] = cand[b]
            back[c, j] = i[b]
    bounds = [n]
    for c in range(k - 1, 0, -1):
        bounds.append(back[c, bounds[-1]])
    bounds.append(0)
    bounds = bounds[::-1]

    sizes = tuple(int(b - a) for a, b in zip(bounds[:-1], bounds[1:]))
    breaks = np.array([_midpoint(x[b - 1], x[b]) for b in bounds[1:-1]])
    sdam = float(np.sum((x - x.mean()) ** 2))
    sdcm = float(sum(np.sum((x[a:b] - x[a:b].mean()) ** 2)
                     for a, b in zip(bounds[:-1], bounds[1:])))
    gvf = (sdam - sdcm) / sdam
    return ClassBreaks(k, breaks, gvf, sdam, sdcm, sizes)


def _midpoint(lo: float, hi: float) -> float:
    mid = 0.5 * lo + 0.5 * hi
    # adjacent floats: keep the break strictly above the lower class
    return hi if mid <= lo else mid


@dataclass(frozen=True)
class LinearScale:
    a: float = 1.0
    b: float = 9.0
    order: str = "regular"

    def __post_init__(self):
        if not (math.isfinite(self.a) and math.isfinite(self.b) and self.a < self.b):
            raise ValueError(f"scale needs finite a < b, got [{self.a}, {self.b}]")
        if self.order not in ("regular", "inverse"):
            raise ValueError(f"order must be 'regular' or 'inverse', got {self.order!r}")


def _stretch(x, x_min, x_max, scale: LinearScale) -> np.ndarray:
    a, b = scale.a, scale.b
    if x_max == x_min:
        warnings.warn("constant input mapped to scale midpoint", ConstantInputWarning,
                      stacklevel=3)
        out = np.full(x.shape, (a + b) / 2)
        out[np.isnan(x)] = np.nan
        return out
    frac = (x - x_min) / (x_max - x_min)
    if scale.order == "regular":
        return a + frac * (b - a)
    return b - frac * (b - a)


def linear(values, scale: LinearScale = LinearScale()) -> np.ndarray:
    """Min-max stretch onto ``[scale.a, scale.b]``, regular or inverse order.

    NaN entries are ignored when finding the range and stay NaN.
    """
    x = check_1d(values, "values", allow_nan=True)
    if x.size == 0 or np.all(np.isnan(x)):
        raise ValueError("linear rescale needs at least one value")
    return _stretch(x, np.nanmin(x), np.nanmax(x), scale)


class LinearRescaler(TransformerMixin, BaseEstimator):
    """Column-wise min-max stretch learned on the training data."""

    def __init__(self, a=1.0, b=9.0, order="regular"):
        self.a = a
        self.b = b
        self.order = order

    def fit(self, X, y=None):
        self.scale_ = LinearScale(float(self.a), float(self.b), self.order)
        X = check_2d(X, allow_nan=True)
        self.data_min_ = np.nanmin(X, axis=0)
        self.data_max_ = np.nanmax(X, axis=0)
        self.n_features_in_ = X.shape[1]
        return self

    def transform(self, X):
        check_is_fitted(self, "scale_")
        X = check_2d(X, allow_nan=True)
        if X.shape[1] != self.n_features_in_:
            raise ValueError(f"expected {self.n_features_in_} features, got {X.shape[1]}")
        return np.column_stack([
            _stretch(X[:, j], self.data_min_[j], self.data_max_[j], self.scale_)
            for j in range(X.shape[1])
        ])


class NaturalBreaksDiscretizer(TransformerMixin, BaseEstimator):
    """Column-wise Jenks classes; ``scores`` maps class labels to suitability."""

    def __init__(self, n_classes=5, scores=None):
        self.n_classes = n_classes
        self.scores = scores

    def fit(self, X, y=None):
        X = check_2d(X, allow_nan=True)
        if self.scores is not None and len(self.scores) != self.n_classes:
            raise ValueError("scores must have one entry per class")
        self.breaks_ = [
            natural_breaks(col[~np.isnan(col)], self.n_classes) for col in X.T
        ]
        self.n_features_in_ = X.shape[1]
        return self

    def transform(self, X):
        check_is_fitted(self, "breaks_")
        X = check_2d(X, allow_nan=True)
        out = np.column_stack([cb.classify(col) for cb, col in zip(self.breaks_, X.T)])
        if self.scores is None:
            return out
        lut = np.asarray(self.scores, dtype=float)
        mapped = np.full(out.shape, np.nan)
        ok = ~np.isnan(out)
        mapped[ok] = lut[out[ok].astype(int)]
        return mapped


class Reclassifier(TransformerMixin, BaseEstimator):
    """Stateless lookup-table transform over a single column."""

    def __init__(self, table=None):
        self.table = table

    def fit(self, X, y=None):
        if not isinstance(self.table, ReclassifyTable):
            raise ValueError("Reclassifier needs a ReclassifyTable")
        self.n_features_in_ = 1
        return self

    def transform(self, X):
        check_is_fitted(self, "n_features_in_")
        arr = np.asarray(X, dtype=object)
        if arr.ndim == 2:
            if arr.shape[1] != 1:
                raise ValueError("Reclassifier works on a single column")
            arr = arr[:, 0]
        return reclassify(arr, self.table).reshape(-1, 1)
