"""Weighted aggregation of suitability columns and AHP criterion weights."""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from ._validation import check_2d

# Saaty's random consistency index, n = 1..15
RANDOM_INDEX = (0.0, 0.0, 0.58, 0.90, 1.12, 1.24, 1.32, 1.41, 1.45, 1.49,
                1.51, 1.54, 1.56, 1.57, 1.58)
SAATY_SCALE = tuple(sorted({float(Fraction(1, k)) for k in range(2, 10)} | set(map(float, range(1, 10)))))
CR_THRESHOLD = 0.1
MAX_CRITERIA = 15
POWER_TOL = 1e-12
POWER_MAX_ITER = 10_000
RANDOM_AHP_MAX_DRAWS = 100_000


class ConvergenceError(RuntimeError):
    pass


def weighted_sum(columns, weights, *, normalize: bool = False) -> np.ndarray:
    """``out[i] = sum_k weights[k] * columns[k][i]``.

    Weights must be non-negative and sum to 1 (within 1e-9) unless
    ``normalize`` is set, in which case they are divided by their sum.
    Terms are accumulated in column order.
    """
    cols = [np.asarray(c, dtype=float) for c in columns]
    w = np.asarray(weights, dtype=float).ravel()
    if not cols:
        raise ValueError("weighted_sum needs at least one column")
    if len(w) != len(cols):
        raise ValueError(f"{len(cols)} columns but {len(w)} weights")
    n = len(cols[0])
    for k, c in enumerate(cols):
        if c.ndim != 1 or len(c) != n:
            raise ValueError(f"column {k} has length {len(c)}, expected {n}")
    if np.any(~np.isfinite(w)) or np.any(w < 0):
        raise ValueError("weights must be finite and non-negative")
    total = w.sum()
    if normalize:
        if total <= 0:
            raise ValueError("weights sum to zero")
        w = w / total
    elif abs(total - 1.0) > 1e-9:
        raise ValueError(f"weights sum to {total!r}, not 1 (pass normalize=True)")
    out = w[0] * cols[0]
    for wk, c in zip(w[1:], cols[1:]):
        out = out + wk * c
    return out


@dataclass(frozen=True, eq=False)
class ComparisonMatrix:
    """Positive reciprocal pairwise-comparison matrix."""

    entries: np.ndarray

    def __post_init__(self):
        a = np.array(self.entries, dtype=float)
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise ValueError(f"comparison matrix must be square, got shape {a.shape}")
        n = a.shape[0]
        if not 2 <= n <= MAX_CRITERIA:
            raise ValueError(f"comparison matrix size must be 2..{MAX_CRITERIA}, got {n}")
        if not np.all(np.isfinite(a)) or np.any(a <= 0):
            raise ValueError("comparison matrix entries must be positive and finite")
        if not np.allclose(np.diag(a), 1.0, rtol=0, atol=1e-9):
            raise ValueError("comparison matrix diagonal must be 1")
        if not np.allclose(a * a.T, 1.0, rtol=0, atol=1e-9):
            raise ValueError("comparison matrix is not reciprocal (a_ji != 1/a_ij)")
        a.setflags(write=False)
        object.__setattr__(self, "entries", a)

    @classmethod
    def from_judgments(cls, upper) -> "ComparisonMatrix":
        """Build from the strict upper triangle, row by row, on the Saaty scale."""
        vals = [float(v) for v in upper]
        m = len(vals)
        n = int(round((1 + (1 + 8 * m) ** 0.5) / 2))
        if n * (n - 1) // 2 != m:
            raise ValueError(f"{m} judgments do not fill an upper triangle")
        for v in vals:
            if not any(abs(v - s) <= 1e-9 for s in SAATY_SCALE):
                raise ValueError(f"judgment {v} is not on the Saaty scale")
        a = np.ones((n, n))
        iu = np.triu_indices(n, 1)
        a[iu] = vals
        a[iu[1], iu[0]] = 1.0 / np.asarray(vals)
        return cls(a)

    @property
    def n(self) -> int:
        return self.entries.shape[0]


@dataclass(frozen=True, eq=False)
class PriorityVector:
    weights: np.ndarray
    lambda_max: float
    cr: float
    matrix: np.ndarray | None = field(default=None)
    iterations: int = 0

    @property
    def consistent(self) -> bool:
        return self.cr < CR_THRESHOLD

    def to_dict(self) -> dict:
        doc = {
            "weights": [float(w) for w in self.weights],
            "lambda_max": float(self.lambda_max),
            "cr": float(self.cr),
        }
        if self.matrix is not None:
            doc["matrix"] = [[float(v) for v in row] for row in self.matrix]
        return doc


def _as_matrix(matrix) -> ComparisonMatrix:
    return matrix if isinstance(matrix, ComparisonMatrix) else ComparisonMatrix(matrix)


def _power_iteration(a: np.ndarray) -> tuple[np.ndarray, float, int]:
    n = a.shape[0]
    w = np.full(n, 1.0 / n)
    for it in range(1, POWER_MAX_ITER + 1):
        nxt = a @ w
        nxt /= nxt.sum()
        delta = np.max(np.abs(nxt - w))
        w = nxt
        if delta < POWER_TOL:
            break
    else:
        raise ConvergenceError(
            f"power iteration did not converge in {POWER_MAX_ITER} steps (residual {delta:.3e})"
        )
    lam = float(np.mean((a @ w) / w))
    return w, lam, it


def _cr_from_lambda(lam, n: int):
    if n <= 2:
        return np.zeros_like(np.asarray(lam, dtype=float))
    ci = (np.asarray(lam, dtype=float) - n) / (n - 1)
    return np.maximum(ci / RANDOM_INDEX[n - 1], 0.0)


def ahp_weights(matrix) -> PriorityVector:
    """Normalised principal eigenvector of a comparison matrix.

    The eigenvector comes from power iteration started at the uniform vector;
    ``lambda_max`` is the mean of ``(A w)_i / w_i`` at convergence.
    """
    m = _as_matrix(matrix)
    w, lam, it = _power_iteration(m.entries)
    w = w / w.sum()
    cr = float(_cr_from_lambda(lam, m.n))
    return PriorityVector(w, lam, cr, np.array(m.entries), it)


def consistency_ratio(matrix) -> float:
    return ahp_weights(matrix).cr


def _batch_lambda(a: np.ndarray) -> np.ndarray:
    """Principal eigenvalue estimates for a stack of matrices (power iteration)."""
    b, n, _ = a.shape
    w = np.full((b, n), 1.0 / n)
    for _ in range(POWER_MAX_ITER):
        nxt = np.einsum("bij,bj->bi", a, w)
        nxt /= nxt.sum(axis=1, keepdims=True)
        delta = np.max(np.abs(nxt - w))
        w = nxt
        if delta < POWER_TOL:
            break
    return np.mean(np.einsum("bij,bj->bi", a, w) / w, axis=1)


def random_ahp(n: int, seed: int | None = None) -> PriorityVector:
    """Weights from a random Saaty-scale comparison matrix with CR < 0.1.

    Upper-triangle judgments are drawn uniformly from the 17-value Saaty
    scale and mirrored as reciprocals; draws are rejected until one passes
    the consistency threshold. Draws are screened in batches but accepted in
    draw order, so a seed always yields the same result.
    """
    n = int(n)
    if not 2 <= n <= MAX_CRITERIA:
        raise ValueError(f"random_ahp supports 2..{MAX_CRITERIA} criteria, got {n}")
    rng = np.random.default_rng(seed)
    scale = np.asarray(SAATY_SCALE)
    iu = np.triu_indices(n, 1)
    draws = 0
    batch = 64
    while draws < RANDOM_AHP_MAX_DRAWS:
        size = min(batch, RANDOM_AHP_MAX_DRAWS - draws)
        picks = scale[rng.integers(0, len(scale), size=(size, len(iu[0])))]
        a = np.ones((size, n, n))
        a[:, iu[0], iu[1]] = picks
        a[:, iu[1], iu[0]] = 1.0 / picks
        cr = _cr_from_lambda(_batch_lambda(a), n)
        ok = np.flatnonzero(cr < CR_THRESHOLD)
        for j in ok:
            # confirm with the single-matrix solver; batch screening is only a filter
            pv = ahp_weights(a[j])
            if pv.cr < CR_THRESHOLD:
                return pv
        draws += size
        batch = min(batch * 2, 4096)
    raise RuntimeError(
        f"no consistent {n}x{n} matrix in {RANDOM_AHP_MAX_DRAWS} draws; use fewer criteria"
    )


class WeightedOverlay(TransformerMixin, BaseEstimator):
    """Combine suitability columns with fixed weights or AHP-derived weights.

    Exactly one of ``weights`` or ``comparison_matrix`` is given. ``fit``
    resolves ``weights_`` (and ``priority_`` for AHP); ``transform`` maps an
    (n, k) array of suitability scores to a single column.
    """

    def __init__(self, weights=None, comparison_matrix=None, normalize=False):
        self.weights = weights
        self.comparison_matrix = comparison_matrix
        self.normalize = normalize

    def fit(self, X=None, y=None):
        if (self.weights is None) == (self.comparison_matrix is None):
            raise ValueError("give exactly one of weights or comparison_matrix")
        if self.comparison_matrix is not None:
            self.priority_ = ahp_weights(self.comparison_matrix)
            self.weights_ = self.priority_.weights
        else:
            w = np.asarray(self.weights, dtype=float)
            self.weights_ = w / w.sum() if self.normalize else w
        self.n_features_in_ = len(self.weights_)
        return self

    def transform(self, X):
        check_is_fitted(self, "weights_")
        X = check_2d(X, allow_nan=True)
        if X.shape[1] != self.n_features_in_:
            raise ValueError(f"expected {self.n_features_in_} columns, got {X.shape[1]}")
        return weighted_sum(list(X.T), self.weights_).reshape(-1, 1)
