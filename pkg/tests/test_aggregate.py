import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from landsuit.aggregate import (
    SAATY_SCALE,
    ComparisonMatrix,
    ahp_weights,
    consistency_ratio,
    random_ahp,
    weighted_sum,
)
from oracles import eig_oracle

INCONSISTENT = [[1, 7, 1 / 5], [1 / 7, 1, 3], [5, 1 / 3, 1]]


def consistent_matrix(w):
    w = np.asarray(w, dtype=float)
    return np.outer(w, 1.0 / w)


class TestWeightedSum:
    def test_example(self):
        out = weighted_sum([[1, 9], [9, 1]], [0.75, 0.25])
        assert out.tolist() == [3.0, 7.0]

    def test_normalize(self):
        out = weighted_sum([[1, 9], [9, 1]], [3, 1], normalize=True)
        assert out.tolist() == [3.0, 7.0]

    def test_errors(self):
        with pytest.raises(ValueError, match="not 1"):
            weighted_sum([[1], [2]], [0.5, 0.6])
        with pytest.raises(ValueError, match="weights"):
            weighted_sum([[1], [2]], [1.0])
        with pytest.raises(ValueError, match="non-negative"):
            weighted_sum([[1], [2]], [1.5, -0.5])
        with pytest.raises(ValueError, match="length"):
            weighted_sum([[1, 2], [2]], [0.5, 0.5])
        with pytest.raises(ValueError):
            weighted_sum([], [])

    def test_nan_propagates(self):
        out = weighted_sum([[1, np.nan], [3, 4]], [0.5, 0.5])
        assert out[0] == 2 and np.isnan(out[1])

    @settings(max_examples=60, deadline=None)
    @given(st.integers(1, 6), st.integers(1, 30), st.integers(0, 2**31))
    def test_bounds_and_linearity(self, k, n, seed):
        rng = np.random.default_rng(seed)
        cols = rng.uniform(1, 9, (k, n))
        w = rng.dirichlet(np.ones(k))
        out = weighted_sum(cols, w)
        assert np.all(out >= cols.min(axis=0) - 1e-12)
        assert np.all(out <= cols.max(axis=0) + 1e-12)
        other = rng.uniform(1, 9, (k, n))
        np.testing.assert_allclose(weighted_sum(cols + other, w),
                                   out + weighted_sum(other, w), rtol=1e-12)


class TestComparisonMatrix:
    @pytest.mark.parametrize("bad", [
        [[1, 2], [2, 1]],
        [[1, 2, 3], [0.5, 1, 1]],
        [[2, 1], [1, 2]],
        [[1, -1], [-1, 1]],
        [[1]],
        np.ones((16, 16)),
    ])
    def test_rejects(self, bad):
        with pytest.raises(ValueError):
            ComparisonMatrix(bad)

    def test_from_judgments(self):
        m = ComparisonMatrix.from_judgments([7, 1 / 5, 3])
        np.testing.assert_allclose(m.entries, INCONSISTENT)
        with pytest.raises(ValueError, match="Saaty"):
            ComparisonMatrix.from_judgments([7.5])
        with pytest.raises(ValueError, match="triangle"):
            ComparisonMatrix.from_judgments([1, 2])

    def test_immutable(self):
        m = ComparisonMatrix(np.ones((3, 3)))
        with pytest.raises(ValueError):
            m.entries[0, 1] = 2


class TestAhp:
    def test_two_criteria(self):
        pv = ahp_weights([[1, 5], [1 / 5, 1]])
        np.testing.assert_allclose(pv.weights, [5 / 6, 1 / 6], atol=1e-12)
        assert pv.cr == 0.0

    def test_all_ones(self):
        for n in range(2, 10):
            pv = ahp_weights(np.ones((n, n)))
            np.testing.assert_allclose(pv.weights, 1 / n, atol=1e-12)
            assert pv.cr == 0.0

    def test_inconsistent_example(self):
        pv = ahp_weights(INCONSISTENT)
        assert pv.cr > 0.1 and not pv.consistent
        w, lam = eig_oracle(np.array(INCONSISTENT))
        np.testing.assert_allclose(pv.weights, w, atol=1e-9)
        assert pv.lambda_max == pytest.approx(lam, abs=1e-9)
        assert consistency_ratio(INCONSISTENT) == pv.cr

    def test_consistent_recovery(self):
        rng = np.random.default_rng(0)
        for _ in range(200):
            n = int(rng.integers(3, 10))
            w = rng.uniform(0.1, 10, n)
            w /= w.sum()
            pv = ahp_weights(consistent_matrix(w))
            np.testing.assert_allclose(pv.weights, w, atol=1e-6)
            assert pv.cr < 1e-9

    def test_matches_eig_on_random_reciprocal(self):
        rng = np.random.default_rng(1)
        for _ in range(100):
            n = int(rng.integers(3, 8))
            a = np.ones((n, n))
            iu = np.triu_indices(n, 1)
            v = rng.choice(SAATY_SCALE, len(iu[0]))
            a[iu] = v
            a[iu[1], iu[0]] = 1 / v
            pv = ahp_weights(a)
            w, lam = eig_oracle(a)
            np.testing.assert_allclose(pv.weights, w, atol=1e-8)
            assert pv.lambda_max >= n - 1e-9
            assert pv.lambda_max == pytest.approx(lam, abs=1e-8)

    def test_permutation_equivariance(self):
        a = np.array(INCONSISTENT)
        perm = [2, 0, 1]
        pv = ahp_weights(a)
        pp = ahp_weights(a[np.ix_(perm, perm)])
        np.testing.assert_allclose(pp.weights, pv.weights[perm], atol=1e-12)
        assert pp.cr == pytest.approx(pv.cr, abs=1e-12)

    def test_to_dict(self):
        d = ahp_weights(np.ones((2, 2))).to_dict()
        assert set(d) == {"weights", "lambda_max", "cr", "matrix"}


class TestRandomAhp:
    FIXTURE_4_7 = [0.4260158499303454, 0.23060961836818686,
                   0.3025144250975665, 0.04086010660390125]

    def test_fixture(self):
        pv = random_ahp(4, 7)
        assert pv.weights.tolist() == self.FIXTURE_4_7
        assert pv.cr == 0.06452662316390326

    def test_reproducible(self):
        a, b = random_ahp(5, 123), random_ahp(5, 123)
        assert a.weights.tobytes() == b.weights.tobytes()
        assert np.array_equal(a.matrix, b.matrix)

    @pytest.mark.parametrize("n", [3, 4, 5])
    def test_properties(self, n):
        for seed in range(100):
            pv = random_ahp(n, seed)
            assert pv.cr < 0.1
            assert abs(pv.weights.sum() - 1) < 1e-12
            off = pv.matrix[~np.eye(n, dtype=bool)]
            assert all(any(abs(v - s) < 1e-12 for s in SAATY_SCALE) for v in off)
            np.testing.assert_allclose(pv.matrix * pv.matrix.T, 1.0, atol=1e-12)

    def test_range(self):
        for n in (1, 16):
            with pytest.raises(ValueError):
                random_ahp(n, 0)
