import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from hdsnr.errors import DimensionError
from hdsnr.model import Gaussian, Known, ModelParams, RegressionSample, generate_design, simulate_sample, substream
from hdsnr.suffstats import compute_stats, gram_traces, whitened_stats
from hdsnr.wishart import population_moments

from conftest import isotropic_sample


class TestComputeStats:
    def test_zero_response(self, rng):
        s = compute_stats(RegressionSample(np.zeros(6), rng.standard_normal((6, 4))))
        assert s.t1 == 0 and s.t2 == 0

    def test_identity_design(self, rng):
        y = rng.standard_normal(5)
        s = compute_stats(RegressionSample(y, np.eye(5)))
        assert s.t2 == pytest.approx(s.t1 / 5, rel=1e-14)

    def test_orthogonal_design_moments(self):
        n, d = 12, 3
        Q, _ = np.linalg.qr(np.random.default_rng(0).standard_normal((n, d)))
        X = np.sqrt(n) * Q  # X'X / n = I_d
        s = compute_stats(RegressionSample(np.ones(n), X))
        assert s.m1_hat == pytest.approx(1.0, rel=1e-12)
        assert s.m2_hat == pytest.approx((n - d) / (n + 1), rel=1e-12)

    def test_fields(self, rng):
        X = rng.standard_normal((7, 3))
        y = rng.standard_normal(7)
        s = compute_stats(RegressionSample(y, X))
        assert (s.n, s.d) == (7, 3)
        assert s.t1 == pytest.approx(y @ y / 7)
        assert s.t2 == pytest.approx(np.sum((X.T @ y) ** 2) / 49)


class TestGramTraces:
    @settings(max_examples=50, deadline=None)
    @given(n=st.integers(1, 30), d=st.integers(1, 30), seed=st.integers(0, 2**32 - 1))
    def test_both_sides_agree(self, n, d, seed):
        X = np.random.default_rng(seed).standard_normal((n, d))
        a1, a2 = gram_traces(X)
        b1, b2 = gram_traces(X.T)  # transposing swaps which side is used
        np.testing.assert_allclose([a1, a2], [b1, b2], rtol=1e-10)
        XtX = X.T @ X
        np.testing.assert_allclose([a1, a2], [np.trace(XtX), np.trace(XtX @ XtX)], rtol=1e-10)


class TestWhitenedStats:
    def test_identity_root(self, rng):
        sample = RegressionSample(rng.standard_normal(8), rng.standard_normal((8, 4)))
        assert whitened_stats(sample, np.eye(4)) == compute_stats(sample)

    def test_scaled_root(self, rng):
        sample = RegressionSample(rng.standard_normal(8), rng.standard_normal((8, 4)))
        a, b = compute_stats(sample), whitened_stats(sample, 3.0 * np.eye(4))
        assert b.t1 == a.t1
        assert b.t2 == pytest.approx(9 * a.t2, rel=1e-12)

    def test_orthonormal_whitened_rows(self):
        # X R (X R)' = n I and y = sqrt(n) e1 give ||(XR)'y||^2 = n^2, so t2 = 1
        n = 2
        X = np.array([[2.0, 0.0], [0.0, 3.0]])
        R = np.sqrt(n) * np.diag([1 / 2, 1 / 3])
        s = whitened_stats(RegressionSample(np.sqrt(n) * np.array([1.0, 0.0]), X), R)
        assert s.t2 == pytest.approx(1.0, rel=1e-14)

    def test_shape_mismatch(self, rng):
        sample = RegressionSample(rng.standard_normal(8), rng.standard_normal((8, 4)))
        with pytest.raises(DimensionError):
            whitened_stats(sample, np.eye(3))


class TestMonteCarloMoments:
    def test_t1_t2_expectations(self):
        n = d = 50
        R = 2000
        t = np.array([[s.t1, s.t2] for s in (compute_stats(isotropic_sample(n, d, seed=substream(1, r)))
                                             for r in range(R))])
        sigma2 = tau2 = 1.0
        expected = [sigma2 + tau2, (d + n + 1) / n * tau2 + d / n * sigma2]
        se = t.std(axis=0, ddof=1) / np.sqrt(R)
        assert np.all(np.abs(t.mean(axis=0) - expected) < 3 * se)

    def test_spectral_moment_expectations(self):
        # m2_hat carries an exact relative bias of -2/(n(n+1)), visible at n = 8 with this many draws
        d, n, R = 5, 8, 20_000
        S = np.diag([0.5, 1.0, 1.5, 2.0, 3.0]) + 0.2
        ms = population_moments(np.ones(d), Known(S), up_to=2)
        vals = np.array([[st.m1_hat, st.m2_hat] for st in (
            compute_stats(RegressionSample(np.zeros(n), generate_design(Gaussian(Known(S)), n, d, substream(2, r))))
            for r in range(R))])
        se = vals.std(axis=0, ddof=1) / np.sqrt(R)
        expected = [ms.m1, ms.m2 * (1 - 2 / (n * (n + 1)))]
        assert np.all(np.abs(vals.mean(axis=0) - expected) < 3 * se)
