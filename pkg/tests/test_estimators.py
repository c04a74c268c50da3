import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from hdsnr.errors import CovarianceError, DegenerateSpectrumError, RegimeError, SingularDesignError
from hdsnr.estimators import (SNR_GUARD_RTOL, EstimatorKind, estimate_identity, estimate_ols, estimate_spectral,
                              estimate_whitened, identity_coefficients, spectral_regime_warnings)
from hdsnr.model import (AR1, AR1Estimated, Gaussian, GaussianIsotropic, HalfUniformHalfNormal, Identity, Known,
                         ModelParams, RegressionSample, generate_beta, simulate_sample, substream)
from hdsnr.suffstats import SufficientStats, compute_stats

from conftest import isotropic_sample


def stats(t1, t2, n, d, m1=1.0, m2=1.0):
    return SufficientStats(t1=t1, t2=t2, m1_hat=m1, m2_hat=m2, n=n, d=d)


def mc_means(estimate, n, d, R, seed, sigma2=1.0, tau2=1.0):
    v = np.array([[e.sigma2_hat, e.tau2_hat] for e in
                  (estimate(isotropic_sample(n, d, sigma2, tau2, seed=substream(seed, r))) for r in range(R))])
    return v.mean(axis=0), v.std(axis=0, ddof=1) / np.sqrt(R)


class TestIdentity:
    def test_zero(self):
        e = estimate_identity(stats(0.0, 0.0, 5, 5))
        assert (e.sigma2_hat, e.tau2_hat) == (0.0, 0.0)
        assert e.snr_hat is None

    def test_hand_arithmetic(self):
        e = estimate_identity(stats(3.0, 1.0, 1, 1))
        assert e.sigma2_hat == pytest.approx(4.0)
        assert e.tau2_hat == pytest.approx(-1.0)
        assert e.negative_flag

    def test_coefficient_matrix(self):
        A = identity_coefficients(4, 6)
        np.testing.assert_allclose(A, [[11 / 5, -4 / 5], [-6 / 5, 4 / 5]])
        e = estimate_identity(stats(2.0, 3.0, 4, 6))
        np.testing.assert_allclose([e.sigma2_hat, e.tau2_hat], A @ [2.0, 3.0])

    @settings(max_examples=100, deadline=None)
    @given(t1=st.floats(0, 1e3), t2=st.floats(0, 1e3), n=st.integers(1, 5000), d=st.integers(1, 5000))
    def test_additivity(self, t1, t2, n, d):
        e = estimate_identity(stats(t1, t2, n, d))
        assert e.sigma2_hat + e.tau2_hat == pytest.approx(t1, rel=1e-12, abs=1e-9)

    @settings(max_examples=100, deadline=None)
    @given(t1=st.floats(1e-3, 1e3), t2=st.floats(0, 1e3), n=st.integers(1, 500), d=st.integers(1, 500))
    def test_snr_guard(self, t1, t2, n, d):
        e = estimate_identity(stats(t1, t2, n, d))
        assert (e.snr_hat is not None) == (e.sigma2_hat > SNR_GUARD_RTOL * t1)
        if e.snr_hat is not None:
            assert e.snr_hat == pytest.approx(e.tau2_hat / e.sigma2_hat)

    @pytest.mark.parametrize("n,d", [(100, 50), (100, 200)])
    def test_unbiased(self, n, d):
        mean, se = mc_means(lambda s: estimate_identity(compute_stats(s)), n, d, 2000, seed=n + d)
        assert np.all(np.abs(mean - 1.0) < 3 * se)


class TestWhitened:
    def test_identity_spec_matches(self, rng):
        s = isotropic_sample(30, 20, seed=1)
        a, b = estimate_whitened(s, Identity()), estimate_identity(compute_stats(s))
        assert (a.sigma2_hat, a.tau2_hat) == (b.sigma2_hat, b.tau2_hat)
        assert a.kind == EstimatorKind.WHITENED

    def test_scaled_identity(self):
        c, n, d, R = 2.5, 60, 40, 1500
        cov = Known(c * np.eye(d))
        beta = generate_beta(HalfUniformHalfNormal(0.4), d, seed=0)  # beta' Sigma beta = 1
        p = ModelParams(beta, 1.0, cov)
        v = np.array([[e.sigma2_hat, e.tau2_hat] for e in (
            estimate_whitened(simulate_sample(p, Gaussian(cov), n, substream(3, r)), cov) for r in range(R))])
        se = v.std(axis=0, ddof=1) / np.sqrt(R)
        assert np.all(np.abs(v.mean(axis=0) - [1.0, p.tau2]) < 3 * se)

    def test_ar1_estimated_reports_alpha(self):
        p = ModelParams(np.ones(10) / np.sqrt(10), 1.0, AR1(0.5))
        s = simulate_sample(p, Gaussian(AR1(0.5)), 200, seed=1)
        e = estimate_whitened(s, AR1Estimated())
        assert any("AR(1) coefficient" in w for w in e.warnings)

    def test_singular_known(self):
        s = isotropic_sample(10, 2, seed=0)
        with pytest.raises(CovarianceError):
            estimate_whitened(s, Known(np.zeros((2, 2))))

    def test_whitening_consistency(self):
        # oracle whitening under AR(1) behaves like the isotropic case at the same tau2
        n, d, R = 80, 60, 1500
        beta = generate_beta(HalfUniformHalfNormal(1.0), d, seed=4)
        p = ModelParams(beta, 1.0, AR1(0.6))
        v = np.array([[e.sigma2_hat, e.tau2_hat] for e in (
            estimate_whitened(simulate_sample(p, Gaussian(AR1(0.6)), n, substream(5, r)), AR1(0.6))
            for r in range(R))])
        w, se_w = mc_means(lambda s: estimate_identity(compute_stats(s)), n, d, R, seed=6, tau2=p.tau2)
        se = np.hypot(v.std(axis=0, ddof=1) / np.sqrt(R), se_w)
        assert np.all(np.abs(v.mean(axis=0) - w) < 3 * se)


class TestSpectral:
    def test_reduces_to_identity(self):
        st_ = stats(2.0, 3.5, 40, 70)
        a, b = estimate_spectral(st_), estimate_identity(st_)
        assert a.sigma2_hat == pytest.approx(b.sigma2_hat, rel=1e-14)
        assert a.tau2_hat == pytest.approx(b.tau2_hat, rel=1e-14)

    def test_additive(self):
        e = estimate_spectral(stats(2.0, 3.5, 40, 70, m1=1.3, m2=2.1))
        assert e.sigma2_hat + e.tau2_hat == pytest.approx(2.0, rel=1e-12)

    def test_degenerate(self):
        with pytest.raises(DegenerateSpectrumError):
            estimate_spectral(stats(1.0, 1.0, 10, 20, m2=1e-13))

    def test_regime_warnings(self):
        assert spectral_regime_warnings(100, 50) == []
        assert len(spectral_regime_warnings(100, 105)) == 2
        assert len(spectral_regime_warnings(1000, 950)) == 1
        e = estimate_spectral(stats(1.0, 1.0, 100, 100))
        assert e.warnings

    def test_sample_scaled_unbiased(self):
        from hdsnr.model import sample_scaled
        from hdsnr.simharness import condition_b_diagnostics
        n, d, R = 100, 200, 600
        cov = sample_scaled(d, seed=substream(8, 1, 1))
        beta = generate_beta(HalfUniformHalfNormal(1.0), d, seed=2)
        d1, d2 = condition_b_diagnostics(beta, cov, n)
        assert d1 < 1 and d2 < 2
        p = ModelParams(beta, 1.0, cov)
        v = np.array([estimate_spectral(compute_stats(simulate_sample(p, Gaussian(cov), n, substream(9, r)))).sigma2_hat
                      for r in range(R)])
        assert abs(v.mean() - 1.0) < 3 * v.std(ddof=1) / np.sqrt(R)


class TestOLS:
    def test_exact_fit(self, rng):
        X = rng.standard_normal((10, 3))
        e = estimate_ols(RegressionSample(X @ [1.0, -2.0, 0.5], X))
        assert abs(e.sigma2_hat) < 1e-20 + 1e-12

    def test_regime(self):
        with pytest.raises(RegimeError, match="OLS estimator requires d < n"):
            estimate_ols(RegressionSample(np.ones(4), np.eye(4)))

    def test_singular(self, rng):
        X = rng.standard_normal((10, 3))
        X[:, 2] = X[:, 0]
        with pytest.raises(SingularDesignError):
            estimate_ols(RegressionSample(rng.standard_normal(10), X))

    @settings(max_examples=30, deadline=None)
    @given(n=st.integers(3, 40), seed=st.integers(0, 2**32 - 1))
    def test_linear_combination_form(self, n, seed):
        rng = np.random.default_rng(seed)
        d = int(rng.integers(1, n))
        X = rng.standard_normal((n, d))
        y = rng.standard_normal(n)
        e = estimate_ols(RegressionSample(y, X))
        proj = y @ X @ np.linalg.solve(X.T @ X, X.T @ y)
        expected = n / (n - d) * (y @ y / n) - proj / (n - d)
        assert e.sigma2_hat == pytest.approx(expected, rel=1e-8, abs=1e-12)
        assert e.tau2_hat == pytest.approx(y @ y / n - e.sigma2_hat, rel=1e-8, abs=1e-12)

    def test_unbiased(self):
        mean, se = mc_means(estimate_ols, 100, 50, 1500, seed=21)
        assert abs(mean[0] - 1.0) < 3 * se[0]
