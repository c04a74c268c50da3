"""Method-of-moments estimators of the residual variance, signal strength and SNR.

All estimators except OLS are linear combinations ``a1 * t1 + a2 * t2`` of the
two statistics in :class:`~hdsnr.suffstats.SufficientStats`; the coefficient
rows for sigma^2 and tau^2 sum to ``(1, 0)``, so ``sigma2_hat + tau2_hat == t1``.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateSpectrumError, RegimeError, SingularDesignError
from .model import AR1, AR1Estimated, CovarianceSpec, RegressionSample, estimate_ar1_alpha, whitening_root
from .suffstats import SufficientStats, compute_stats, whitened_stats

SNR_GUARD_RTOL = 1e-8
OLS_MAX_GRAM_COND = 1e12
M2_FLOOR = 1e-12


class EstimatorKind(str, enum.Enum):
    IDENTITY = "identity"   # Sigma = I
    WHITENED = "whitened"   # X replaced by X Sigma^{-1/2}
    SPECTRAL = "spectral"   # unknown Sigma, corrected with m1_hat, m2_hat
    OLS = "ols"             # residual sum of squares, d < n only


@dataclass(frozen=True)
class PointEstimates:
    sigma2_hat: float
    tau2_hat: float
    snr_hat: float | None
    snr_raw: float | None
    kind: EstimatorKind
    negative_flag: bool
    stats: SufficientStats
    warnings: tuple[str, ...] = ()


def _finish(sigma2, tau2, kind, stats, warnings=()) -> PointEstimates:
    guard = SNR_GUARD_RTOL * stats.t1
    snr_raw = tau2 / sigma2 if sigma2 != 0 else None
    return PointEstimates(
        sigma2_hat=float(sigma2),
        tau2_hat=float(tau2),
        snr_hat=snr_raw if sigma2 > guard else None,
        snr_raw=snr_raw,
        kind=kind,
        negative_flag=bool(sigma2 < 0 or tau2 < 0),
        stats=stats,
        warnings=tuple(warnings),
    )


def identity_coefficients(n: int, d: int) -> np.ndarray:
    """2 x 2 matrix mapping ``(t1, t2)`` to the unbiased ``(sigma2, tau2)`` when Sigma = I."""
    return np.array([[(d + n + 1) / (n + 1), -n / (n + 1)],
                     [-d / (n + 1), n / (n + 1)]])


def estimate_identity(stats: SufficientStats, kind: EstimatorKind = EstimatorKind.IDENTITY) -> PointEstimates:
    n, d = stats.n, stats.d
    sigma2 = (d + n + 1) / (n + 1) * stats.t1 - n / (n + 1) * stats.t2
    tau2 = -d / (n + 1) * stats.t1 + n / (n + 1) * stats.t2
    return _finish(sigma2, tau2, kind, stats)


def resolve_covariance(sample: RegressionSample, spec: CovarianceSpec) -> CovarianceSpec:
    if isinstance(spec, AR1Estimated):
        return AR1(estimate_ar1_alpha(sample.X))
    return spec


def estimate_whitened(sample: RegressionSample, spec: CovarianceSpec,
                      root: np.ndarray | None = None) -> PointEstimates:
    """Identity-case estimator applied to ``X Sigma^{-1/2}``.

    With the true covariance this is the oracle estimator.  ``AR1Estimated``
    first fits the AR(1) coefficient from ``X``.  A precomputed ``root`` skips
    the eigendecomposition.
    """
    warnings = []
    if root is None:
        spec = resolve_covariance(sample, spec)
        if isinstance(spec, AR1):
            warnings.append(f"AR(1) coefficient used for whitening: {spec.alpha:.6g}")
        root = whitening_root(spec, sample.d)
    stats = whitened_stats(sample, root)
    est = estimate_identity(stats, kind=EstimatorKind.WHITENED)
    if warnings:
        est = _finish(est.sigma2_hat, est.tau2_hat, est.kind, stats, warnings)
    return est


def spectral_regime_warnings(n: int, d: int) -> list[str]:
    out = []
    if abs(n - d) <= 9:
        out.append(f"|n - d| = {abs(n - d)} <= 9: spectral estimator may have unbounded variance")
    if 0.9 <= d / n <= 1.1:
        out.append(f"d/n = {d / n:.3g} is within [0.9, 1.1]: spectral estimator may be unstable")
    return out


def estimate_spectral(stats: SufficientStats) -> PointEstimates:
    """Estimator for unknown Sigma that corrects the identity-case coefficients with m1_hat, m2_hat."""
    n, d, m1, m2 = stats.n, stats.d, stats.m1_hat, stats.m2_hat
    if abs(m2) < M2_FLOOR:
        raise DegenerateSpectrumError(f"m2_hat = {m2:.3g} is too close to zero")
    sigma2 = (1 + d * m1**2 / ((n + 1) * m2)) * stats.t1 - n * m1 / ((n + 1) * m2) * stats.t2
    tau2 = stats.t1 - sigma2
    return _finish(sigma2, tau2, EstimatorKind.SPECTRAL, stats, spectral_regime_warnings(n, d))


def estimate_ols(sample: RegressionSample) -> PointEstimates:
    """Residual-variance estimator from the least squares fit (requires d < n)."""
    n, d = sample.n, sample.d
    if d >= n:
        raise RegimeError("OLS estimator requires d < n")
    Q, R = np.linalg.qr(sample.X)
    sv = np.linalg.svd(R, compute_uv=False)
    if sv[-1] == 0 or (sv[0] / sv[-1]) ** 2 >= OLS_MAX_GRAM_COND:
        raise SingularDesignError("X'X is singular or too ill-conditioned for OLS")
    resid = sample.y - Q @ (Q.T @ sample.y)
    stats = compute_stats(sample)
    sigma2 = float(resid @ resid) / (n - d)
    return _finish(sigma2, stats.t1 - sigma2, EstimatorKind.OLS, stats)
