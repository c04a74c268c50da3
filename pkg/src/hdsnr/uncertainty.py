"""Variances of the estimators and plug-in normal confidence intervals.

``psi`` quantities are per-sqrt(n) scales: the standard error of an estimate
is ``psi / sqrt(n)``.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from statistics import NormalDist

import numpy as np

from .errors import DomainError, SnrUndefinedError
from .estimators import EstimatorKind, PointEstimates, identity_coefficients
from .suffstats import SufficientStats

OLS_MAX_RATIO = 0.95


class Target(str, enum.Enum):
    SIGMA2 = "sigma2"
    TAU2 = "tau2"
    SNR = "snr"


class CIMethod(str, enum.Enum):
    IDENTITY_PSI = "identity_psi"
    SPECTRAL_PSI = "spectral_psi"
    OLS_ASYMPTOTIC = "ols_asymptotic"


@dataclass(frozen=True)
class AsymptoticVariances:
    psi1_sq: float
    psi2_sq: float
    psi0_sq: float | None  # None when the SNR variance is undefined (sigma2 <= 0)

    def se(self, target: Target, n: int) -> float | None:
        v = {Target.SIGMA2: self.psi1_sq, Target.TAU2: self.psi2_sq, Target.SNR: self.psi0_sq}[Target(target)]
        return None if v is None else math.sqrt(v / n)


@dataclass(frozen=True)
class ExactCovariance:
    var_sigma2: float
    var_tau2: float
    cov_sigma2_tau2: float

    def matrix(self) -> np.ndarray:
        return np.array([[self.var_sigma2, self.cov_sigma2_tau2],
                         [self.cov_sigma2_tau2, self.var_tau2]])


@dataclass(frozen=True)
class ConfidenceInterval:
    lower: float
    upper: float
    level: float
    method: CIMethod
    se: float

    def covers(self, value: float) -> bool:
        return self.lower <= value <= self.upper


def psi_identity(sigma2: float, tau2: float, n: int, d: int, with_snr: bool = True) -> AsymptoticVariances:
    if sigma2 < 0 or tau2 < 0:
        raise DomainError("sigma2 and tau2 must be non-negative")
    r = d / n
    s, t = sigma2, tau2
    tot = s + t
    psi1 = 2 * (r * tot**2 + s**2 + t**2)
    psi2 = 2 * ((1 + r) * tot**2 - s**2 + 3 * t**2)
    psi0 = None
    if with_snr:
        if s <= 0:
            raise DomainError("the SNR variance needs sigma2 > 0")
        psi0 = 2 / s**4 * ((1 + r) * tot**4 - s**2 * tot**2)
    return AsymptoticVariances(psi1, psi2, psi0)


def psi_spectral(sigma2: float, tau2: float, n: int, d: int, m1: float, m2: float, m3: float,
                 with_snr: bool = True) -> AsymptoticVariances:
    """Asymptotic variances of the spectral estimators; equal to ``psi_identity`` when m1 = m2 = m3 = 1."""
    if m2 <= 0:
        raise DomainError("m2 must be positive")
    if sigma2 < 0 or tau2 < 0:
        raise DomainError("sigma2 and tau2 must be non-negative")
    s, t = sigma2, tau2
    tot = s + t
    a = d * m1**2 / (n * m2)
    c = m1 * m3 / m2**2
    psi1 = 2 * ((a + c - 1) * tot**2 + (2 - c) * s**2 + c * t**2)
    psi2 = 2 * ((a + c) * tot**2 - c * s**2 + (2 + c) * t**2)
    psi0 = None
    if with_snr:
        if s <= 0:
            raise DomainError("the SNR variance needs sigma2 > 0")
        psi0 = 2 / s**4 * ((a + c) * tot**4 - c * s**2 * tot**2 - (1 - c) * t**2 * tot**2)
    return AsymptoticVariances(psi1, psi2, psi0)


def ols_asymptotic(sigma2: float, tau2: float, n: int, d: int) -> tuple[float, float, float]:
    """Large-sample ``(Var, Var, Cov)`` of the OLS-based sigma^2 and tau^2 estimators for d/n -> rho < 1."""
    rho = d / n
    if rho >= 1:
        raise DomainError("OLS asymptotics need d < n")
    s, t = sigma2, tau2
    var_s = 2 * s**2 / (n * (1 - rho))
    var_t = 2 / n * ((s + t) ** 2 + (rho / (1 - rho) - 1) * s**2)
    cov = -2 * rho * s**2 / (n * (1 - rho))
    return var_s, var_t, cov


def exact_covariance_T(sigma2: float, tau2: float, n: int, d: int) -> np.ndarray:
    """Exact covariance matrix of ``(||y||^2/n, ||X'y||^2/n^2)`` for Gaussian data with Sigma = I."""
    s, t = sigma2, tau2
    r = d / n
    v1 = 2 / n * (s + t) ** 2
    v2 = 2 / n * (
        (r**2 + r + 2 * d / n**2) * s**2
        + (2 * r**2 + 6 * r + 2 + 10 * d / n**2 + 10 / n + 12 / n**2) * s * t
        + (r**2 + 5 * r + 4 + 8 * d / n**2 + 15 / n + 15 / n**2) * t**2
    )
    c = 2 / n * (r * s**2 + (2 * r + 2 + 3 / n) * s * t + (r + 2 + 3 / n) * t**2)
    return np.array([[v1, c], [c, v2]])


def exact_covariance_identity(sigma2: float, tau2: float, n: int, d: int) -> ExactCovariance:
    """Exact finite-sample (co)variances of the identity-case estimators."""
    s, t = sigma2, tau2
    r = d / n
    k = 2 * n / (n + 1) ** 2
    q = 2 * d / n**2
    var_s = k * ((r + 1 + q + 2 / n + 1 / n**2) * s**2
                 + (2 * r + 2 * q + 4 / n + 8 / n**2) * s * t
                 + (r + 1 + q + 7 / n + 10 / n**2) * t**2)
    var_t = k * ((r + q) * s**2
                 + (2 * r + 2 + 2 * q + 10 / n + 12 / n**2) * s * t
                 + (r + 4 + q + 15 / n + 15 / n**2) * t**2)
    cov = -k * ((r + q) * s**2
                + (2 * r + 2 * q + 5 / n + 9 / n**2) * s * t
                + (r + 2 + q + 10 / n + 12 / n**2) * t**2)
    return ExactCovariance(var_s, var_t, cov)


def sandwich_covariance(sigma2: float, tau2: float, n: int, d: int) -> np.ndarray:
    """``A Cov(T) A'``: the estimator covariance rebuilt from the covariance of ``T``."""
    A = identity_coefficients(n, d)
    return A @ exact_covariance_T(sigma2, tau2, n, d) @ A.T


def normal_quantile(p: float) -> float:
    # stdlib NormalDist.inv_cdf implements Wichura's AS241 (relative error ~1e-16)
    return NormalDist().inv_cdf(p)


def _se(est: PointEstimates, stats: SufficientStats, target: Target, moments) -> tuple[float, CIMethod]:
    n, d = stats.n, stats.d
    s = max(est.sigma2_hat, 0.0)
    t = max(est.tau2_hat, 0.0)
    snr = target == Target.SNR
    if est.kind == EstimatorKind.OLS:
        if d / n >= OLS_MAX_RATIO:
            raise DomainError(f"OLS asymptotic intervals are only offered for d/n < {OLS_MAX_RATIO}")
        vs, vt, c = ols_asymptotic(s, t, n, d)
        if target == Target.SIGMA2:
            var = vs
        elif target == Target.TAU2:
            var = vt
        else:
            # delta method for tau2 / sigma2
            g = np.array([-t / s**2, 1 / s])
            var = float(g @ np.array([[vs, c], [c, vt]]) @ g)
        return math.sqrt(max(var, 0.0)), CIMethod.OLS_ASYMPTOTIC
    if est.kind == EstimatorKind.SPECTRAL:
        if moments is None:
            m1, m2 = stats.m1_hat, stats.m2_hat
            m3 = m2**2 / m1  # makes m1*m3/m2^2 = 1, its value for Sigma proportional to I
        else:
            m1, m2, m3 = moments
        av = psi_spectral(s, t, n, d, m1, m2, m3, with_snr=snr)
        return av.se(target, n), CIMethod.SPECTRAL_PSI
    av = psi_identity(s, t, n, d, with_snr=snr)
    return av.se(target, n), CIMethod.IDENTITY_PSI


def confidence_interval(estimates: PointEstimates, stats: SufficientStats | None = None,
                        target: Target | str = Target.SIGMA2, level: float = 0.95,
                        moments: tuple[float, float, float] | None = None) -> ConfidenceInterval:
    """Plug-in normal interval ``estimate +- z * psi_hat / sqrt(n)``.

    Negative point estimates are clamped at zero inside ``psi_hat`` only.
    ``moments = (m1, m2, m3)`` overrides the spectral moments used for the
    spectral estimator; without it ``m1_hat, m2_hat`` are plugged in and ``m3``
    is set to ``m2^2 / m1``.
    """
    target = Target(target)
    stats = estimates.stats if stats is None else stats
    if not 0 < level < 1:
        raise DomainError("level must lie in (0, 1)")
    if target == Target.SNR:
        if estimates.snr_hat is None:
            raise SnrUndefinedError("SNR estimate is undefined (sigma2_hat below guard)")
        point = estimates.snr_hat
    else:
        point = estimates.sigma2_hat if target == Target.SIGMA2 else estimates.tau2_hat
    se, method = _se(estimates, stats, target, moments)
    half = normal_quantile((1 + level) / 2) * se
    return ConfidenceInterval(point - half, point + half, level, method, se)
