"""Replicated simulation studies with summaries, coverage and normality diagnostics."""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Callable

import numpy as np
from scipy import stats as sps

from .errors import DomainError, HDSNRError
from .estimators import (PointEstimates, estimate_identity, estimate_ols, estimate_spectral,
                         estimate_whitened)
from .model import (AR1Estimated, BetaPattern, CovarianceSpec, DesignDistribution, Gaussian, Identity,
                    ModelParams, RegressionSample, covariance_sqrt, design_covariance, generate_beta,
                    simulate_sample, substream, whitening_root)
from .suffstats import compute_stats
from .uncertainty import Target, confidence_interval, ols_asymptotic, psi_identity, psi_spectral
from .wishart import MomentSet, population_moments

# harness estimator labels; "oracle" whitens with the true Sigma, "ar1" with a fitted AR(1)
ESTIMATORS = ("identity", "oracle", "ar1", "spectral", "ols")
TARGETS = (Target.SIGMA2, Target.TAU2, Target.SNR)

# substream keys under master_seed
_REPLICATE = 0
_EXPERIMENT = 1


@dataclass(frozen=True)
class SimulationConfig:
    n: int
    d: int
    sigma2: float
    design: DesignDistribution
    beta_pattern: BetaPattern
    estimators: tuple[str, ...] = ("identity", "spectral")
    replicates: int = 500
    master_seed: int = 0
    confidence_level: float = 0.95

    def __post_init__(self):
        if self.replicates < 1:
            raise DomainError("replicates must be >= 1")
        if self.n < 1 or self.d < 1:
            raise DomainError("n and d must be >= 1")
        if self.sigma2 < 0:
            raise DomainError("sigma2 must be non-negative")
        bad = [e for e in self.estimators if e not in ESTIMATORS]
        if bad:
            raise DomainError(f"unknown estimators {bad}; choose from {ESTIMATORS}")
        if not 0 < self.confidence_level < 1:
            raise DomainError("confidence_level must lie in (0, 1)")


@dataclass
class TargetSummary:
    count: int
    mean: float | None
    sd: float | None
    predicted_se: float | None
    negative_count: int
    coverage_rate: float | None
    ks_statistic: float | None


@dataclass
class SimulationSummary:
    truth: dict
    delta1: float
    delta2: float
    spectral_bias: float | None
    estimators: dict[str, dict[str, TargetSummary]] = field(default_factory=dict)
    errors: dict[str, int] = field(default_factory=dict)

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class ExperimentResult:
    config: SimulationConfig
    beta: np.ndarray
    moments: MomentSet
    rows: list[dict]
    summary: SimulationSummary


# --------------------------------------------------------------------------
# Diagnostics
# --------------------------------------------------------------------------

def condition_b_diagnostics(beta: np.ndarray, spec: CovarianceSpec, n: int) -> tuple[float, float]:
    """``sqrt(n) |beta' Sigma^k beta - ||beta||^2 tr(Sigma^k)/d|`` for k = 1, 2."""
    ms = population_moments(beta, spec, up_to=2)
    t0 = ms.tau_sq[0]
    return tuple(float(math.sqrt(n) * abs(ms.tau_sq[k] - t0 * ms.m[k])) for k in (1, 2))


def spectral_bias_prediction(moments: MomentSet) -> float:
    """Approximate bias ``tau_1^2 - (m1/m2) tau_2^2`` of the spectral sigma^2 estimator."""
    if not moments.m2 > 0:
        raise DomainError("m2 must be positive")
    return float(moments.tau_sq[1] - moments.m1 / moments.m2 * moments.tau_sq[2])


def normality_check(standardized) -> float:
    """Kolmogorov-Smirnov distance between the sample and N(0, 1)."""
    x = np.asarray(standardized, dtype=float).ravel()
    if x.size == 0:
        raise DomainError("normality check needs at least one value")
    return float(sps.kstest(x, "norm").statistic)


def ks_critical_value(R: int, alpha: float = 0.01) -> float:
    """Asymptotic one-sample KS critical value (1.63/sqrt(R) at the 1% level)."""
    return float(sps.kstwobign.isf(alpha) / math.sqrt(R))


# --------------------------------------------------------------------------
# Runner
# --------------------------------------------------------------------------

class _Setup:
    """Per-experiment quantities shared by all replicates."""

    def __init__(self, cfg: SimulationConfig):
        self.cfg = cfg
        self.cov = design_covariance(cfg.design)
        self.beta = generate_beta(cfg.beta_pattern, cfg.d, self.cov, substream(cfg.master_seed, _EXPERIMENT, 0))
        self.params = ModelParams(self.beta, cfg.sigma2, self.cov)
        self.moments = population_moments(self.beta, self.cov, up_to=3)
        self.tau2 = float(self.moments.tau_sq[1])
        self.snr = self.tau2 / cfg.sigma2 if cfg.sigma2 > 0 else None
        gaussian_cov = isinstance(cfg.design, Gaussian) and not isinstance(self.cov, Identity)
        self.sqrt_cov = covariance_sqrt(self.cov, cfg.d) if gaussian_cov else None
        self.oracle_root = whitening_root(self.cov, cfg.d) if "oracle" in cfg.estimators else None

    def truth(self, target: Target):
        return {Target.SIGMA2: self.cfg.sigma2, Target.TAU2: self.tau2, Target.SNR: self.snr}[target]

    def estimate(self, label: str, sample: RegressionSample) -> PointEstimates:
        if label == "identity":
            return estimate_identity(compute_stats(sample))
        if label == "oracle":
            return estimate_whitened(sample, self.cov, root=self.oracle_root)
        if label == "ar1":
            return estimate_whitened(sample, AR1Estimated())
        if label == "spectral":
            return estimate_spectral(compute_stats(sample))
        return estimate_ols(sample)

    def predicted_se(self, label: str, target: Target) -> float | None:
        """Theoretical standard error at the true parameters, where theory provides one."""
        cfg = self.cfg
        n, d, s, t = cfg.n, cfg.d, cfg.sigma2, self.tau2
        snr = target == Target.SNR
        if snr and s <= 0:
            return None
        if label == "ols":
            if d >= n:
                return None
            vs, vt, c = ols_asymptotic(s, t, n, d)
            if target == Target.SIGMA2:
                return math.sqrt(vs)
            if target == Target.TAU2:
                return math.sqrt(vt)
            g = np.array([-t / s**2, 1 / s])
            return math.sqrt(float(g @ np.array([[vs, c], [c, vt]]) @ g))
        if label == "spectral":
            ms = self.moments
            return psi_spectral(s, t, n, d, ms.m1, ms.m2, ms.m3, with_snr=snr).se(target, n)
        if label == "identity" and not isinstance(self.cov, Identity):
            return None
        return psi_identity(s, t, n, d, with_snr=snr).se(target, n)


_NAN = float("nan")


def _row(setup: _Setup, r: int, label: str, sample: RegressionSample) -> dict:
    row = {"replicate": r, "estimator": label}
    try:
        est = setup.estimate(label, sample)
    except HDSNRError as exc:
        row.update({"sigma2": _NAN, "tau2": _NAN, "snr": None, "snr_raw": None, "error": str(exc)})
        for tgt in TARGETS:
            row.update({f"ci_{tgt.value}_lo": None, f"ci_{tgt.value}_hi": None, f"covered_{tgt.value}": None})
        return row
    row.update({"sigma2": est.sigma2_hat, "tau2": est.tau2_hat, "snr": est.snr_hat,
                "snr_raw": est.snr_raw, "error": ""})
    for tgt in TARGETS:
        lo = hi = covered = None
        truth = setup.truth(tgt)
        try:
            ci = confidence_interval(est, target=tgt, level=setup.cfg.confidence_level)
            lo, hi = ci.lower, ci.upper
            covered = None if truth is None else ci.covers(truth)
        except HDSNRError:
            pass
        row.update({f"ci_{tgt.value}_lo": lo, f"ci_{tgt.value}_hi": hi, f"covered_{tgt.value}": covered})
    return row


def _replicate(setup: _Setup, r: int, on_sample) -> list[dict]:
    cfg = setup.cfg
    sample = simulate_sample(setup.params, cfg.design, cfg.n,
                             substream(cfg.master_seed, _REPLICATE, r), sqrt_cov=setup.sqrt_cov)
    if on_sample is not None:
        on_sample(r, sample)
    return [_row(setup, r, label, sample) for label in cfg.estimators]


def _summarize(setup: _Setup, rows: list[dict]) -> SimulationSummary:
    cfg = setup.cfg
    d1, d2 = condition_b_diagnostics(setup.beta, setup.cov, cfg.n)
    try:
        bias = spectral_bias_prediction(setup.moments)
    except DomainError:
        bias = None
    out = SimulationSummary(
        truth={"sigma2": cfg.sigma2, "tau2": setup.tau2, "snr": setup.snr,
               "m": setup.moments.m.tolist(), "tau_sq": setup.moments.tau_sq.tolist()},
        delta1=d1, delta2=d2, spectral_bias=bias,
    )
    for label in cfg.estimators:
        mine = [row for row in rows if row["estimator"] == label]
        out.errors[label] = sum(1 for row in mine if row["error"])
        per = {}
        for tgt in TARGETS:
            key = tgt.value
            vals = np.array([row[key] for row in mine if row[key] is not None and not math.isnan(row[key])])
            cov = [row[f"covered_{key}"] for row in mine if row[f"covered_{key}"] is not None]
            pse = setup.predicted_se(label, tgt)
            truth = setup.truth(tgt)
            ks = None
            if pse and truth is not None and vals.size:
                ks = normality_check((vals - truth) / pse)
            per[key] = TargetSummary(
                count=int(vals.size),
                mean=float(vals.mean()) if vals.size else None,
                sd=float(vals.std(ddof=1)) if vals.size > 1 else None,
                predicted_se=pse,
                negative_count=int(np.sum(vals < 0)),
                coverage_rate=float(np.mean(cov)) if cov else None,
                ks_statistic=ks,
            )
        out.estimators[label] = per
    return out


def run_experiment(config: SimulationConfig, threads: int | None = None,
                   on_sample: Callable[[int, RegressionSample], None] | None = None) -> ExperimentResult:
    """Run ``config.replicates`` independent datasets through every requested estimator.

    ``beta`` is drawn once per experiment; each replicate has its own
    substream, so results do not depend on ``threads``.  Rows are ordered by
    replicate, then by estimator.
    """
    setup = _Setup(config)
    work = lambda r: _replicate(setup, r, on_sample)  # noqa: E731
    if threads is not None and threads <= 1:
        chunks = [work(r) for r in range(config.replicates)]
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            chunks = list(pool.map(work, range(config.replicates)))
    rows = [row for chunk in chunks for row in chunk]
    return ExperimentResult(config, setup.beta, setup.moments, rows, _summarize(setup, rows))
