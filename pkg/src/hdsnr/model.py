"""Data containers, covariance structures and seeded simulation designs.

Randomness
----------
Every generator in this package is numpy's ``PCG64`` driven by a
``numpy.random.SeedSequence``.  Anything that accepts a ``seed`` takes an
int, a ``SeedSequence`` or an existing ``Generator``.  Replicate ``r`` of an
experiment seeded with ``master_seed`` draws from
``SeedSequence(master_seed, spawn_key=(0, r))``, so a replicate's data do not
depend on how many replicates run, or in which order.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Union

import numpy as np
from scipy.signal import lfilter

from .errors import CovarianceError, DimensionError, PatternError

SYMMETRY_TOL = 1e-10
SINGULARITY_RTOL = 1e-12
BUMP = np.array([1.0, 2.0, 3.0, 4.0, 3.0, 2.0, 1.0])


# --------------------------------------------------------------------------
# RNG helpers
# --------------------------------------------------------------------------

def substream(master_seed: int, *key: int) -> np.random.Generator:
    """Independent generator for the stream labelled ``key`` under ``master_seed``."""
    ss = np.random.SeedSequence(master_seed, spawn_key=tuple(int(k) for k in key))
    return np.random.Generator(np.random.PCG64(ss))


def _split(seed, k: int) -> list[np.random.Generator]:
    if isinstance(seed, np.random.Generator):
        return seed.spawn(k)
    if not isinstance(seed, np.random.SeedSequence):
        seed = np.random.SeedSequence(seed)
    return [np.random.Generator(np.random.PCG64(s)) for s in seed.spawn(k)]


# --------------------------------------------------------------------------
# Data
# --------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class RegressionSample:
    """Observed data ``(y, X)``; row ``i`` of ``X`` is the predictor ``x_i``."""

    y: np.ndarray
    X: np.ndarray

    def __post_init__(self):
        y = np.asarray(self.y, dtype=float)
        X = np.asarray(self.X, dtype=float)
        if y.ndim != 1:
            raise DimensionError(f"y must be a vector, got shape {y.shape}")
        if X.ndim != 2:
            raise DimensionError(f"X must be a matrix, got shape {X.shape}")
        if X.shape[0] != y.shape[0]:
            raise DimensionError(f"y has length {y.shape[0]} but X has {X.shape[0]} rows")
        if y.shape[0] < 1 or X.shape[1] < 1:
            raise DimensionError("need n >= 1 and d >= 1")
        if not (np.all(np.isfinite(y)) and np.all(np.isfinite(X))):
            raise ValueError("y and X must be finite")
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "X", X)

    @property
    def n(self) -> int:
        return self.X.shape[0]

    @property
    def d(self) -> int:
        return self.X.shape[1]


# --------------------------------------------------------------------------
# Covariance structures
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class Identity:
    pass


@dataclass(frozen=True, eq=False)
class Known:
    """An explicit d x d covariance matrix. Positive definiteness is checked on use."""

    S: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "S", np.asarray(self.S, dtype=float))


@dataclass(frozen=True)
class AR1:
    """Stationary AR(1) correlation, ``sigma_ij = alpha ** |i - j|``."""

    alpha: float

    def __post_init__(self):
        if not abs(self.alpha) < 1:
            raise CovarianceError(f"AR1 requires |alpha| < 1, got {self.alpha}")


@dataclass(frozen=True, eq=False)
class SampleScaled:
    """``Sigma = factor * Z.T @ Z`` for a fixed m x d matrix ``Z``."""

    Z: np.ndarray
    factor: float

    def __post_init__(self):
        object.__setattr__(self, "Z", np.asarray(self.Z, dtype=float))
        if not self.factor > 0:
            raise CovarianceError("factor must be positive")


@dataclass(frozen=True)
class AR1Estimated:
    """AR(1) structure whose coefficient is fitted from the design (see estimate_ar1_alpha)."""


CovarianceSpec = Union[Identity, Known, AR1, SampleScaled, AR1Estimated]


def sample_scaled(d: int, rows: int | None = None, seed=None, factor: float | None = None) -> SampleScaled:
    """Random covariance ``(rows)^-1 Z^T Z`` with ``Z`` a ``rows x d`` standard normal matrix.

    The defaults (``rows = 2d``) give the design used in the first simulation study.
    """
    rows = 2 * d if rows is None else rows
    Z = np.random.default_rng(seed).standard_normal((rows, d))
    return SampleScaled(Z, 1.0 / rows if factor is None else factor)


def _check_dim(spec, d: int) -> None:
    if isinstance(spec, Known) and spec.S.shape != (d, d):
        raise DimensionError(f"known covariance has shape {spec.S.shape}, expected ({d}, {d})")
    if isinstance(spec, SampleScaled) and spec.Z.shape[1] != d:
        raise DimensionError(f"Z has {spec.Z.shape[1]} columns, expected {d}")
    if isinstance(spec, AR1Estimated):
        raise CovarianceError("AR1Estimated must be resolved to AR1 with estimate_ar1_alpha first")


def materialize_covariance(spec: CovarianceSpec, d: int) -> np.ndarray:
    """Dense d x d matrix for ``spec``."""
    _check_dim(spec, d)
    if isinstance(spec, Identity):
        return np.eye(d)
    if isinstance(spec, Known):
        S = spec.S
        if np.max(np.abs(S - S.T)) > SYMMETRY_TOL * max(1.0, np.max(np.abs(S))):
            raise CovarianceError("known covariance is not symmetric")
        return S.copy()
    if isinstance(spec, AR1):
        idx = np.arange(d)
        return spec.alpha ** np.abs(idx[:, None] - idx[None, :])
    if isinstance(spec, SampleScaled):
        return spec.factor * (spec.Z.T @ spec.Z)
    raise TypeError(f"unknown covariance spec {spec!r}")


def cov_matvec(spec: CovarianceSpec, v: np.ndarray) -> np.ndarray:
    """``Sigma @ v`` without forming Sigma when the structure allows it.

    ``v`` may be a vector or a matrix whose columns are multiplied.
    """
    v = np.asarray(v, dtype=float)
    d = v.shape[0]
    _check_dim(spec, d)
    if isinstance(spec, Identity):
        return v.copy()
    if isinstance(spec, AR1):
        a = spec.alpha
        fwd = lfilter([1.0], [1.0, -a], v, axis=0)
        bwd = lfilter([1.0], [1.0, -a], v[::-1], axis=0)[::-1]
        return fwd + bwd - v
    if isinstance(spec, SampleScaled):
        return spec.factor * (spec.Z.T @ (spec.Z @ v))
    return materialize_covariance(spec, d) @ v


def _spd_eigh(spec: CovarianceSpec, d: int) -> tuple[np.ndarray, np.ndarray]:
    S = materialize_covariance(spec, d)
    lam, V = np.linalg.eigh(S)
    top = lam[-1]
    if top <= 0 or lam[0] <= SINGULARITY_RTOL * top:
        raise CovarianceError(
            f"covariance is singular or nearly so (eigenvalues in [{lam[0]:.3g}, {top:.3g}])"
        )
    return lam, V


def covariance_sqrt(spec: CovarianceSpec, d: int) -> np.ndarray:
    """Symmetric square root ``Sigma^{1/2}``."""
    if isinstance(spec, Identity):
        _check_dim(spec, d)
        return np.eye(d)
    lam, V = _spd_eigh(spec, d)
    return (V * np.sqrt(lam)) @ V.T


def whitening_root(spec: CovarianceSpec, d: int) -> np.ndarray:
    """Symmetric inverse square root ``R = Sigma^{-1/2}``, so that ``R.T @ R = Sigma^{-1}``."""
    if isinstance(spec, Identity):
        _check_dim(spec, d)
        return np.eye(d)
    lam, V = _spd_eigh(spec, d)
    return (V / np.sqrt(lam)) @ V.T


def ar1_precision(alpha: float, d: int) -> np.ndarray:
    """Closed-form tridiagonal inverse of the AR(1) correlation matrix."""
    if not abs(alpha) < 1:
        raise CovarianceError(f"AR1 requires |alpha| < 1, got {alpha}")
    P = np.zeros((d, d))
    diag = np.full(d, 1.0 + alpha**2)
    diag[0] = diag[-1] = 1.0
    if d == 1:
        diag[0] = 1.0 - alpha**2
    P[np.diag_indices(d)] = diag
    off = np.arange(d - 1)
    P[off, off + 1] = P[off + 1, off] = -alpha
    return P / (1.0 - alpha**2)


def estimate_ar1_alpha(X: np.ndarray) -> float:
    """Average lag-one cross product of neighbouring columns of ``X``."""
    X = np.asarray(X, dtype=float)
    n, d = X.shape
    if d < 2:
        raise DimensionError("estimating an AR(1) coefficient needs d >= 2")
    return float(np.sum(X[:, 1:] * X[:, :-1]) / (n * (d - 1)))


# --------------------------------------------------------------------------
# Designs, coefficient patterns and parameters
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class GaussianIsotropic:
    pass


@dataclass(frozen=True)
class Gaussian:
    covariance: CovarianceSpec


@dataclass(frozen=True)
class Rademacher:
    pass


DesignDistribution = Union[GaussianIsotropic, Gaussian, Rademacher]


def design_covariance(dist: DesignDistribution) -> CovarianceSpec:
    """Population covariance of a single predictor vector under ``dist``."""
    return dist.covariance if isinstance(dist, Gaussian) else Identity()


def generate_design(dist: DesignDistribution, n: int, d: int, seed=None,
                    sqrt_cov: np.ndarray | None = None) -> np.ndarray:
    """Draw an ``n x d`` design with iid rows.

    ``sqrt_cov`` may carry a precomputed ``covariance_sqrt`` for Gaussian designs
    so repeated draws skip the eigendecomposition.
    """
    if n < 1 or d < 1:
        raise DimensionError("need n >= 1 and d >= 1")
    rng = np.random.default_rng(seed)
    if isinstance(dist, Rademacher):
        return 2.0 * rng.integers(0, 2, size=(n, d)).astype(float) - 1.0
    Z = rng.standard_normal((n, d))
    if isinstance(dist, GaussianIsotropic) or isinstance(dist.covariance, Identity):
        return Z
    root = covariance_sqrt(dist.covariance, d) if sqrt_cov is None else sqrt_cov
    return Z @ root


@dataclass(frozen=True)
class HalfUniformHalfNormal:
    target_norm_sq: float = 1.0


@dataclass(frozen=True)
class BumpSparse:
    bumps: int
    spacing: int
    target_tau1_sq: float


@dataclass(frozen=True)
class BumpDense:
    spacing: int
    target_tau1_sq: float


@dataclass(frozen=True, eq=False)
class Explicit:
    vector: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "vector", np.asarray(self.vector, dtype=float))


BetaPattern = Union[HalfUniformHalfNormal, BumpSparse, BumpDense, Explicit]


def _bump_centers(spacing: int, d: int) -> np.ndarray:
    # 1-based centres spacing, 2*spacing, ..., up to d - spacing
    if spacing < 8:
        raise PatternError(f"bump spacing must be >= 8 so bumps cannot overlap, got {spacing}")
    if d < 2 * spacing:
        raise PatternError(f"d = {d} is too small for bump spacing {spacing}")
    return np.arange(spacing, d - spacing + 1, spacing)


def _place_bumps(centers: np.ndarray, d: int) -> np.ndarray:
    b = np.zeros(d)
    for c in centers:
        b[c - 4:c + 3] = BUMP  # 0-based slice centred at 1-based index c
    return b


def generate_beta(pattern: BetaPattern, d: int, cov: CovarianceSpec = Identity(), seed=None) -> np.ndarray:
    """Coefficient vector of length ``d`` following ``pattern``.

    Bump patterns are rescaled so that ``beta' Sigma beta`` equals the target;
    the half-uniform/half-normal pattern is rescaled on ``||beta||^2``.
    """
    rng = np.random.default_rng(seed)
    if isinstance(pattern, Explicit):
        if pattern.vector.shape != (d,):
            raise DimensionError(f"explicit beta has shape {pattern.vector.shape}, expected ({d},)")
        return pattern.vector.copy()
    if isinstance(pattern, HalfUniformHalfNormal):
        half = d // 2
        raw = np.concatenate([rng.uniform(0.0, 1.0, half), rng.standard_normal(d - half)])
        return raw * np.sqrt(pattern.target_norm_sq / (raw @ raw))
    if isinstance(pattern, BumpSparse):
        centers = _bump_centers(pattern.spacing, d)
        if pattern.bumps < 1 or pattern.bumps > centers.size:
            raise PatternError(f"cannot place {pattern.bumps} bumps on {centers.size} distinct centres")
        # distinct centres: drawing without replacement is the same as redrawing collisions
        raw = _place_bumps(rng.choice(centers, size=pattern.bumps, replace=False), d)
        target = pattern.target_tau1_sq
    elif isinstance(pattern, BumpDense):
        raw = _place_bumps(_bump_centers(pattern.spacing, d), d)
        target = pattern.target_tau1_sq
    else:
        raise TypeError(f"unknown beta pattern {pattern!r}")
    return raw * np.sqrt(target / (raw @ cov_matvec(cov, raw)))


@dataclass(frozen=True, eq=False)
class ModelParams:
    beta: np.ndarray
    sigma2: float
    covariance: CovarianceSpec = field(default_factory=Identity)

    def __post_init__(self):
        beta = np.asarray(self.beta, dtype=float)
        if beta.ndim != 1 or not np.all(np.isfinite(beta)):
            raise ValueError("beta must be a finite vector")
        if not self.sigma2 >= 0:
            raise ValueError("sigma2 must be non-negative")
        object.__setattr__(self, "beta", beta)

    @property
    def tau2(self) -> float:
        """Signal strength ``beta' Sigma beta``."""
        return float(self.beta @ cov_matvec(self.covariance, self.beta))


def simulate_sample(params: ModelParams, dist: DesignDistribution, n: int, seed=None,
                    X: np.ndarray | None = None, sqrt_cov: np.ndarray | None = None) -> RegressionSample:
    """Draw ``y = X beta + eps`` with ``eps ~ N(0, sigma2 I)``.

    ``X`` and ``eps`` come from independent child streams of ``seed``.  Passing
    ``X`` skips the design draw (the noise stream is unchanged).
    """
    d = params.beta.shape[0]
    x_rng, e_rng = _split(seed, 2)
    if X is None:
        X = generate_design(dist, n, d, x_rng, sqrt_cov=sqrt_cov)
    X = np.asarray(X, dtype=float)
    if X.shape != (n, d):
        raise DimensionError(f"design has shape {X.shape}, expected ({n}, {d})")
    eps = np.sqrt(params.sigma2) * e_rng.standard_normal(n)
    return RegressionSample(X @ params.beta + eps, X)
