"""Quadratic statistics of ``(y, X)`` from which every estimator is built."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionError
from .model import RegressionSample


@dataclass(frozen=True)
class SufficientStats:
    """``t1 = ||y||^2 / n``, ``t2 = ||X'y||^2 / n^2`` and the spectral moment estimates.

    ``m1_hat`` and ``m2_hat`` estimate ``tr(Sigma)/d`` and ``tr(Sigma^2)/d``.
    ``m2_hat`` is stored unclamped and can be tiny or negative when ``n ~ d``.
    """

    t1: float
    t2: float
    m1_hat: float
    m2_hat: float
    n: int
    d: int


def gram_traces(X: np.ndarray) -> tuple[float, float]:
    """``(tr(X'X), tr((X'X)^2))`` using the Gram matrix on the smaller side."""
    n, d = X.shape
    G = X.T @ X if d <= n else X @ X.T
    return float(np.trace(G)), float(np.sum(G * G))


def _stats(y: np.ndarray, X: np.ndarray) -> SufficientStats:
    n, d = X.shape
    xty = X.T @ y
    tr1, tr2 = gram_traces(X)
    m1 = tr1 / (n * d)
    m2 = (tr2 / n - tr1 * tr1 / n**2) / (d * (n + 1))
    return SufficientStats(
        t1=float(y @ y) / n,
        t2=float(xty @ xty) / n**2,
        m1_hat=m1,
        m2_hat=m2,
        n=n,
        d=d,
    )


def compute_stats(sample: RegressionSample) -> SufficientStats:
    return _stats(sample.y, sample.X)


def whitened_stats(sample: RegressionSample, root: np.ndarray) -> SufficientStats:
    """Statistics of ``(y, X @ root)``; ``t1`` is unaffected by whitening."""
    root = np.asarray(root, dtype=float)
    if root.shape != (sample.d, sample.d):
        raise DimensionError(f"whitening matrix has shape {root.shape}, expected ({sample.d}, {sample.d})")
    return _stats(sample.y, sample.X @ root)
