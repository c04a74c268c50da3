"""Moments of ``W ~ Wishart(n, Sigma)`` (``W = X'X`` with iid ``N(0, Sigma)`` rows).

Three routes to the same numbers:

* ``closed_form_moment``: explicit polynomials in ``n, d, m_k, tau_k^2``;
* ``letac_moment``: the permutation expansion
  ``E prod_i tr(W H_i) = sum_{pi in S_k} 2^{k - m(pi)} n^{m(pi)} r_pi(Sigma)(H_1..H_k)``,
  with ``letac_reconstruct`` expressing each functional through it;
* ``mc_moment_oracle``: brute-force simulation.
"""

from __future__ import annotations

import enum
import itertools
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .errors import ComplexityError, DimensionError, DomainError, SymmetryError
from .model import AR1, CovarianceSpec, Identity, cov_matvec, materialize_covariance

LETAC_MAX_ORDER = 4


@dataclass(frozen=True, eq=False)
class MomentSet:
    """``m[k] = tr(Sigma^k) / d`` and ``tau_sq[k] = beta' Sigma^k beta`` for k = 0..3."""

    m: np.ndarray
    tau_sq: np.ndarray
    d: int

    @property
    def m1(self) -> float:
        return float(self.m[1])

    @property
    def m2(self) -> float:
        return float(self.m[2])

    @property
    def m3(self) -> float:
        return float(self.m[3])


def _ar1_trace_pow2(alpha: float, d: int) -> float:
    k = np.arange(1, d)
    return d + 2.0 * float(np.sum((d - k) * alpha ** (2 * k)))


def _trace_pow3_matvec(spec: CovarianceSpec, d: int, chunk: int = 256) -> float:
    # tr(S^3) = sum_j (S e_j)'(S (S e_j)), a block of columns at a time
    total = 0.0
    for j0 in range(0, d, chunk):
        E = np.zeros((d, min(chunk, d - j0)))
        E[np.arange(j0, j0 + E.shape[1]), np.arange(E.shape[1])] = 1.0
        C = cov_matvec(spec, E)
        total += float(np.sum(C * cov_matvec(spec, C)))
    return total


def population_moments(beta: np.ndarray, spec: CovarianceSpec, up_to: int = 3) -> MomentSet:
    """Exact spectral moments of Sigma and signal moments of beta, up to order ``up_to`` (<= 3).

    Entries above ``up_to`` are NaN.
    """
    beta = np.asarray(beta, dtype=float)
    if beta.ndim != 1:
        raise DimensionError("beta must be a vector")
    if not 0 <= up_to <= 3:
        raise DomainError("population moments are available up to order 3")
    d = beta.shape[0]
    m = np.full(4, np.nan)
    tau = np.full(4, np.nan)
    m[0] = 1.0
    tau[0] = float(beta @ beta)
    v = beta
    for k in range(1, up_to + 1):
        if k % 2 == 1:
            w = cov_matvec(spec, v)
            tau[k] = float(v @ w)
            v = w
        else:
            tau[k] = float(v @ v)
    if isinstance(spec, Identity):
        m[1:up_to + 1] = 1.0
    elif isinstance(spec, AR1):
        if up_to >= 1:
            m[1] = 1.0
        if up_to >= 2:
            m[2] = _ar1_trace_pow2(spec.alpha, d) / d
        if up_to >= 3:
            m[3] = _trace_pow3_matvec(spec, d) / d
    else:
        lam = np.linalg.eigvalsh(materialize_covariance(spec, d))
        for k in range(1, up_to + 1):
            m[k] = float(np.mean(lam**k))
    return MomentSet(m, tau, d)


# --------------------------------------------------------------------------
# Permutation expansion
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class Permutation:
    """A permutation of ``{0..k-1}``; ``mapping[i]`` is the image of ``i``."""

    mapping: tuple[int, ...]

    def __post_init__(self):
        if sorted(self.mapping) != list(range(len(self.mapping))):
            raise ValueError(f"{self.mapping} is not a permutation")

    @cached_property
    def cycles(self) -> tuple[tuple[int, ...], ...]:
        seen = set()
        out = []
        for start in range(len(self.mapping)):
            if start in seen:
                continue
            cyc = [start]
            seen.add(start)
            j = self.mapping[start]
            while j != start:
                cyc.append(j)
                seen.add(j)
                j = self.mapping[j]
            out.append(tuple(cyc))
        return tuple(out)

    @property
    def n_cycles(self) -> int:
        return len(self.cycles)


def symmetric_group(k: int) -> list[Permutation]:
    return [Permutation(p) for p in itertools.permutations(range(k))]


def cycle_product(Sigma: np.ndarray, H: list[np.ndarray], perm: Permutation) -> float:
    """``r_pi(Sigma)(H_1..H_k)``: product over cycles of ``tr(prod_i Sigma H_{c_i})``."""
    out = 1.0
    for cyc in perm.cycles:
        P = Sigma @ H[cyc[0]]
        for i in cyc[1:]:
            P = P @ Sigma @ H[i]
        out *= np.trace(P)
    return float(out)


def letac_moment(Sigma: np.ndarray, H: list[np.ndarray], n: int) -> float:
    """``E{tr(W H_1) ... tr(W H_k)}`` for ``W ~ Wishart(n, Sigma)`` and symmetric ``H_i``, k <= 4."""
    k = len(H)
    if k > LETAC_MAX_ORDER:
        raise ComplexityError(f"permutation expansion is capped at order {LETAC_MAX_ORDER}, got {k}")
    Sigma = np.asarray(Sigma, dtype=float)
    H = [np.asarray(h, dtype=float) for h in H]
    for h in H:
        if h.shape != Sigma.shape:
            raise DimensionError("all H_i must have the shape of Sigma")
        if np.max(np.abs(h - h.T)) > 1e-10:
            raise SymmetryError("H_i must be symmetric")
    return float(sum(2.0 ** (k - p.n_cycles) * float(n) ** p.n_cycles * cycle_product(Sigma, H, p)
                     for p in symmetric_group(k)))


# --------------------------------------------------------------------------
# Closed forms
# --------------------------------------------------------------------------

class MomentId(str, enum.Enum):
    TRW = "trW"                    # E tr(W)
    TRW_SQ_OF_SUM = "trW_sq_of_sum"  # E tr(W)^2
    TRW2 = "trW2"                  # E tr(W^2)
    BWB = "bWb"                    # E b'Wb
    BW2B = "bW2b"                  # E b'W^2 b
    TRW_BWB = "trW_bWb"            # E tr(W) b'Wb
    TRW_BW2B = "trW_bW2b"          # E tr(W) b'W^2 b
    BWB_BW2B = "bWb_bW2b"          # E (b'Wb)(b'W^2 b)
    BW3B = "bW3b"                  # E b'W^3 b
    BW2B_SQ = "bW2b_sq"            # E (b'W^2 b)^2


# (highest m_k, highest tau_k^2) each closed form uses
_REQUIRED_ORDER = {
    MomentId.TRW: (1, 0), MomentId.TRW_SQ_OF_SUM: (2, 0), MomentId.TRW2: (2, 0),
    MomentId.BWB: (0, 1), MomentId.BW2B: (1, 2), MomentId.TRW_BWB: (1, 2),
    MomentId.TRW_BW2B: (2, 3), MomentId.BWB_BW2B: (1, 2), MomentId.BW3B: (2, 3),
    MomentId.BW2B_SQ: (2, 3),
}


def closed_form_moment(which: MomentId | str, moments: MomentSet, n: int) -> float:
    which = MomentId(which)
    mk, tk = _REQUIRED_ORDER[which]
    if np.any(np.isnan(moments.m[:mk + 1])) or np.any(np.isnan(moments.tau_sq[:tk + 1])):
        raise DomainError(f"{which.value} needs m up to order {mk} and tau^2 up to order {tk}")
    d = moments.d
    m1, m2 = moments.m[1], moments.m[2]
    t1, t2, t3 = moments.tau_sq[1], moments.tau_sq[2], moments.tau_sq[3]
    if which == MomentId.TRW:
        v = d * n * m1
    elif which == MomentId.TRW_SQ_OF_SUM:
        v = d**2 * n**2 * m1**2 + 2 * d * n * m2
    elif which == MomentId.TRW2:
        v = d**2 * n * m1**2 + d * n * (n + 1) * m2
    elif which == MomentId.BWB:
        v = n * t1
    elif which == MomentId.BW2B:
        v = d * n * m1 * t1 + n * (n + 1) * t2
    elif which == MomentId.TRW_BWB:
        v = d * n**2 * m1 * t1 + 2 * n * t2
    elif which == MomentId.TRW_BW2B:
        v = (d**2 * n**2 * m1**2 * t1 + d * n * (n**2 + n + 2) * m1 * t2
             + 2 * d * n * m2 * t1 + 4 * n * (n + 1) * t3)
    elif which == MomentId.BWB_BW2B:
        v = d * n * (n + 2) * m1 * t1**2 + n * (n + 2) * (n + 3) * t1 * t2
    elif which == MomentId.BW3B:
        v = (d**2 * n * m1**2 * t1 + 2 * d * n * (n + 1) * m1 * t2
             + d * n * (n + 1) * m2 * t1 + n * (n**2 + 3 * n + 4) * t3)
    else:
        v = (d**2 * n * (n + 2) * m1**2 * t1**2 + 2 * d * n * (n + 2) * (n + 3) * m1 * t1 * t2
             + 2 * d * n * (n + 2) * m2 * t1**2 + 4 * n * (n + 2) * (n + 3) * t1 * t3
             + n * (n + 1) * (n + 2) * (n + 3) * t2**2)
    return float(v)


# --------------------------------------------------------------------------
# Reconstruction through the permutation expansion
# --------------------------------------------------------------------------

def _basis(beta: np.ndarray) -> np.ndarray:
    """Orthonormal basis (columns) whose first vector is ``beta / ||beta||``."""
    d = beta.shape[0]
    Q, _ = np.linalg.qr(np.column_stack([beta, np.eye(d)]))
    Q = Q[:, :d]
    if Q[:, 0] @ beta < 0:
        Q = -Q
    return Q


def letac_reconstruct(which: MomentId | str, beta: np.ndarray, Sigma: np.ndarray, n: int) -> float:
    """Evaluate a moment functional purely through ``letac_moment``.

    With ``u_1 = beta/||beta||`` completed to an orthonormal basis and
    ``H_ij = (u_i u_j' + u_j u_i')/2``, ``u_i' W u_j = tr(W H_ij)``; for
    example ``b'W^2 b = ||beta||^2 sum_j tr(W H_1j)^2``.
    """
    which = MomentId(which)
    beta = np.asarray(beta, dtype=float)
    Sigma = np.asarray(Sigma, dtype=float)
    d = beta.shape[0]
    U = _basis(beta)
    H = [[(np.outer(U[:, i], U[:, j]) + np.outer(U[:, j], U[:, i])) / 2 for j in range(d)] for i in range(d)]
    I = np.eye(d)
    b2 = float(beta @ beta)
    L = lambda *mats: letac_moment(Sigma, list(mats), n)  # noqa: E731
    rng = range(d)
    if which == MomentId.TRW:
        return L(I)
    if which == MomentId.TRW_SQ_OF_SUM:
        return L(I, I)
    if which == MomentId.TRW2:
        return sum(L(H[i][j], H[i][j]) for i in rng for j in rng)
    if which == MomentId.BWB:
        return b2 * L(H[0][0])
    if which == MomentId.BW2B:
        return b2 * sum(L(H[0][j], H[0][j]) for j in rng)
    if which == MomentId.TRW_BWB:
        return b2 * L(I, H[0][0])
    if which == MomentId.TRW_BW2B:
        return b2 * sum(L(I, H[0][j], H[0][j]) for j in rng)
    if which == MomentId.BWB_BW2B:
        return b2**2 * sum(L(H[0][0], H[0][j], H[0][j]) for j in rng)
    if which == MomentId.BW3B:
        return b2 * sum(L(H[0][i], H[i][j], H[j][0]) for i in rng for j in rng)
    return b2**2 * sum(L(H[0][i], H[0][i], H[0][j], H[0][j]) for i in rng for j in rng)


# --------------------------------------------------------------------------
# Monte Carlo oracle
# --------------------------------------------------------------------------

def _functional(which: MomentId, W: np.ndarray, beta: np.ndarray) -> np.ndarray:
    Wb = W @ beta                               # (B, d)
    bWb = Wb @ beta
    bW2b = np.einsum("bi,bi->b", Wb, Wb)
    trW = np.trace(W, axis1=1, axis2=2)
    if which == MomentId.TRW:
        return trW
    if which == MomentId.TRW_SQ_OF_SUM:
        return trW**2
    if which == MomentId.TRW2:
        return np.einsum("bij,bij->b", W, W)
    if which == MomentId.BWB:
        return bWb
    if which == MomentId.BW2B:
        return bW2b
    if which == MomentId.TRW_BWB:
        return trW * bWb
    if which == MomentId.TRW_BW2B:
        return trW * bW2b
    if which == MomentId.BWB_BW2B:
        return bWb * bW2b
    if which == MomentId.BW3B:
        return np.einsum("bi,bij,bj->b", Wb, W, Wb)
    return bW2b**2


def _merge(acc: tuple[int, float, float], x: np.ndarray) -> tuple[int, float, float]:
    # pairwise (Chan et al.) update of (count, mean, sum of squared deviations)
    n_a, mean_a, m2_a = acc
    n_b = x.size
    mean_b = float(np.mean(x))
    m2_b = float(np.sum((x - mean_b) ** 2))
    n = n_a + n_b
    delta = mean_b - mean_a
    return n, mean_a + delta * n_b / n, m2_a + m2_b + delta**2 * n_a * n_b / n


def mc_moment_oracle(which: MomentId | str, beta: np.ndarray, Sigma: np.ndarray, n: int,
                     draws: int = 100_000, seed=None, batch: int = 20_000) -> tuple[float, float]:
    """Monte Carlo mean and standard error of a moment functional of ``W = X'X``."""
    which = MomentId(which)
    beta = np.asarray(beta, dtype=float)
    Sigma = np.asarray(Sigma, dtype=float)
    d = beta.shape[0]
    if Sigma.shape != (d, d):
        raise DimensionError("Sigma must be d x d with d = len(beta)")
    if draws < 2:
        raise DomainError("need at least two draws")
    lam, V = np.linalg.eigh(Sigma)
    root = (V * np.sqrt(np.clip(lam, 0, None))) @ V.T
    rng = np.random.default_rng(seed)
    acc = (0, 0.0, 0.0)
    done = 0
    while done < draws:
        b = min(batch, draws - done)
        X = rng.standard_normal((b, n, d)) @ root
        W = np.einsum("bki,bkj->bij", X, X)
        acc = _merge(acc, _functional(which, W, beta))
        done += b
    count, mean, m2 = acc
    return mean, float(np.sqrt(m2 / (count - 1) / count))
