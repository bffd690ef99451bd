"""Normalizers mapping score vectors onto the probability simplex.

All three operators (sparsemax, softmax, alpha-entmax) take a real score
vector and return nonnegative weights summing to one. Sparsemax is the
Euclidean projection onto the simplex and produces exact zeros for
low-scoring entries, which is what lets the consensus protocol assign a
neighbor literally no influence.
"""

from __future__ import annotations

import numpy as np

__all__ = ["sparsemax", "softmax", "entmax", "project_simplex_oracle"]


def _check_scores(z) -> np.ndarray:
    z = np.asarray(z, dtype=float)
    if z.ndim != 1:
        raise ValueError(f"score vector must be 1-D, got shape {z.shape}")
    if z.size == 0:
        raise ValueError("empty score vector")
    if not np.all(np.isfinite(z)):
        raise ValueError("score vector has non-finite entries")
    return z


def sparsemax(z) -> np.ndarray:
    """Euclidean projection of ``z`` onto the probability simplex.

    Uses the sorted-support closed form: with entries sorted descending,
    the support size is the largest k with 1 + k*z_(k) > sum_{j<=k} z_(j),
    and the threshold is tau = (sum of supported entries - 1) / k. Entries
    at or below tau come out exactly 0.0 (no epsilon flooring).

    The input is shifted by its max first; the projection is invariant to
    constant shifts, and the shifted form makes that hold bitwise whenever
    the shifted inputs are exactly representable.
    """
    z = _check_scores(z)
    shifted = z - z.max()
    u = np.sort(shifted)[::-1]
    cssv = np.cumsum(u)
    k = np.arange(1, u.size + 1)
    support = 1.0 + k * u > cssv
    k_star = int(np.count_nonzero(support))  # support holds on a prefix
    tau = (cssv[k_star - 1] - 1.0) / k_star
    return np.maximum(shifted - tau, 0.0)


def softmax(z) -> np.ndarray:
    """Exponential normalization with max-subtraction for overflow safety.

    Every output entry is strictly positive.
    """
    z = _check_scores(z)
    e = np.exp(z - z.max())
    return e / e.sum()


def entmax(z, alpha: float) -> np.ndarray:
    """Tsallis-entropy normalizer; alpha=1 is softmax, alpha=2 is sparsemax.

    Those two indices are delegated to the dedicated implementations; other
    alpha >= 1 solve for the support threshold by bisection.
    """
    z = _check_scores(z)
    if not np.isfinite(alpha) or alpha < 1.0:
        raise ValueError("unsupported entropy index")
    if alpha == 1.0:
        return softmax(z)
    if alpha == 2.0:
        return sparsemax(z)
    return _entmax_bisect(z, alpha)


def _entmax_bisect(z, alpha: float, tol: float = 1e-12, max_iter: int = 200) -> np.ndarray:
    """Threshold bisection for general alpha > 1.

    Solves sum_i [(alpha-1) z_i - tau]_+^{1/(alpha-1)} = 1 for tau; the
    bracket [max - 1, max] always contains the root since the left end
    yields mass >= 1 and the right end yields 0.
    """
    zt = (alpha - 1.0) * np.asarray(z, dtype=float)
    power = 1.0 / (alpha - 1.0)
    lo = zt.max() - 1.0
    hi = zt.max()

    def mass(tau: float) -> float:
        return float(np.sum(np.maximum(zt - tau, 0.0) ** power))

    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        if mass(mid) >= 1.0:
            lo = mid
        else:
            hi = mid
        if hi - lo <= tol:
            break
    p = np.maximum(zt - 0.5 * (lo + hi), 0.0) ** power
    return p / p.sum()


def project_simplex_oracle(z) -> np.ndarray:
    """Exact simplex projection via the classic full-sort rule.

    Independent reference implementation used to cross-check sparsemax;
    intentionally shares no threshold code with it.
    """
    z = _check_scores(z)
    u = np.sort(z)[::-1]
    cssv = np.cumsum(u) - 1.0
    idx = np.arange(1, u.size + 1)
    rho = int(np.nonzero(u - cssv / idx > 0)[0][-1])
    theta = cssv[rho] / (rho + 1.0)
    return np.maximum(z - theta, 0.0)
