"""Robust central proxies for a set of neighbor states.

Three notions of "center" back the loss functions: the coordinate-wise
median (cheap, per-coordinate), the geometric median (Weiszfeld iteration
with the Vardi-Zhang fix for iterates landing on data points), and the
mean pairwise distance used by the quasi-geometric surrogate loss.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import NeighborStates

__all__ = [
    "coordinate_median",
    "geometric_median",
    "weiszfeld",
    "WeiszfeldResult",
    "pairwise_mean_distance",
    "pairwise_mean_distances",
]


def _check_points(points) -> np.ndarray:
    pts = np.asarray(points, dtype=float)
    if pts.ndim != 2:
        raise ValueError(f"points must be (m, d), got shape {pts.shape}")
    if pts.shape[0] == 0:
        raise ValueError("no neighbors")
    return pts


def coordinate_median(points) -> np.ndarray:
    """Per-coordinate median; even counts take the midpoint of the two
    central order statistics."""
    pts = _check_points(points)
    return np.median(pts, axis=0)


@dataclass(frozen=True)
class WeiszfeldResult:
    point: np.ndarray
    converged: bool
    iterations: int

    def objective(self, points) -> float:
        return float(np.linalg.norm(np.asarray(points, float) - self.point, axis=1).sum())


def weiszfeld(points, tol: float = 1e-10, max_iter: int = 1000) -> WeiszfeldResult:
    """Minimize the sum of Euclidean distances to ``points``.

    The minimizer frequently coincides with a data point, where the plain
    reweighted-mean iteration degrades to sublinear convergence, so each
    data point is first tested for the vertex optimality condition (pull
    from the others no larger than the point's multiplicity) and returned
    exactly when it holds. Otherwise the minimizer is interior and the
    iteration converges linearly; an iterate landing exactly on a data
    point uses the modified blended step.
    """
    pts = _check_points(points)
    if tol <= 0:
        raise ValueError("tol must be positive")
    m = pts.shape[0]
    if m == 1:
        return WeiszfeldResult(pts[0].copy(), True, 0)

    vertex = _optimal_vertex(pts)
    if vertex is not None:
        return WeiszfeldResult(pts[vertex].copy(), True, 0)

    # Interior minimizer: the objective is smooth away from the data points,
    # so try Newton steps (quadratic convergence) and fall back to the plain
    # reweighted-mean step, which never increases the objective, whenever a
    # Newton step is unavailable or fails to decrease it.
    d = pts.shape[1]
    eye = np.eye(d)
    y = pts.mean(axis=0)
    f_cur = float(np.linalg.norm(pts - y, axis=1).sum())
    for it in range(1, max_iter + 1):
        diff = pts - y
        dist = np.linalg.norm(diff, axis=1)
        anchored = dist == 0.0
        n_anchor = int(np.count_nonzero(anchored))
        if n_anchor == m:
            return WeiszfeldResult(y, True, it)
        w = 1.0 / dist[~anchored]
        t_point = (w[:, None] * pts[~anchored]).sum(axis=0) / w.sum()
        if n_anchor:
            # Iterate sits on a (non-optimal) data point: blended step.
            pull = (diff[~anchored] / dist[~anchored, None]).sum(axis=0)
            r = float(np.linalg.norm(pull))
            frac = min(1.0, n_anchor / r)
            y_next = (1.0 - frac) * t_point + frac * y
            f_cur = float(np.linalg.norm(pts - y_next, axis=1).sum())
        else:
            y_next = None
            grad = -(diff * w[:, None]).sum(axis=0)
            hess = w.sum() * eye - np.einsum("v,vi,vj->ij", w ** 3, diff, diff)
            try:
                trial = y + np.linalg.solve(hess, -grad)
            except np.linalg.LinAlgError:
                trial = None
            if trial is not None and np.all(np.isfinite(trial)):
                f_trial = float(np.linalg.norm(pts - trial, axis=1).sum())
                if f_trial < f_cur:
                    y_next, f_cur = trial, f_trial
            if y_next is None:
                y_next = t_point
                f_cur = float(np.linalg.norm(pts - y_next, axis=1).sum())
        step = float(np.linalg.norm(y_next - y))
        y = y_next
        if step < tol:
            return WeiszfeldResult(y, True, it)
    return WeiszfeldResult(y, False, max_iter)


def _optimal_vertex(pts: np.ndarray) -> int | None:
    """Index of a data point satisfying the subgradient optimality
    condition, or None if the minimizer is interior.

    At data point k with multiplicity w (coincident copies), optimality
    holds iff the norm of the summed unit vectors toward the other points
    is at most w.
    """
    gaps = pts[:, None, :] - pts[None, :, :]
    dist = np.linalg.norm(gaps, axis=2)
    coincident = dist == 0.0
    mult = coincident.sum(axis=1).astype(float)  # includes the point itself
    safe = np.where(coincident, 1.0, dist)
    units = gaps / safe[:, :, None]
    pull = np.linalg.norm(units.sum(axis=0), axis=1)  # toward each candidate k
    ok = np.nonzero(pull <= mult)[0]
    return int(ok[0]) if ok.size else None


def geometric_median(points, tol: float = 1e-10, max_iter: int = 1000) -> np.ndarray:
    return weiszfeld(points, tol=tol, max_iter=max_iter).point


def pairwise_mean_distances(points) -> np.ndarray:
    """For each row j, the mean Euclidean distance to all rows (self term 0)."""
    pts = _check_points(points)
    gaps = pts[:, None, :] - pts[None, :, :]
    return np.linalg.norm(gaps, axis=2).mean(axis=1)


def pairwise_mean_distance(j: int, ns: NeighborStates) -> float:
    """Mean distance from neighbor ``j``'s state to every neighbor state."""
    k = ns.index_of(j)
    return float(np.linalg.norm(ns.states - ns.states[k], axis=1).mean())
