"""Executable checks of the protocol's guarantees against raw run data.

Every check recomputes its quantities (centers, losses, diameters) from
the recorded states and messages with local code — none of it calls the
reputation pipeline — so a passing report genuinely cross-validates the
implementation rather than comparing it with itself.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import NeighborStates
from .engine import RunResult
from .protocol import HonestNode, ProtocolConfig, arepc_step
from .reputation import ReputationConfig
from .simplex import sparsemax
from .topology import Graph, separation_threshold

STRICT_SLACK = 1e-12  # absolute slack granted to strict analytic bounds

__all__ = [
    "BoundReport",
    "check_honest_loss_bound",
    "check_truncation_bound",
    "check_honest_dominance",
    "check_consensus_weights",
    "check_lipschitz",
    "check_softmax_influence",
    "check_geomedian_loss_bound",
]


@dataclass(frozen=True)
class BoundReport:
    """Outcome of one check: worst observed slack and where it occurred.

    ``max_violation`` is max(observed - bound); the check passes when it
    stays at or below ``tolerance``. ``witness`` is the (node, round) pair
    achieving it. ``skipped`` counts items the check's hypothesis excludes.
    """

    name: str
    examined: int
    max_violation: float
    tolerance: float
    passed: bool
    witness: tuple | None = None
    skipped: int = 0
    note: str = ""

    @staticmethod
    def from_items(name, items, tolerance=STRICT_SLACK, skipped=0, note=""):
        """items: iterable of (observed - bound, witness)."""
        worst = -np.inf
        where = None
        count = 0
        for violation, witness in items:
            count += 1
            if violation > worst:
                worst = violation
                where = witness
        if count == 0:
            return BoundReport(name, 0, -np.inf, tolerance, True, None, skipped,
                               note or "nothing to check")
        return BoundReport(name, count, float(worst), tolerance, worst <= tolerance,
                           where, skipped, note)


def _honest_diameter_inf(honest_rows: np.ndarray) -> float:
    gaps = honest_rows[:, None, :] - honest_rows[None, :, :]
    return float(np.abs(gaps).max())


def _honest_diameter_2(honest_rows: np.ndarray) -> float:
    gaps = honest_rows[:, None, :] - honest_rows[None, :, :]
    return float(np.linalg.norm(gaps, axis=2).max())


def _cm_losses(ns: NeighborStates) -> np.ndarray:
    center = np.median(ns.states, axis=0)
    return np.abs(ns.states - center).max(axis=1)


def _gm_losses_batched(pts: np.ndarray, tol: float = 1e-10, max_iter: int = 1000) -> np.ndarray:
    """Distances to the geometric median for a batch of instances.

    ``pts`` is (B, m, d); returns (B, m). Written independently of the
    centers module: per element, data points satisfying the vertex
    optimality condition are taken exactly; the rest run the reweighted-
    mean iteration until the step is below ``tol``.
    """
    n_batch, m, _ = pts.shape
    gaps = pts[:, :, None, :] - pts[:, None, :, :]  # [b, v, k] = x_v - x_k
    dist = np.linalg.norm(gaps, axis=3)
    coincident = dist == 0.0
    mult = coincident.sum(axis=1).astype(float)
    safe = np.where(coincident, 1.0, dist)
    pull = np.linalg.norm((gaps / safe[..., None]).sum(axis=1), axis=2)  # (B, m)
    vertex_ok = pull <= mult

    y = pts.mean(axis=1)
    done = np.zeros(n_batch, dtype=bool)
    has_vertex = vertex_ok.any(axis=1)
    rows = np.nonzero(has_vertex)[0]
    y[rows] = pts[rows, np.argmax(vertex_ok[rows], axis=1)]
    done[rows] = True

    for _ in range(max_iter):
        act = np.nonzero(~done)[0]
        if act.size == 0:
            break
        sub = pts[act]
        diff = sub - y[act][:, None, :]
        dd = np.maximum(np.linalg.norm(diff, axis=2), 1e-30)
        w = 1.0 / dd
        y_new = (w[..., None] * sub).sum(axis=1) / w.sum(axis=1)[:, None]
        step = np.linalg.norm(y_new - y[act], axis=1)
        y[act] = y_new
        done[act] = step < tol
    return np.linalg.norm(pts - y[:, None, :], axis=2)


def _require(result: RunResult, *, loss=None, normalizer=None, lam=None, check=""):
    cfg = result.protocol.reputation
    if result.protocol.kind != "arepc" or cfg is None:
        raise ValueError(f"{check} requires an arepc run")
    if loss is not None and cfg.loss != loss:
        raise ValueError(f"{check} requires loss kind {loss!r}")
    if normalizer is not None and cfg.normalizer != normalizer:
        raise ValueError(f"{check} requires the {normalizer} normalizer")
    if lam is not None and not (cfg.accumulation == "decay" and cfg.lam == lam):
        raise ValueError(f"{check} is stated for forgetting factor {lam}")
    return cfg


def check_honest_loss_bound(result: RunResult) -> BoundReport:
    """Honest neighbors' coordinate-median losses never exceed the honest
    infinity-norm diameter."""
    _require(result, loss="coordinate_median", check="honest loss bound")
    honest = set(result.honest_ids)

    def items():
        for t in range(result.rounds):
            d_h = _honest_diameter_inf(result.honest_states[t])
            for i in result.honest_ids:
                ns = result.neighbor_states(i, t)
                losses = _cm_losses(ns)
                for k, j in enumerate(ns.ids):
                    if j in honest:
                        yield losses[k] - d_h, (i, j, t)

    return BoundReport.from_items("honest_loss_bound", items())


def check_truncation_bound(result: RunResult) -> BoundReport:
    """Any neighbor keeping positive sparsemax weight has loss below the
    honest diameter plus the 1/(eta * honest-degree) safety margin."""
    cfg = _require(result, loss="coordinate_median", normalizer="sparsemax",
                   lam=0.0, check="truncation bound")
    eta = cfg.eta
    graph = result.graph

    def items():
        for t in range(result.rounds):
            d_h = _honest_diameter_inf(result.honest_states[t])
            reps = result.reputations[t]
            for i in result.honest_ids:
                ns = result.neighbor_states(i, t)
                losses = _cm_losses(ns)
                margin = 1.0 / (eta * len(graph.honest_neighbors(i)))
                weights = reps[i].weights
                for k in np.nonzero(weights > 0.0)[0]:
                    yield losses[k] - (d_h + margin), (i, ns.ids[k], t)

    return BoundReport.from_items("truncation_bound", items())


def check_honest_dominance(result: RunResult) -> BoundReport:
    """Whenever a neighbor whose loss exceeds the honest diameter keeps
    positive weight, every honest neighbor must keep positive weight too."""
    _require(result, loss="coordinate_median", normalizer="sparsemax",
             lam=0.0, check="honest dominance")
    honest = set(result.honest_ids)

    def items():
        for t in range(result.rounds):
            d_h = _honest_diameter_inf(result.honest_states[t])
            reps = result.reputations[t]
            for i in result.honest_ids:
                ns = result.neighbor_states(i, t)
                losses = _cm_losses(ns)
                weights = reps[i].weights
                if not np.any((weights > 0.0) & (losses > d_h)):
                    continue
                honest_cols = [k for k, j in enumerate(ns.ids) if j in honest]
                ok = all(weights[k] > 0.0 for k in honest_cols)
                yield (0.0 if ok else 1.0), (i, t)

    return BoundReport.from_items("honest_dominance", items(), tolerance=0.0)


def check_softmax_influence(result: RunResult) -> BoundReport:
    """Under softmax weights, total byzantine pull (weight times loss) is
    bounded by e^(eta * D_H) / (eta * e)."""
    cfg = _require(result, loss="coordinate_median", normalizer="softmax",
                   lam=0.0, check="softmax influence bound")
    eta = cfg.eta
    byz = result.graph.byzantine

    def items():
        for t in range(result.rounds):
            d_h = _honest_diameter_inf(result.honest_states[t])
            bound = np.exp(eta * d_h) / (eta * np.e)
            reps = result.reputations[t]
            for i in result.honest_ids:
                ns = result.neighbor_states(i, t)
                losses = _cm_losses(ns)
                pull = sum(
                    reps[i].weights[k] * losses[k]
                    for k, j in enumerate(ns.ids) if j in byz
                )
                yield pull - bound, (i, t)

    return BoundReport.from_items("softmax_influence", items())


def check_geomedian_loss_bound(result: RunResult) -> BoundReport:
    """Honest geometric-median losses stay within
    |N_i| / (2|N_i ∩ H| - |N_i|) times the honest Euclidean diameter,
    checked only where that denominator is positive."""
    _require(result, loss="geometric_median", check="geometric-median loss bound")
    graph = result.graph
    honest = set(result.honest_ids)
    idx = {v: k for k, v in enumerate(result.honest_ids)}
    rounds = result.rounds
    g2 = result.honest_states[:rounds, :, None, :] - result.honest_states[:rounds, None, :, :]
    d_h2 = np.linalg.norm(g2, axis=3).max(axis=(1, 2))  # (T,)

    worst, where = -np.inf, None
    examined = 0
    skipped = 0
    for i in result.honest_ids:
        nbrs = graph.neighbors[i]
        m = len(nbrs)
        h = len(graph.honest_neighbors(i))
        if 2 * h <= m:
            skipped += 1
            continue
        ratio = m / (2 * h - m)
        msgs = np.empty((rounds, m, result.honest_states.shape[2]))
        for k, j in enumerate(nbrs):
            if j in honest:
                msgs[:, k] = result.honest_states[:rounds, idx[j]]
            else:
                for t in range(rounds):
                    msgs[t, k] = result.byz_messages[t][(j, i)]
        losses = _gm_losses_batched(msgs)
        for k, j in enumerate(nbrs):
            if j not in honest:
                continue
            viol = losses[:, k] - ratio * d_h2
            examined += rounds
            t_bad = int(np.argmax(viol))
            if viol[t_bad] > worst:
                worst, where = float(viol[t_bad]), (i, j, t_bad)
    if examined == 0:
        return BoundReport("geomedian_loss_bound", 0, -np.inf, STRICT_SLACK, True,
                           None, skipped, "nothing to check")
    return BoundReport("geomedian_loss_bound", examined, worst, STRICT_SLACK,
                       worst <= STRICT_SLACK, where, skipped)


def check_consensus_weights(graph: Graph, eta: float, honest_value,
                            byz_values: dict) -> BoundReport:
    """At an exact consensus configuration with every attacker separated by
    at least 1/(eta * delta_min) in infinity norm, one protocol step must
    assign byzantine neighbors weight exactly 0.0 and honest neighbors
    exactly 1/(honest degree).

    If the separation hypothesis fails the report says so without failing.
    Attackers landing exactly on the threshold may round to a weight below
    1e-15 instead of exact zero; that is accepted and noted.
    """
    v = np.asarray(honest_value, dtype=float)
    dim = v.shape[0]
    threshold = separation_threshold(graph, eta)
    byz = sorted(graph.byzantine)
    if set(byz_values) != set(byz):
        raise ValueError("byz_values must cover exactly the byzantine nodes")
    for b in byz:
        sep = float(np.abs(np.asarray(byz_values[b], float) - v).max())
        if sep < threshold:
            return BoundReport("consensus_weights", 0, -np.inf, 0.0, True,
                               note=f"hypothesis not satisfied: node {b} at "
                                    f"separation {sep:.6g} < {threshold:.6g}")

    cfg = ProtocolConfig(
        kind="arepc", alpha=0.5,
        reputation=ReputationConfig(loss="coordinate_median", accumulation="decay",
                                    lam=0.0, normalizer="sparsemax", eta=eta),
    )
    worst = -np.inf
    where = None
    examined = 0
    boundary = 0
    for i in graph.honest:
        nbrs = graph.neighbors[i]
        rows = np.array([byz_values[j] if j in graph.byzantine else v for j in nbrs])
        node = HonestNode.create(i, v, cfg, nbrs)
        new_state, rep = arepc_step(node, NeighborStates(nbrs, rows))
        h = len(graph.honest_neighbors(i))
        expect = 1.0 / h
        for k, j in enumerate(nbrs):
            examined += 1
            w = float(rep.weights[k])
            if j in graph.byzantine:
                if w == 0.0:
                    err = 0.0
                elif w < 1e-15:
                    err = 0.0
                    boundary += 1
                else:
                    err = w
            else:
                err = abs(w - expect)
            if err > worst:
                worst = err
                where = (i, j)
        if not np.array_equal(new_state, v):
            return BoundReport("consensus_weights", examined, np.inf, 1e-15, False,
                               (i, None), note="state moved at consensus")
    note = f"{boundary} boundary weight(s) below 1e-15" if boundary else ""
    return BoundReport("consensus_weights", examined, float(worst), 1e-15,
                       worst <= 1e-15, where, note=note)


def check_lipschitz(graph: Graph, eta: float, n_pairs: int, seed: int,
                    scale: float = 100.0, dim: int = 4) -> tuple:
    """Randomized verification of the loss-map and weight-map Lipschitz
    constants (2 sqrt(|N_i|) and 2 eta sqrt(sum |N_i|)) for the
    memoryless coordinate-median pipeline.

    Returns one report for the loss map and one for the weight map.
    """
    rng = np.random.default_rng(np.random.SeedSequence([int(seed), 0x11B5]))
    honest = graph.honest
    loss_worst, loss_where = -np.inf, None
    w_worst, w_where = -np.inf, None
    sum_deg = sum(len(graph.neighbors[i]) for i in honest)
    w_const = 2.0 * eta * np.sqrt(sum_deg)

    for pair in range(n_pairs):
        x = rng.uniform(-scale, scale, size=(graph.n, dim))
        y = rng.uniform(-scale, scale, size=(graph.n, dim))
        dxy = float(np.linalg.norm(x - y))
        w_gap_sq = 0.0
        for i in honest:
            nbrs = list(graph.neighbors[i])
            lx = _cm_losses(NeighborStates(tuple(nbrs), x[nbrs]))
            ly = _cm_losses(NeighborStates(tuple(nbrs), y[nbrs]))
            gap = float(np.linalg.norm(lx - ly))
            bound = 2.0 * np.sqrt(len(nbrs)) * dxy
            if gap - bound > loss_worst:
                loss_worst, loss_where = gap - bound, (i, pair)
            px = sparsemax(-eta * lx)
            py = sparsemax(-eta * ly)
            w_gap_sq += float(np.sum((px - py) ** 2))
        w_gap = np.sqrt(w_gap_sq)
        if w_gap - w_const * dxy > w_worst:
            w_worst, w_where = w_gap - w_const * dxy, (None, pair)

    n_loss = n_pairs * len(honest)
    return (
        BoundReport("loss_lipschitz", n_loss, float(loss_worst), STRICT_SLACK,
                    loss_worst <= STRICT_SLACK, loss_where),
        BoundReport("weight_lipschitz", n_pairs, float(w_worst), STRICT_SLACK,
                    w_worst <= STRICT_SLACK, w_where),
    )
