"""Per-node update rules, all in the unified form x <- x + alpha * (xhat - x).

The blend is computed in delta form (weights applied to neighbor-minus-own
differences) rather than as (1-alpha)*x + alpha*xhat. Since every weight
vector sums to one the two are algebraically identical, and the delta form
makes an exact consensus configuration a bitwise fixed point, which the
exact-weight checks rely on.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .core import NeighborStates
from .reputation import LossLedger, ReputationConfig, ReputationVector, _loss_by_kind, accumulate, instantaneous_loss, normalize
from .simplex import softmax

PROTOCOL_KINDS = ("arepc", "average", "wmsr", "wla", "repc")


@dataclass(frozen=True)
class ProtocolConfig:
    """Which update rule honest nodes run, and its parameters."""

    kind: str
    alpha: float
    rounds: int = 1
    reputation: ReputationConfig | None = None
    f: int | None = None  # wmsr / repc trim bound
    theta: float | None = None  # wla inverse temperature
    epsilon: float | None = None  # repc parameter

    def __post_init__(self):
        if self.kind not in PROTOCOL_KINDS:
            raise ValueError(f"unknown protocol kind {self.kind!r}")
        if not 0.0 < self.alpha <= 1.0:
            raise ValueError("alpha must lie in (0, 1]")
        if self.rounds < 0:
            raise ValueError("rounds must be >= 0")
        if self.kind == "arepc":
            if self.reputation is None:
                raise ValueError("arepc requires a reputation config")
            if self.reputation.accumulation == "infinite_sum":
                raise ValueError(
                    "arepc rejects infinite_sum accumulation: unbounded memory "
                    "lets a patient attacker stockpile trust; use decay or horizon"
                )
        if self.kind == "wmsr" and (self.f is None or self.f < 0):
            raise ValueError("wmsr requires f >= 0")
        if self.kind == "wla" and (self.theta is None or not self.theta > 0):
            raise ValueError("wla requires theta > 0")
        if self.kind == "repc":
            if self.f is None or self.f < 0:
                raise ValueError("repc requires f >= 0")
            if self.epsilon is None or not self.epsilon > 0:
                raise ValueError("repc requires epsilon > 0")


_WLA_LEDGER_CFG = ReputationConfig(loss="coordinate_median", accumulation="infinite_sum", eta=1.0)


@dataclass
class HonestNode:
    """Mutable per-node protocol state: current vector plus loss ledger."""

    id: int
    state: np.ndarray
    cfg: ProtocolConfig
    neighbor_ids: tuple
    ledger: LossLedger | None = None
    last_reputation: ReputationVector | None = None

    @classmethod
    def create(cls, node_id: int, state, cfg: ProtocolConfig, neighbor_ids) -> "HonestNode":
        neighbor_ids = tuple(sorted(int(j) for j in neighbor_ids))
        ledger = None
        if cfg.kind == "arepc":
            ledger = LossLedger.fresh(neighbor_ids, horizon=cfg.reputation.horizon)
        elif cfg.kind == "wla":
            ledger = LossLedger.fresh(neighbor_ids)
        return cls(node_id, np.array(state, dtype=float), cfg, neighbor_ids, ledger)

    def _check_messages(self, ns: NeighborStates) -> None:
        if ns.ids != self.neighbor_ids:
            missing = set(self.neighbor_ids) - set(ns.ids)
            extra = set(ns.ids) - set(self.neighbor_ids)
            raise ValueError(
                f"node {self.id}: neighbor messages do not match neighbor set "
                f"(missing {sorted(missing)}, unexpected {sorted(extra)})"
            )
        if ns.dim != self.state.shape[0]:
            raise ValueError(f"node {self.id}: dimension mismatch")


def _blend(state: np.ndarray, alpha: float, weights: np.ndarray, ns: NeighborStates) -> np.ndarray:
    return state + alpha * (weights @ (ns.states - state))


def arepc_step(node: HonestNode, ns: NeighborStates) -> tuple[np.ndarray, ReputationVector]:
    """One reputation-learning consensus round: score neighbors against the
    robust center, fold into the ledger, normalize, and blend."""
    node._check_messages(ns)
    cfg = node.cfg.reputation
    losses = instantaneous_loss(cfg, node.state, ns)
    accumulate(node.ledger, losses, cfg)
    rep = normalize(node.ledger, cfg)
    new_state = _blend(node.state, node.cfg.alpha, rep.weights, ns)
    return new_state, rep


def average_step(node: HonestNode, ns: NeighborStates) -> np.ndarray:
    """Plain consensus: blend toward the unweighted neighbor mean."""
    node._check_messages(ns)
    m = len(ns)
    delta = (ns.states - node.state).sum(axis=0) / m
    return node.state + node.cfg.alpha * delta


def wmsr_step(node: HonestNode, ns: NeighborStates, f: int | None = None) -> np.ndarray:
    """Trimmed consensus, coordinate-wise.

    Per coordinate, discard up to f neighbor values strictly above own and
    up to f strictly below, then blend toward the mean of the retained
    values together with the own value.
    """
    node._check_messages(ns)
    if f is None:
        f = node.cfg.f
    m = len(ns)
    delta = ns.states - node.state  # per-coordinate trim is relative to own value
    srt = np.sort(delta, axis=0)
    n_hi = np.minimum(f, (srt > 0.0).sum(axis=0))
    n_lo = np.minimum(f, (srt < 0.0).sum(axis=0))
    csum = np.vstack([np.zeros(srt.shape[1]), np.cumsum(srt, axis=0)])
    cols = np.arange(srt.shape[1])
    retained = csum[m - n_hi, cols] - csum[n_lo, cols]
    count = m - n_hi - n_lo + 1  # own value always retained
    return node.state + node.cfg.alpha * (retained / count)


def wla_step(node: HonestNode, ns: NeighborStates, theta: float | None = None) -> tuple[np.ndarray, ReputationVector]:
    """Weight-learning baseline: own-state-referenced losses, infinite
    accumulation, softmax weights.

    Equivalent to multiplicative weights with per-round factor
    exp(-theta * loss).
    """
    node._check_messages(ns)
    if theta is None:
        theta = node.cfg.theta
    losses = _loss_by_kind("own_state", node.state, ns)
    accumulate(node.ledger, losses, _WLA_LEDGER_CFG)
    rep = ReputationVector(ns.ids, softmax(-theta * node.ledger.totals))
    new_state = _blend(node.state, node.cfg.alpha, rep.weights, ns)
    return new_state, rep


_repc_impl: Callable | None = None


def register_repc_baseline(fn: Callable | None) -> None:
    """Install (or clear, with None) the external trust-update baseline.

    The callable receives (node, ns, f, epsilon) and must return a weight
    vector over ns.ids. This package deliberately does not reconstruct the
    published method's internals; the slot lets an implementation be
    plugged in without guessing its formula.
    """
    global _repc_impl
    _repc_impl = fn


def repc_step(node: HonestNode, ns: NeighborStates,
              f: int | None = None, epsilon: float | None = None) -> tuple[np.ndarray, ReputationVector]:
    node._check_messages(ns)
    if _repc_impl is None:
        raise RuntimeError("repc baseline not provided")
    if f is None:
        f = node.cfg.f
    if epsilon is None:
        epsilon = node.cfg.epsilon
    weights = np.asarray(_repc_impl(node, ns, f, epsilon), dtype=float)
    rep = ReputationVector(ns.ids, weights)  # validates the simplex contract
    new_state = _blend(node.state, node.cfg.alpha, rep.weights, ns)
    return new_state, rep


def step(node: HonestNode, ns: NeighborStates) -> tuple[np.ndarray, ReputationVector | None]:
    """Dispatch on the configured protocol; returns (new state, reputation or None)."""
    kind = node.cfg.kind
    if kind == "arepc":
        return arepc_step(node, ns)
    if kind == "average":
        return average_step(node, ns), None
    if kind == "wmsr":
        return wmsr_step(node, ns), None
    if kind == "wla":
        return wla_step(node, ns)
    return repc_step(node, ns)
