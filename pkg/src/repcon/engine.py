"""Deterministic synchronous round-based simulator.

Each round: every node's outgoing messages are collected first (honest
nodes broadcast their current state; attackers may send per-edge
payloads), then delivered, then every honest node steps. Honest nodes are
stepped in ascending id order and each node consumes its neighbors in
ascending id order, so a run is a pure function of (inputs, seed).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .adversary import ByzantineNode
from .core import NeighborStates, node_rng
from .protocol import HonestNode, ProtocolConfig, step
from .topology import Graph, check_assumptions

__all__ = [
    "InitSpec",
    "RoundTrace",
    "RunResult",
    "run",
    "compute_metrics",
    "build_traces",
    "fit_contraction",
]


@dataclass(frozen=True)
class InitSpec:
    """Initial-state distribution: iid uniform over a box, per-node seeded,
    with optional explicit overrides for hand-built fixtures."""

    lo: float = -100.0
    hi: float = 100.0
    overrides: dict = field(default_factory=dict)

    def state_for(self, node_id: int, dim: int, master_seed: int) -> np.ndarray:
        if node_id in self.overrides:
            v = np.asarray(self.overrides[node_id], dtype=float)
            if v.shape != (dim,):
                raise ValueError(f"override for node {node_id} has wrong dimension")
            return v.copy()
        return node_rng(master_seed, node_id).uniform(self.lo, self.hi, size=dim)


@dataclass(frozen=True)
class RoundTrace:
    """Honest-only metrics for one round, plus the weights produced then."""

    t: int
    rmse: float
    dia: float
    d_inf: float  # honest diameter, infinity norm
    d_2: float  # honest diameter, Euclidean norm
    disagreement: float  # Frobenius norm of mean-centered honest states
    byz_mass: dict | None  # honest id -> weight mass on byzantine neighbors
    reputations: dict | None  # honest id -> ReputationVector

    @property
    def byz_mass_mean(self) -> float | None:
        if self.byz_mass is None:
            return None
        return float(np.mean(list(self.byz_mass.values())))

    @property
    def byz_mass_max(self) -> float | None:
        if self.byz_mass is None:
            return None
        return float(max(self.byz_mass.values()))


@dataclass
class RunResult:
    graph: Graph
    protocol: ProtocolConfig
    rounds: int
    master_seed: int
    honest_ids: tuple
    honest_states: np.ndarray  # (T+1, |H|, d); row T is the final state
    byz_messages: list  # per round: {(sender, receiver): vector}
    reputations: list  # per round: {honest id: ReputationVector} or None
    traces: list

    @property
    def final_states(self) -> dict:
        return {i: self.honest_states[-1, k] for k, i in enumerate(self.honest_ids)}

    def neighbor_states(self, i: int, t: int) -> NeighborStates:
        """Reconstruct exactly the messages honest node i consumed at round t."""
        idx = {v: k for k, v in enumerate(self.honest_ids)}
        nbrs = self.graph.neighbors[i]
        rows = []
        for j in nbrs:
            if j in idx:
                rows.append(self.honest_states[t, idx[j]])
            else:
                rows.append(self.byz_messages[t][(j, i)])
        return NeighborStates(tuple(nbrs), np.array(rows))


def compute_metrics(honest_now: np.ndarray, honest_at_0: np.ndarray,
                    reputations: dict | None, graph: Graph, t: int) -> RoundTrace:
    """Metrics over honest nodes only; byzantine values never enter them."""
    if honest_now.shape[0] == 0:
        raise ValueError("no honest nodes")
    mean_now = honest_now.mean(axis=0)
    centered = honest_now - mean_now
    disagreement = float(np.linalg.norm(centered))
    rmse = disagreement / float(np.sqrt(honest_now.shape[0]))
    dia = float(np.linalg.norm(mean_now - honest_at_0.mean(axis=0)))
    gaps = honest_now[:, None, :] - honest_now[None, :, :]
    d_inf = float(np.abs(gaps).max())
    d_2 = float(np.linalg.norm(gaps, axis=2).max())
    byz_mass = None
    if reputations is not None:
        byz = graph.byzantine
        byz_mass = {i: rep.mass_on(byz) for i, rep in reputations.items()}
    return RoundTrace(t, rmse, dia, d_inf, d_2, disagreement, byz_mass, reputations)


def build_traces(graph: Graph, honest_states: np.ndarray, reputations: list) -> list:
    """Per-round traces from a state history; shared by both backends so
    their exported metrics are bit-identical."""
    return [
        compute_metrics(honest_states[t], honest_states[0], reputations[t], graph, t)
        for t in range(len(reputations))
    ]


def run(graph: Graph, protocol: ProtocolConfig, attacks: dict, init: InitSpec,
        dim: int, rounds: int, master_seed: int, *,
        enforce_assumptions: bool = True) -> RunResult:
    """Execute ``rounds`` synchronous rounds and record the full history.

    ``attacks`` maps every byzantine node id to its AttackSpec. Set
    ``enforce_assumptions=False`` to deliberately study violations.
    """
    report = check_assumptions(graph)
    if enforce_assumptions and not report.all_pass:
        bad = sorted(i for i, ok in report.majority_honest.items() if not ok)
        raise ValueError(
            f"graph violates resilience assumptions (honest_connected="
            f"{report.honest_connected}, majority failures at {bad}); "
            f"pass enforce_assumptions=False to run anyway"
        )
    byz_ids = sorted(graph.byzantine)
    if set(attacks) != set(byz_ids):
        raise ValueError("attacks must cover exactly the byzantine nodes")

    honest_ids = tuple(graph.honest)
    idx = {v: k for k, v in enumerate(honest_ids)}
    nodes = {
        i: HonestNode.create(i, init.state_for(i, dim, master_seed), protocol, graph.neighbors[i])
        for i in honest_ids
    }
    attackers = {
        b: ByzantineNode.create(b, attacks[b], dim, init.lo, init.hi, master_seed)
        for b in byz_ids
    }

    states = np.empty((rounds + 1, len(honest_ids), dim))
    for i in honest_ids:
        states[0, idx[i]] = nodes[i].state
    byz_messages = []
    reputations = []

    for t in range(rounds):
        # Collect all emissions before any delivery (synchronous lockstep).
        byz_out = {}
        for b in byz_ids:
            for j, msg in attackers[b].emit(t, graph.neighbors[b]).items():
                byz_out[(b, j)] = msg
        byz_messages.append(byz_out)

        honest_rows = states[t]
        round_reps = {} if protocol.kind in ("arepc", "wla", "repc") else None
        new_rows = np.empty_like(honest_rows)
        for i in honest_ids:
            nbrs = graph.neighbors[i]
            msgs = np.empty((len(nbrs), dim))
            for k, j in enumerate(nbrs):
                if j in idx:
                    msgs[k] = honest_rows[idx[j]]
                else:
                    msgs[k] = byz_out[(j, i)]
            ns = NeighborStates(nbrs, msgs)
            new_state, rep = step(nodes[i], ns)
            new_rows[idx[i]] = new_state
            if rep is not None:
                nodes[i].last_reputation = rep
                round_reps[i] = rep
        reputations.append(round_reps)

        # Attackers observe this round's incoming messages for the next round.
        for b in byz_ids:
            received = {}
            for j in graph.neighbors[b]:
                if j in idx:
                    received[j] = honest_rows[idx[j]]
                else:
                    received[j] = byz_out[(j, b)]
            attackers[b].observe(received)

        for i in honest_ids:
            nodes[i].state = new_rows[idx[i]]
        states[t + 1] = new_rows

    traces = build_traces(graph, states, reputations)
    return RunResult(graph, protocol, rounds, master_seed, honest_ids,
                     states, byz_messages, reputations, traces)


def fit_contraction(trace, burn_in: int) -> dict:
    """Least-squares geometric decay rate of RMSE after ``burn_in`` rounds.

    Returns {"rho_hat": exp(slope of log RMSE per round), "r_squared": fit
    quality}. If RMSE reaches exactly zero, only the prefix before the
    first zero is fitted.
    """
    if len(trace) and hasattr(trace[0], "rmse"):
        rmse = np.array([row.rmse for row in trace], dtype=float)
    else:
        rmse = np.asarray(trace, dtype=float)
    if len(rmse) <= burn_in + 10:
        raise ValueError("trace too short for the requested burn-in")
    zeros = np.nonzero(rmse == 0.0)[0]
    end = int(zeros[0]) if len(zeros) else len(rmse)
    t = np.arange(burn_in, end)
    if len(t) < 2:
        raise ValueError("not enough positive-RMSE rounds after burn-in")
    y = np.log(rmse[burn_in:end])
    slope, intercept = np.polyfit(t, y, 1)
    fitted = slope * t + intercept
    ss_res = float(np.sum((y - fitted) ** 2))
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    r_squared = 1.0 if ss_tot == 0.0 else 1.0 - ss_res / ss_tot
    return {"rho_hat": float(np.exp(slope)), "r_squared": r_squared}
