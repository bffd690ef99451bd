"""Labeled communication graphs: validation, generation, spectra, and file I/O.

A graph is undirected with every node labeled honest or byzantine. The two
structural conditions the analysis relies on — each honest node has a
strict majority of honest neighbors, and the honest-induced subgraph is
connected — are exposed as an explicit report so experiments can also be
run with them deliberately violated.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import networkx as nx
import numpy as np

__all__ = [
    "Graph",
    "GraphStats",
    "AssumptionReport",
    "check_assumptions",
    "honest_lambda2",
    "graph_stats",
    "separation_threshold",
    "generate",
    "save_graph",
    "load_graph",
]


@dataclass(frozen=True)
class Graph:
    """Immutable undirected graph with an honest/byzantine node partition."""

    n: int
    edges: frozenset  # of (u, v) with u < v
    byzantine: frozenset
    neighbors: tuple  # neighbors[i] is a sorted tuple of node ids

    @classmethod
    def from_edges(cls, n: int, edges, byzantine=()) -> "Graph":
        if n < 1:
            raise ValueError("graph needs at least one node")
        norm = set()
        for u, v in edges:
            u, v = int(u), int(v)
            if u == v:
                raise ValueError(f"self-loop at node {u}")
            if not (0 <= u < n and 0 <= v < n):
                raise ValueError(f"edge ({u}, {v}) out of range")
            norm.add((min(u, v), max(u, v)))
        byz = frozenset(int(b) for b in byzantine)
        if any(not 0 <= b < n for b in byz):
            raise ValueError("byzantine id out of range")
        adj = [[] for _ in range(n)]
        for u, v in norm:
            adj[u].append(v)
            adj[v].append(u)
        return cls(n, frozenset(norm), byz, tuple(tuple(sorted(a)) for a in adj))

    @property
    def honest(self) -> tuple:
        return tuple(i for i in range(self.n) if i not in self.byzantine)

    def is_byzantine(self, i: int) -> bool:
        return i in self.byzantine

    def honest_neighbors(self, i: int) -> tuple:
        return tuple(j for j in self.neighbors[i] if j not in self.byzantine)

    def byz_neighbors(self, i: int) -> tuple:
        return tuple(j for j in self.neighbors[i] if j in self.byzantine)

    def is_connected(self) -> bool:
        return _connected(set(range(self.n)), self.neighbors)


def _connected(nodes: set, neighbors) -> bool:
    if not nodes:
        return False
    start = next(iter(nodes))
    seen = {start}
    stack = [start]
    while stack:
        u = stack.pop()
        for v in neighbors[u]:
            if v in nodes and v not in seen:
                seen.add(v)
                stack.append(v)
    return seen == nodes


@dataclass(frozen=True)
class AssumptionReport:
    majority_honest: dict  # honest node id -> bool
    honest_connected: bool

    @property
    def all_pass(self) -> bool:
        return self.honest_connected and all(self.majority_honest.values())


def check_assumptions(g: Graph) -> AssumptionReport:
    """Per-node honest-majority booleans plus honest-subgraph connectivity.

    Majority is strict: a node with equally many honest and byzantine
    neighbors fails. Connectivity is decided by traversal, independently of
    the spectral computation in :func:`honest_lambda2`.
    """
    majority = {}
    honest = set(g.honest)
    for i in sorted(honest):
        nh = len(g.honest_neighbors(i))
        nb = len(g.byz_neighbors(i))
        majority[i] = nh > nb
    return AssumptionReport(majority, _connected(honest, g.neighbors))


def honest_lambda2(g: Graph) -> float:
    """Algebraic connectivity of the honest-induced subgraph.

    Second-smallest eigenvalue of the combinatorial Laplacian, via dense
    symmetric eigensolve. A single honest node is trivially connected and
    reports +inf.
    """
    honest = sorted(g.honest)
    if not honest:
        raise ValueError("honest subgraph is empty")
    if len(honest) == 1:
        return float("inf")
    idx = {v: k for k, v in enumerate(honest)}
    lap = np.zeros((len(honest), len(honest)))
    for u, v in g.edges:
        if u in idx and v in idx:
            a, b = idx[u], idx[v]
            lap[a, b] -= 1.0
            lap[b, a] -= 1.0
            lap[a, a] += 1.0
            lap[b, b] += 1.0
    eig = np.linalg.eigvalsh(lap)
    return float(eig[1])


@dataclass(frozen=True)
class GraphStats:
    delta_min: int  # min honest-neighbor count over honest nodes
    lambda2: float
    max_byz_neighbors: int
    honest_degree: dict  # honest node -> honest-neighbor count
    byz_degree: dict  # honest node -> byzantine-neighbor count


def graph_stats(g: Graph) -> GraphStats:
    honest = sorted(g.honest)
    hdeg = {i: len(g.honest_neighbors(i)) for i in honest}
    bdeg = {i: len(g.byz_neighbors(i)) for i in honest}
    return GraphStats(
        delta_min=min(hdeg.values()),
        lambda2=honest_lambda2(g),
        max_byz_neighbors=max(bdeg.values(), default=0),
        honest_degree=hdeg,
        byz_degree=bdeg,
    )


def separation_threshold(g: Graph, eta: float) -> float:
    """Minimum persistent infinity-norm separation of an attacker from the
    honest average that guarantees it exactly zero weight: 1 / (eta * delta_min)."""
    if not eta > 0:
        raise ValueError("eta must be > 0")
    return 1.0 / (eta * graph_stats(g).delta_min)


def generate(kind: str, n_honest: int, n_byz: int, seed: int, *,
             degree: int | None = None, p: float | None = None,
             chords: int | None = None, max_attempts: int = 1000) -> Graph:
    """Sample a labeled graph of the given family until it is admissible.

    Admissible means: connected overall, honest subgraph connected, and a
    strict honest majority at every honest node. Each attempt re-derives
    its seed from (seed, attempt), so results are reproducible.
    """
    n = n_honest + n_byz
    for attempt in range(max_attempts):
        sub = int(np.random.SeedSequence([int(seed), attempt]).generate_state(1)[0])
        rng = np.random.default_rng(sub)
        if kind == "random_regular":
            if degree is None:
                raise ValueError("random_regular requires degree")
            if (n * degree) % 2 != 0 or degree >= n:
                raise ValueError("random_regular requires degree < n and n*degree even")
            gx = nx.random_regular_graph(degree, n, seed=sub)
            edges = gx.edges()
        elif kind == "erdos_renyi":
            if p is None:
                raise ValueError("erdos_renyi requires p")
            gx = nx.gnp_random_graph(n, p, seed=sub)
            edges = gx.edges()
        elif kind == "ring_plus_chords":
            if chords is None:
                raise ValueError("ring_plus_chords requires chords")
            edges = {(i, (i + 1) % n) for i in range(n)}
            edges = {(min(u, v), max(u, v)) for u, v in edges}
            added = 0
            guard = 0
            while added < chords and guard < 100 * chords + 100:
                guard += 1
                u, v = sorted(rng.choice(n, size=2, replace=False).tolist())
                if (u, v) not in edges:
                    edges.add((u, v))
                    added += 1
        else:
            raise ValueError(f"unknown topology kind {kind!r}")
        byz = sorted(rng.choice(n, size=n_byz, replace=False).tolist()) if n_byz else []
        g = Graph.from_edges(n, edges, byz)
        if g.is_connected() and check_assumptions(g).all_pass:
            return g
    raise ValueError("no admissible topology found")


def save_graph(g: Graph, path) -> None:
    lines = [f"nodes {g.n}", "byzantine " + " ".join(str(b) for b in sorted(g.byzantine))]
    lines[-1] = lines[-1].rstrip()
    for u, v in sorted(g.edges):
        lines.append(f"edge {u} {v}")
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def load_graph(path) -> Graph:
    """Parse the edge-list format; rejects malformed lines with their number.

    Edges must be declared with the smaller endpoint first; duplicates are
    accepted with a warning and collapsed.
    """
    n = None
    byz = None
    edges = set()
    with open(path, "r", encoding="utf-8") as fh:
        raw = fh.readlines()
    for lineno, line in enumerate(raw, start=1):
        text = line.split("#", 1)[0].strip()
        if not text:
            continue
        parts = text.split()
        if parts[0] == "nodes":
            if n is not None:
                raise ValueError(f"line {lineno}: duplicate nodes line")
            n = _parse_int(parts, 1, lineno, "node count")
        elif parts[0] == "byzantine":
            if n is None:
                raise ValueError(f"line {lineno}: byzantine before nodes line")
            if byz is not None:
                raise ValueError(f"line {lineno}: duplicate byzantine line")
            byz = [_parse_int(["", w], 1, lineno, "byzantine id") for w in parts[1:]]
        elif parts[0] == "edge":
            if n is None or byz is None:
                raise ValueError(f"line {lineno}: edge before header lines")
            if len(parts) != 3:
                raise ValueError(f"line {lineno}: edge needs two endpoints")
            u = _parse_int(parts, 1, lineno, "endpoint")
            v = _parse_int(parts, 2, lineno, "endpoint")
            if u == v:
                raise ValueError(f"line {lineno}: self-loop at node {u}")
            if u >= v:
                raise ValueError(f"line {lineno}: edge endpoints must satisfy u < v")
            if (u, v) in edges:
                warnings.warn(f"line {lineno}: duplicate edge ({u}, {v}) ignored")
            edges.add((u, v))
        else:
            raise ValueError(f"line {lineno}: unknown directive {parts[0]!r}")
    if n is None or byz is None:
        raise ValueError("missing nodes/byzantine header lines")
    return Graph.from_edges(n, edges, byz)


def _parse_int(parts, k, lineno, what) -> int:
    try:
        return int(parts[k])
    except (IndexError, ValueError):
        raise ValueError(f"line {lineno}: bad {what}") from None
