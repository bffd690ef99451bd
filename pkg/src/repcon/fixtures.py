"""Frozen benchmark instances used by the test suite and shipped configs.

The 24-node chain fixture is hand-built rather than sampled: its honest
subgraph (a 20-node path plus the 0-12 chord) makes the uniform averaging
map contract with second eigenvalue ~0.9737, slow enough that log-RMSE
stays cleanly linear over 2000 rounds without reaching the floating-point
noise floor. Randomly generated graphs mix too fast for that measurement.

The 10-node mixed-attack fixture mirrors the structure of the
high-dimensional benchmark: two broadcast-random attackers, one per-edge
relay attacker, and an honest node with two byzantine neighbors.
"""

from __future__ import annotations

import numpy as np

from .adversary import AttackSpec
from .engine import InitSpec
from .protocol import ProtocolConfig
from .reputation import ReputationConfig
from .topology import Graph, generate

CHAIN_SEED = 20240917
MIXED_SEED = 77130
LARGE_SEED = 60451


def chain_20h_4b() -> Graph:
    """20 honest (path + chord 0-12) and 4 byzantine, three hosts each."""
    edges = [(i, i + 1) for i in range(19)] + [(0, 12)]
    attach = {20: (1, 5, 9), 21: (2, 7, 13), 22: (4, 11, 16), 23: (6, 14, 18)}
    for b, hosts in attach.items():
        edges += [(h, b) for h in hosts]
    return Graph.from_edges(24, edges, byzantine=attach.keys())


def mixed_7h_3b() -> Graph:
    """7 honest, 3 byzantine; node 0 has two byzantine neighbors.

    The honest subgraph is the circulant C7(1,2): 4-regular and
    vertex-transitive, so honest-only averaging preserves the honest mean
    and measured drift is attributable to the attackers alone.
    """
    edges = []
    for i in range(7):
        edges += [(i, (i + 1) % 7), (i, (i + 2) % 7)]
    byz_edges = [(0, 7), (3, 7),  # node 7: relay attacker
                 (0, 8), (5, 8),  # node 8: random attacker
                 (1, 9), (4, 9)]  # node 9: random attacker
    return Graph.from_edges(10, edges + byz_edges, byzantine=(7, 8, 9))


def large_50h_10b() -> Graph:
    """Generated 60-node instance for the large-scale benchmark shape."""
    return generate("random_regular", 50, 10, LARGE_SEED, degree=8)


def arepc_protocol(eta: float, lam: float, alpha: float, rounds: int, *,
                   loss: str = "coordinate_median",
                   normalizer: str = "sparsemax") -> ProtocolConfig:
    return ProtocolConfig(
        kind="arepc", alpha=alpha, rounds=rounds,
        reputation=ReputationConfig(loss=loss, accumulation="decay", lam=lam,
                                    normalizer=normalizer, eta=eta),
    )


def separated_chain_pieces(rounds: int = 2000) -> dict:
    """Chain fixture with far fixed-value attackers.

    delta_min is 1 (node 19 has a single honest neighbor), so the zero-weight
    separation threshold at eta=0.005 is 200; the attackers sit at constant
    2500 per coordinate, more than ten thresholds outside the init box.
    """
    graph = chain_20h_4b()
    value = (2500.0, 2500.0, 2500.0, 2500.0)
    spec = AttackSpec(kind="fixed_value", bound=5001.0, value=value)
    return {
        "graph": graph,
        "protocol": arepc_protocol(eta=0.005, lam=0.0, alpha=0.5, rounds=rounds),
        "attacks": {b: spec for b in graph.byzantine},
        "init": InitSpec(-100.0, 100.0),
        "dim": 4,
        "rounds": rounds,
        "master_seed": CHAIN_SEED,
    }


def bounded_chain_pieces(rounds: int = 2000) -> dict:
    """Chain fixture with near attackers held inside the honest init box."""
    graph = chain_20h_4b()
    values = {
        20: (35.0, -20.0, 55.0, -45.0),
        21: (-30.0, 48.0, -12.0, 25.0),
        22: (52.0, 16.0, -38.0, -8.0),
        23: (-15.0, -42.0, 22.0, 60.0),
    }
    attacks = {
        b: AttackSpec(kind="fixed_value", bound=float(np.linalg.norm(v)) + 1.0, value=v)
        for b, v in values.items()
    }
    pieces = separated_chain_pieces(rounds)
    pieces["attacks"] = attacks
    return pieces


def random_attack_chain_pieces(rounds: int = 1000, *, loss: str = "coordinate_median",
                               normalizer: str = "sparsemax") -> dict:
    """Chain fixture under broadcast-random attackers, for the bound checks."""
    graph = chain_20h_4b()
    spec = AttackSpec(kind="uniform_random", bound=201.0, lo=-100.0, hi=100.0)
    return {
        "graph": graph,
        "protocol": arepc_protocol(eta=0.005, lam=0.0, alpha=0.5, rounds=rounds,
                                   loss=loss, normalizer=normalizer),
        "attacks": {b: spec for b in graph.byzantine},
        "init": InitSpec(-100.0, 100.0),
        "dim": 4,
        "rounds": rounds,
        "master_seed": CHAIN_SEED,
    }


def mixed_attack_specs(dim: int = 20) -> dict:
    """Two broadcast-random attackers plus one relay attacker."""
    rand = AttackSpec(kind="uniform_random", bound=float(100.0 * np.sqrt(dim)) + 1.0,
                      lo=-100.0, hi=100.0)
    relay = AttackSpec(kind="relay", bound=1e9, period=10, magnitude=100.0, direction=0)
    return {7: relay, 8: rand, 9: rand}


def mixed_pieces(kind: str, rounds: int = 2000) -> dict:
    """High-dimensional mixed-attack fixture for one of the protocols."""
    if kind == "arepc":
        protocol = arepc_protocol(eta=0.002, lam=29.0 / 30.0, alpha=0.3, rounds=rounds)
    elif kind == "wmsr":
        protocol = ProtocolConfig(kind="wmsr", alpha=0.3, rounds=rounds, f=1)
    elif kind == "wla":
        protocol = ProtocolConfig(kind="wla", alpha=0.3, rounds=rounds, theta=0.001)
    else:
        raise ValueError(f"no mixed fixture for protocol {kind!r}")
    return {
        "graph": mixed_7h_3b(),
        "protocol": protocol,
        "attacks": mixed_attack_specs(),
        "init": InitSpec(-100.0, 100.0),
        "dim": 20,
        "rounds": rounds,
        "master_seed": MIXED_SEED,
    }


def large_pieces(kind: str, rounds: int = 3000) -> dict:
    """Large-scale benchmark shape: every attacker broadcasts one shared
    fixed vector, so even plain averaging can reach consensus (on a biased
    point) while the reputation protocols identify the attackers."""
    graph = large_50h_10b()
    value = (80.0, -75.0, 90.0, -60.0)
    spec = AttackSpec(kind="fixed_value", bound=float(np.linalg.norm(value)) + 1.0,
                      value=value)
    if kind == "arepc":
        protocol = arepc_protocol(eta=0.001, lam=0.8, alpha=0.5, rounds=rounds)
    elif kind == "average":
        protocol = ProtocolConfig(kind="average", alpha=0.5, rounds=rounds)
    elif kind == "wmsr":
        protocol = ProtocolConfig(kind="wmsr", alpha=0.5, rounds=rounds, f=1)
    elif kind == "wla":
        protocol = ProtocolConfig(kind="wla", alpha=0.5, rounds=rounds, theta=0.001)
    else:
        raise ValueError(f"no large fixture for protocol {kind!r}")
    return {
        "graph": graph,
        "protocol": protocol,
        "attacks": {b: spec for b in graph.byzantine},
        "init": InitSpec(-100.0, 100.0),
        "dim": 4,
        "rounds": rounds,
        "master_seed": LARGE_SEED,
    }
