"""Reputation-weighted Byzantine-resilient consensus with a deterministic simulator."""

from .adversary import AttackSpec, ByzantineNode
from .centers import coordinate_median, geometric_median, pairwise_mean_distance, weiszfeld
from .core import ConfigError, NeighborStates, TransportError, node_rng
from .engine import InitSpec, RoundTrace, RunResult, compute_metrics, fit_contraction, run
from .protocol import (
    HonestNode,
    ProtocolConfig,
    arepc_step,
    average_step,
    register_repc_baseline,
    repc_step,
    step,
    wla_step,
    wmsr_step,
)
from .reputation import (
    LossLedger,
    ReputationConfig,
    ReputationVector,
    accumulate,
    instantaneous_loss,
    normalize,
)
from .simplex import entmax, project_simplex_oracle, softmax, sparsemax
from .topology import (
    Graph,
    GraphStats,
    check_assumptions,
    generate,
    graph_stats,
    honest_lambda2,
    load_graph,
    save_graph,
    separation_threshold,
)

__version__ = "0.1.0"
