"""Loss -> accumulation -> normalization pipeline producing neighbor weights.

Each honest node scores its neighbors every round with an outlier-robust
loss, folds the score into a running ledger (exponential decay, moving
horizon, or plain infinite sum), and normalizes the negated, temperature-
scaled totals onto the simplex. The resulting weights are that node's
reputation vector over its neighbors for the round.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field

import numpy as np

from .centers import coordinate_median, geometric_median, pairwise_mean_distances
from .core import NeighborStates
from .simplex import entmax, softmax, sparsemax

LOSS_KINDS = ("coordinate_median", "geometric_median", "quasi_geometric")
ACCUMULATION_KINDS = ("decay", "horizon", "infinite_sum")
NORMALIZER_KINDS = ("sparsemax", "softmax", "entmax")


@dataclass(frozen=True)
class ReputationConfig:
    """Operator choices and parameters for the reputation pipeline.

    ``eta`` is the inverse temperature applied to accumulated losses before
    normalization; ``lam`` the forgetting factor for decay accumulation;
    ``horizon`` the window length for moving-horizon accumulation.
    """

    loss: str = "coordinate_median"
    accumulation: str = "decay"
    normalizer: str = "sparsemax"
    eta: float = 0.001
    lam: float = 0.0
    horizon: int | None = None
    entmax_alpha: float | None = None

    def __post_init__(self):
        if self.loss not in LOSS_KINDS:
            raise ValueError(f"unknown loss kind {self.loss!r}")
        if self.accumulation not in ACCUMULATION_KINDS:
            raise ValueError(f"unknown accumulation kind {self.accumulation!r}")
        if self.normalizer not in NORMALIZER_KINDS:
            raise ValueError(f"unknown normalizer {self.normalizer!r}")
        if not self.eta > 0:
            raise ValueError("eta must be > 0")
        if self.accumulation == "decay" and not 0.0 <= self.lam <= 1.0:
            raise ValueError("forgetting factor must lie in [0, 1]")
        if self.accumulation == "horizon":
            if self.horizon is None or self.horizon < 1:
                raise ValueError("horizon must be >= 1")
        if self.normalizer == "entmax":
            if self.entmax_alpha is None:
                raise ValueError("entmax normalizer requires entmax_alpha")
            if self.entmax_alpha < 1.0:
                raise ValueError("unsupported entropy index")


@dataclass(frozen=True)
class ReputationVector:
    """A node's simplex weighting over its neighbors (ids ascending)."""

    ids: tuple[int, ...]
    weights: np.ndarray

    def __post_init__(self):
        if len(self.ids) != self.weights.shape[0]:
            raise ValueError("ids and weights length mismatch")
        if np.any(self.weights < 0.0):
            raise ValueError("negative reputation weight")
        if abs(float(self.weights.sum()) - 1.0) > 1e-12:
            raise ValueError("reputation weights do not sum to 1")

    def weight_of(self, j: int) -> float:
        return float(self.weights[self.ids.index(j)])

    def as_dict(self) -> dict[int, float]:
        return {j: float(w) for j, w in zip(self.ids, self.weights)}

    def mass_on(self, members) -> float:
        members = set(members)
        return float(sum(w for j, w in zip(self.ids, self.weights) if j in members))


@dataclass
class LossLedger:
    """Per-neighbor accumulated losses, aligned with ascending neighbor ids.

    ``totals`` starts at zero; ``history`` is only kept in horizon mode and
    holds the window of recent instantaneous losses (oldest first).
    """

    ids: tuple[int, ...]
    totals: np.ndarray
    history: deque | None = field(default=None, repr=False)

    @classmethod
    def fresh(cls, ids, horizon: int | None = None) -> "LossLedger":
        ids = tuple(int(j) for j in ids)
        hist = deque(maxlen=horizon) if horizon is not None else None
        return cls(ids, np.zeros(len(ids)), hist)


def instantaneous_loss(cfg: ReputationConfig, self_state, ns: NeighborStates) -> np.ndarray:
    """Per-neighbor loss for one round, aligned to ``ns.ids``.

    The reference center is computed over the neighbor states only (the
    node's own state does not enter any of the robust centers); it is used
    solely by the own-state loss of the weight-learning baseline, which is
    why it is accepted here.
    """
    if np.asarray(self_state).shape != (ns.dim,):
        raise ValueError("dimension mismatch between own state and neighbor states")
    return _loss_by_kind(cfg.loss, self_state, ns)


def _loss_by_kind(kind: str, self_state, ns: NeighborStates) -> np.ndarray:
    pts = ns.states
    if kind == "coordinate_median":
        center = coordinate_median(pts)
        return np.abs(pts - center).max(axis=1)
    if kind == "geometric_median":
        center = geometric_median(pts)
        return np.linalg.norm(pts - center, axis=1)
    if kind == "quasi_geometric":
        return pairwise_mean_distances(pts)
    if kind == "own_state":
        own = np.asarray(self_state, dtype=float)
        if own.shape[0] != ns.dim:
            raise ValueError("dimension mismatch between own state and neighbor states")
        return np.linalg.norm(pts - own, axis=1)
    raise ValueError(f"unknown loss kind {kind!r}")


def accumulate(ledger: LossLedger, losses: np.ndarray, cfg: ReputationConfig) -> LossLedger:
    """Fold one round of instantaneous losses into the ledger (in place).

    Horizon mode recomputes the window sum from the stored history rather
    than using an add/subtract recursion, so the total is exactly the sum
    of the most recent observations.
    """
    losses = np.asarray(losses, dtype=float)
    if losses.shape[0] != len(ledger.ids):
        raise ValueError("loss vector does not match ledger neighbors")
    if cfg.accumulation == "decay":
        ledger.totals = cfg.lam * ledger.totals + losses
    elif cfg.accumulation == "horizon":
        if ledger.history is None:
            raise ValueError("ledger was not created with a horizon")
        ledger.history.append(losses)
        ledger.totals = np.add.reduce(list(ledger.history))
    elif cfg.accumulation == "infinite_sum":
        ledger.totals = ledger.totals + losses
    else:  # pragma: no cover - ReputationConfig already validates
        raise ValueError(f"unknown accumulation kind {cfg.accumulation!r}")
    return ledger


def normalize(ledger: LossLedger, cfg: ReputationConfig) -> ReputationVector:
    """Map accumulated losses to simplex weights via the configured normalizer."""
    scores = -cfg.eta * ledger.totals
    if cfg.normalizer == "sparsemax":
        w = sparsemax(scores)
    elif cfg.normalizer == "softmax":
        w = softmax(scores)
    else:
        w = entmax(scores, cfg.entmax_alpha)
    return ReputationVector(ledger.ids, w)
