"""Shared primitives: neighbor-state bundles, seeding, and error types."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


class ConfigError(ValueError):
    """Invalid experiment configuration; message carries the field path."""


class TransportError(RuntimeError):
    """Socket-backend failure (handshake, framing, or child process)."""


def node_rng(master_seed: int, node_id: int) -> np.random.Generator:
    """Per-node random stream derived from (master_seed, node_id).

    Both the in-process engine and the socket backend derive node streams
    this way, so the two backends observe identical randomness.
    """
    return np.random.default_rng(np.random.SeedSequence([int(master_seed), int(node_id)]))


def as_state(x, dim: int | None = None) -> np.ndarray:
    """Coerce to a finite float vector, optionally checking its dimension."""
    v = np.asarray(x, dtype=float)
    if v.ndim != 1:
        raise ValueError(f"state vector must be 1-D, got shape {v.shape}")
    if not np.all(np.isfinite(v)):
        raise ValueError("state vector has non-finite entries")
    if dim is not None and v.shape[0] != dim:
        raise ValueError(f"dimension mismatch: expected {dim}, got {v.shape[0]}")
    return v


@dataclass(frozen=True)
class NeighborStates:
    """States received from a node's neighbors for one round.

    ``ids`` are strictly ascending neighbor ids and ``states[k]`` is the
    message from ``ids[k]``. The ascending order fixes the floating-point
    reduction order everywhere downstream.
    """

    ids: tuple[int, ...]
    states: np.ndarray  # shape (len(ids), d)

    def __post_init__(self):
        if len(self.ids) == 0:
            raise ValueError("no neighbors")
        if any(a >= b for a, b in zip(self.ids, self.ids[1:])):
            raise ValueError("neighbor ids must be strictly ascending")
        if self.states.ndim != 2 or self.states.shape[0] != len(self.ids):
            raise ValueError("states must be (len(ids), d)")

    @property
    def dim(self) -> int:
        return self.states.shape[1]

    def __len__(self) -> int:
        return len(self.ids)

    def index_of(self, j: int) -> int:
        try:
            return self.ids.index(j)
        except ValueError:
            raise ValueError("unknown neighbor") from None

    @classmethod
    def from_pairs(cls, pairs) -> "NeighborStates":
        """Build from (id, vector) pairs, sorting by id."""
        pairs = sorted(pairs, key=lambda p: p[0])
        ids = tuple(int(j) for j, _ in pairs)
        states = np.array([as_state(x) for _, x in pairs], dtype=float)
        return cls(ids, states)
