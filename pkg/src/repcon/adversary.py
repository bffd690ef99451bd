"""Byzantine node behaviors: per-round, possibly per-edge, message generation.

Attackers declare a message-norm cap up front; every emission is checked
against it, turning the bounded-adversary assumption into an executable
guarantee of the run.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .core import node_rng

ATTACK_KINDS = ("fixed_value", "uniform_random", "relay", "custom")


@dataclass(frozen=True)
class AttackSpec:
    """Declarative attack description.

    kinds:
      fixed_value    broadcast one constant vector every round (``value``,
                     or a draw from the init box if omitted)
      uniform_random fresh iid uniform(lo, hi)^d broadcast each round
      relay          echo each neighbor's last received state back at it,
                     adding ``magnitude`` on coordinate ``direction`` every
                     ``period`` rounds (per-edge, inconsistent)
      custom         seeded callable (API only; not expressible in config
                     files): fn(node, t, received, rng) -> vec or {j: vec}
    """

    kind: str
    bound: float
    value: tuple | None = None
    lo: float | None = None
    hi: float | None = None
    period: int | None = None
    magnitude: float | None = None
    direction: int | None = None
    emit_fn: Callable | None = None

    def __post_init__(self):
        if self.kind not in ATTACK_KINDS:
            raise ValueError(f"unknown attack kind {self.kind!r}")
        if not self.bound > 0:
            raise ValueError("declared bound must be > 0")
        if self.kind == "uniform_random":
            if self.lo is None or self.hi is None or not self.lo < self.hi:
                raise ValueError("uniform_random requires lo < hi")
        if self.kind == "relay":
            if self.period is None or self.period < 1:
                raise ValueError("relay requires period >= 1")
            if self.magnitude is None or self.direction is None or self.direction < 0:
                raise ValueError("relay requires magnitude and direction index")
        if self.kind == "custom" and self.emit_fn is None:
            raise ValueError("custom attack requires emit_fn")


@dataclass
class ByzantineNode:
    """One attacker: its spec, own RNG stream, and per-neighbor memory."""

    id: int
    spec: AttackSpec
    dim: int
    rng: np.random.Generator
    fixed_value: np.ndarray | None = None
    last_received: dict = field(default_factory=dict)

    @classmethod
    def create(cls, node_id: int, spec: AttackSpec, dim: int,
               init_lo: float, init_hi: float, master_seed: int) -> "ByzantineNode":
        rng = node_rng(master_seed, node_id)
        fixed = None
        if spec.kind == "fixed_value":
            if spec.value is not None:
                fixed = np.asarray(spec.value, dtype=float)
                if fixed.shape != (dim,):
                    raise ValueError("fixed attack value has wrong dimension")
            else:
                fixed = rng.uniform(init_lo, init_hi, size=dim)
        if spec.kind == "relay" and spec.direction >= dim:
            raise ValueError("relay direction index out of range")
        return cls(node_id, spec, dim, rng, fixed)

    def observe(self, received: dict) -> None:
        """Record this round's incoming messages for use next round."""
        self.last_received.update(received)

    def emit(self, t: int, neighbor_ids) -> dict:
        """Messages for round ``t``, keyed by receiving neighbor."""
        spec = self.spec
        if spec.kind == "fixed_value":
            out = {j: self.fixed_value for j in neighbor_ids}
        elif spec.kind == "uniform_random":
            vec = self.rng.uniform(spec.lo, spec.hi, size=self.dim)
            out = {j: vec for j in neighbor_ids}
        elif spec.kind == "relay":
            out = {}
            spike = t % spec.period == 0
            for j in neighbor_ids:
                base = self.last_received.get(j)
                if base is None:
                    # nothing to echo yet: plain zero vector, no spike
                    out[j] = np.zeros(self.dim)
                elif spike:
                    msg = base.copy()
                    msg[spec.direction] += spec.magnitude
                    out[j] = msg
                else:
                    out[j] = base
        else:
            result = spec.emit_fn(self, t, self.last_received, self.rng)
            if isinstance(result, dict):
                out = {j: np.asarray(result[j], dtype=float) for j in neighbor_ids}
            else:
                vec = np.asarray(result, dtype=float)
                out = {j: vec for j in neighbor_ids}
        for j, msg in out.items():
            if msg.shape != (self.dim,):
                raise ValueError(f"attacker {self.id} emitted wrong dimension to {j}")
            if float(np.linalg.norm(msg)) > spec.bound:
                raise ValueError("attack spec violates declared bound")
        return out
