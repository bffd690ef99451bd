"""Experiment configuration: TOML loading, validation, and exact echo.

Configs are hand-editable TOML. Parsing failures raise ConfigError with the
offending field path. The echo written next to run outputs is itself a
valid config that parses back to the identical resolved configuration
(floats are serialized exactly), plus an informational [derived] table that
the parser ignores.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field

try:
    import tomllib
except ModuleNotFoundError:  # Python 3.10
    import tomli as tomllib

from .adversary import AttackSpec
from .core import ConfigError
from .engine import InitSpec
from .protocol import ProtocolConfig
from .reputation import ReputationConfig
from .topology import Graph, generate, load_graph

BACKENDS = ("engine", "sockets")


@dataclass(frozen=True)
class GraphGenSpec:
    kind: str
    n_honest: int
    n_byzantine: int
    seed: int
    degree: int | None = None
    p: float | None = None
    chords: int | None = None

    def build(self) -> Graph:
        return generate(self.kind, self.n_honest, self.n_byzantine, self.seed,
                        degree=self.degree, p=self.p, chords=self.chords)


@dataclass(frozen=True)
class AttackBinding:
    """An attack spec bound to explicit node ids, or (nodes=None) acting as
    the default for every otherwise-unbound byzantine node."""

    spec: AttackSpec
    nodes: tuple | None = None


@dataclass(frozen=True)
class ExperimentConfig:
    dimension: int
    rounds: int
    master_seed: int
    backend: str = "engine"
    out_dir: str | None = None
    init_lo: float = -100.0
    init_hi: float = 100.0
    init_overrides: tuple = ()  # of (node id, state tuple)
    graph_path: str | None = None
    graph_gen: GraphGenSpec | None = None
    protocol: ProtocolConfig = field(default=None)
    attacks: tuple = ()  # of AttackBinding

    def init_spec(self) -> InitSpec:
        return InitSpec(self.init_lo, self.init_hi,
                        {i: list(v) for i, v in self.init_overrides})

    def build_graph(self) -> Graph:
        if self.graph_path is not None:
            return load_graph(self.graph_path)
        return self.graph_gen.build()

    def bind_attacks(self, graph: Graph) -> dict:
        """Assign one AttackSpec to every byzantine node.

        Bindings with explicit node lists claim their nodes; at most one
        default binding covers the rest.
        """
        byz = set(graph.byzantine)
        out = {}
        default = None
        for k, binding in enumerate(self.attacks):
            if binding.nodes is None:
                if default is not None:
                    raise ConfigError("attack: multiple default entries (omit 'nodes' at most once)")
                default = binding.spec
                continue
            for node in binding.nodes:
                if node not in byz:
                    raise ConfigError(f"attack[{k}].nodes: node {node} is not byzantine")
                if node in out:
                    raise ConfigError(f"attack[{k}].nodes: node {node} bound twice")
                out[node] = binding.spec
        uncovered = byz - set(out)
        if uncovered:
            if default is None:
                raise ConfigError(
                    f"attack: byzantine nodes {sorted(uncovered)} have no attack spec")
            for node in uncovered:
                out[node] = default
        return out


def _take(table, key, where, kind, required=True, default=None):
    if key not in table:
        if required:
            raise ConfigError(f"{where}.{key}: missing")
        return default
    val = table[key]
    if kind is float and isinstance(val, int) and not isinstance(val, bool):
        val = float(val)
    if kind is not None and not isinstance(val, kind):
        raise ConfigError(f"{where}.{key}: expected {kind.__name__}")
    return val


def parse_config(data: dict, base_dir: str = ".") -> ExperimentConfig:
    exp = _take(data, "experiment", "config", dict)
    dimension = _take(exp, "dimension", "experiment", int)
    rounds = _take(exp, "rounds", "experiment", int)
    master_seed = _take(exp, "master_seed", "experiment", int)
    backend = _take(exp, "backend", "experiment", str, required=False, default="engine")
    if backend not in BACKENDS:
        raise ConfigError(f"experiment.backend: must be one of {BACKENDS}")
    out_dir = _take(exp, "out_dir", "experiment", str, required=False)
    if dimension < 1:
        raise ConfigError("experiment.dimension: must be >= 1")
    if rounds < 1:
        raise ConfigError("experiment.rounds: must be >= 1")

    init = _take(data, "init", "config", dict, required=False, default={})
    init_lo = _take(init, "lo", "init", float, required=False, default=-100.0)
    init_hi = _take(init, "hi", "init", float, required=False, default=100.0)
    if not init_lo < init_hi:
        raise ConfigError("init: lo must be smaller than hi")
    overrides = []
    for k, entry in enumerate(init.get("override", [])):
        node = _take(entry, "node", f"init.override[{k}]", int)
        state = _take(entry, "state", f"init.override[{k}]", list)
        if len(state) != dimension:
            raise ConfigError(f"init.override[{k}].state: wrong dimension")
        overrides.append((node, tuple(float(v) for v in state)))

    gtab = _take(data, "graph", "config", dict)
    graph_path = None
    graph_gen = None
    if "path" in gtab:
        graph_path = os.path.abspath(os.path.join(base_dir, gtab["path"]))
    else:
        kind = _take(gtab, "kind", "graph", str)
        graph_gen = GraphGenSpec(
            kind=kind,
            n_honest=_take(gtab, "n_honest", "graph", int),
            n_byzantine=_take(gtab, "n_byzantine", "graph", int),
            seed=_take(gtab, "seed", "graph", int, required=False, default=master_seed),
            degree=_take(gtab, "degree", "graph", int, required=False),
            p=_take(gtab, "p", "graph", float, required=False),
            chords=_take(gtab, "chords", "graph", int, required=False),
        )

    ptab = _take(data, "protocol", "config", dict)
    kind = _take(ptab, "kind", "protocol", str)
    alpha = _take(ptab, "alpha", "protocol", float)
    reputation = None
    if "reputation" in ptab:
        rtab = ptab["reputation"]
        where = "protocol.reputation"
        try:
            reputation = ReputationConfig(
                loss=_take(rtab, "loss", where, str, required=False, default="coordinate_median"),
                accumulation=_take(rtab, "accumulation", where, str, required=False, default="decay"),
                normalizer=_take(rtab, "normalizer", where, str, required=False, default="sparsemax"),
                eta=_take(rtab, "eta", where, float),
                lam=_take(rtab, "lambda", where, float, required=False, default=0.0),
                horizon=_take(rtab, "horizon", where, int, required=False),
                entmax_alpha=_take(rtab, "entmax_alpha", where, float, required=False),
            )
        except ValueError as exc:
            raise ConfigError(f"{where}: {exc}") from None
    try:
        protocol = ProtocolConfig(
            kind=kind, alpha=alpha, rounds=rounds, reputation=reputation,
            f=_take(ptab, "f", "protocol", int, required=False),
            theta=_take(ptab, "theta", "protocol", float, required=False),
            epsilon=_take(ptab, "epsilon", "protocol", float, required=False),
        )
    except ValueError as exc:
        raise ConfigError(f"protocol: {exc}") from None

    attacks = []
    for k, atab in enumerate(data.get("attack", [])):
        where = f"attack[{k}]"
        akind = _take(atab, "kind", where, str)
        if akind == "custom":
            raise ConfigError(f"{where}.kind: custom attacks are API-only")
        value = atab.get("value")
        if value is not None:
            if len(value) != dimension:
                raise ConfigError(f"{where}.value: wrong dimension")
            value = tuple(float(v) for v in value)
        try:
            spec = AttackSpec(
                kind=akind,
                bound=_take(atab, "bound", where, float),
                value=value,
                lo=_take(atab, "lo", where, float, required=False),
                hi=_take(atab, "hi", where, float, required=False),
                period=_take(atab, "period", where, int, required=False),
                magnitude=_take(atab, "magnitude", where, float, required=False),
                direction=_take(atab, "direction", where, int, required=False),
            )
        except ValueError as exc:
            raise ConfigError(f"{where}: {exc}") from None
        nodes = atab.get("nodes")
        attacks.append(AttackBinding(spec, tuple(nodes) if nodes is not None else None))

    return ExperimentConfig(
        dimension=dimension, rounds=rounds, master_seed=master_seed,
        backend=backend, out_dir=out_dir, init_lo=init_lo, init_hi=init_hi,
        init_overrides=tuple(overrides), graph_path=graph_path,
        graph_gen=graph_gen, protocol=protocol, attacks=tuple(attacks),
    )


def load_config(path) -> ExperimentConfig:
    try:
        with open(path, "rb") as fh:
            data = tomllib.load(fh)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{path}: {exc}") from None
    return parse_config(data, base_dir=os.path.dirname(os.path.abspath(path)))


# --- echo -----------------------------------------------------------------

def _tval(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, int):
        return str(v)
    if isinstance(v, float):
        return repr(v)
    if isinstance(v, str):
        return '"' + v.replace("\\", "\\\\").replace('"', '\\"') + '"'
    if isinstance(v, (list, tuple)):
        return "[" + ", ".join(_tval(x) for x in v) + "]"
    raise TypeError(f"cannot serialize {type(v)}")


def _emit(lines, key, val):
    if val is not None:
        lines.append(f"{key} = {_tval(val)}")


def echo_config(cfg: ExperimentConfig, derived: dict | None = None) -> str:
    lines = ["[experiment]"]
    _emit(lines, "dimension", cfg.dimension)
    _emit(lines, "rounds", cfg.rounds)
    _emit(lines, "master_seed", cfg.master_seed)
    _emit(lines, "backend", cfg.backend)
    _emit(lines, "out_dir", cfg.out_dir)

    lines += ["", "[init]"]
    _emit(lines, "lo", float(cfg.init_lo))
    _emit(lines, "hi", float(cfg.init_hi))
    for node, state in cfg.init_overrides:
        lines += ["", "[[init.override]]"]
        _emit(lines, "node", node)
        _emit(lines, "state", [float(v) for v in state])

    lines += ["", "[graph]"]
    if cfg.graph_path is not None:
        _emit(lines, "path", cfg.graph_path)
    else:
        g = cfg.graph_gen
        _emit(lines, "kind", g.kind)
        _emit(lines, "n_honest", g.n_honest)
        _emit(lines, "n_byzantine", g.n_byzantine)
        _emit(lines, "seed", g.seed)
        _emit(lines, "degree", g.degree)
        _emit(lines, "p", g.p)
        _emit(lines, "chords", g.chords)

    p = cfg.protocol
    lines += ["", "[protocol]"]
    _emit(lines, "kind", p.kind)
    _emit(lines, "alpha", float(p.alpha))
    _emit(lines, "f", p.f)
    _emit(lines, "theta", p.theta)
    _emit(lines, "epsilon", p.epsilon)
    if p.reputation is not None:
        r = p.reputation
        lines += ["", "[protocol.reputation]"]
        _emit(lines, "loss", r.loss)
        _emit(lines, "accumulation", r.accumulation)
        _emit(lines, "normalizer", r.normalizer)
        _emit(lines, "eta", float(r.eta))
        _emit(lines, "lambda", float(r.lam))
        _emit(lines, "horizon", r.horizon)
        _emit(lines, "entmax_alpha", r.entmax_alpha)

    for binding in cfg.attacks:
        a = binding.spec
        lines += ["", "[[attack]]"]
        if binding.nodes is not None:
            _emit(lines, "nodes", list(binding.nodes))
        _emit(lines, "kind", a.kind)
        _emit(lines, "bound", float(a.bound))
        _emit(lines, "value", list(a.value) if a.value is not None else None)
        _emit(lines, "lo", a.lo)
        _emit(lines, "hi", a.hi)
        _emit(lines, "period", a.period)
        _emit(lines, "magnitude", a.magnitude)
        _emit(lines, "direction", a.direction)

    if derived:
        lines += ["", "[derived]"]
        for key in sorted(derived):
            _emit(lines, key, derived[key])
    return "\n".join(lines) + "\n"
