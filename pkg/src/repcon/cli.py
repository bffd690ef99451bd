"""Command-line entry points: run experiments, verify bounds, make graphs.

Exit codes: 0 ok, 1 check failure, 2 usage/config error.
"""

from __future__ import annotations

import argparse
import dataclasses
import os
import sys

import numpy as np

from . import verify as V
from .config import ConfigError, ExperimentConfig, echo_config, load_config
from .core import TransportError
from .engine import run
from .export import write_run_outputs
from .topology import check_assumptions, generate, graph_stats, save_graph, separation_threshold
from .transport import orchestrate


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except (TransportError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="repcon",
        description="Reputation-weighted Byzantine-resilient consensus simulator",
    )
    sub = parser.add_subparsers(required=True)

    p_run = sub.add_parser("run", help="run an experiment from a config file")
    p_run.add_argument("config")
    p_run.add_argument("--seed", type=int, help="override the master seed")
    p_run.add_argument("--backend", choices=("engine", "sockets"))
    p_run.add_argument("--out-dir", help="override the output directory")
    p_run.set_defaults(func=cmd_run)

    p_ver = sub.add_parser("verify", help="run a fixture and check the analytic bounds")
    p_ver.add_argument("config")
    p_ver.add_argument("--seed", type=int)
    p_ver.add_argument("--pairs", type=int, default=1000,
                       help="random state pairs for the Lipschitz checks")
    p_ver.set_defaults(func=cmd_verify)

    p_gen = sub.add_parser("gen-topology", help="generate an admissible labeled graph")
    p_gen.add_argument("kind", choices=("random_regular", "erdos_renyi", "ring_plus_chords"))
    p_gen.add_argument("--n-honest", type=int, required=True)
    p_gen.add_argument("--n-byzantine", type=int, required=True)
    p_gen.add_argument("--seed", type=int, required=True)
    p_gen.add_argument("--out", required=True)
    p_gen.add_argument("--degree", type=int)
    p_gen.add_argument("--p", type=float)
    p_gen.add_argument("--chords", type=int)
    p_gen.set_defaults(func=cmd_gen_topology)
    return parser


def _resolve(args) -> ExperimentConfig:
    cfg = load_config(args.config)
    updates = {}
    if getattr(args, "seed", None) is not None:
        updates["master_seed"] = args.seed
    if getattr(args, "backend", None) is not None:
        updates["backend"] = args.backend
    if getattr(args, "out_dir", None) is not None:
        updates["out_dir"] = args.out_dir
    if updates:
        cfg = dataclasses.replace(cfg, **updates)
    return cfg


def _derived_info(cfg: ExperimentConfig, graph) -> dict:
    stats = graph_stats(graph)
    derived = {
        "delta_min": stats.delta_min,
        "lambda2": float(stats.lambda2),
        "max_byz_neighbors": stats.max_byz_neighbors,
    }
    if cfg.protocol.reputation is not None:
        derived["separation_threshold"] = separation_threshold(graph, cfg.protocol.reputation.eta)
    return derived


def cmd_run(args) -> int:
    cfg = _resolve(args)
    out_dir = cfg.out_dir or "out"
    graph = cfg.build_graph()
    attacks = cfg.bind_attacks(graph)
    report = check_assumptions(graph)
    if not report.all_pass:
        bad = sorted(i for i, ok in report.majority_honest.items() if not ok)
        print(f"warning: assumptions violated (honest_connected={report.honest_connected}, "
              f"majority failures at {bad}); running anyway", file=sys.stderr)
    derived = _derived_info(cfg, graph)
    for key, val in derived.items():
        print(f"{key} = {val}")

    if cfg.backend == "sockets":
        paths = orchestrate(graph, cfg.protocol, attacks, cfg.init_spec(),
                            cfg.dimension, cfg.rounds, cfg.master_seed, out_dir)
    else:
        result = run(graph, cfg.protocol, attacks, cfg.init_spec(), cfg.dimension,
                     cfg.rounds, cfg.master_seed, enforce_assumptions=False)
        paths = write_run_outputs(result, out_dir)
    echo_path = os.path.join(out_dir, "config_echo.toml")
    with open(echo_path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(echo_config(cfg, derived))
    paths["config_echo"] = echo_path
    for name, path in sorted(paths.items()):
        print(f"{name}: {path}")
    return 0


def cmd_verify(args) -> int:
    cfg = _resolve(args)
    graph = cfg.build_graph()
    attacks = cfg.bind_attacks(graph)
    rep_cfg = cfg.protocol.reputation
    result = run(graph, cfg.protocol, attacks, cfg.init_spec(), cfg.dimension,
                 cfg.rounds, cfg.master_seed, enforce_assumptions=False)

    reports = []
    if cfg.protocol.kind == "arepc":
        if rep_cfg.loss == "coordinate_median":
            reports.append(V.check_honest_loss_bound(result))
            memoryless = rep_cfg.accumulation == "decay" and rep_cfg.lam == 0.0
            if rep_cfg.normalizer == "sparsemax" and memoryless:
                reports.append(V.check_truncation_bound(result))
                reports.append(V.check_honest_dominance(result))
            if rep_cfg.normalizer == "softmax" and memoryless:
                reports.append(V.check_softmax_influence(result))
        if rep_cfg.loss == "geometric_median":
            reports.append(V.check_geomedian_loss_bound(result))
        if rep_cfg.normalizer == "sparsemax":
            thr = separation_threshold(graph, rep_cfg.eta)
            byz_values = {b: np.full(cfg.dimension, 10.0 * thr) for b in graph.byzantine}
            reports.append(V.check_consensus_weights(
                graph, rep_cfg.eta, np.zeros(cfg.dimension), byz_values))
    eta = rep_cfg.eta if rep_cfg is not None else 0.005
    reports.extend(V.check_lipschitz(graph, eta, args.pairs, cfg.master_seed,
                                     dim=cfg.dimension))

    print(f"{'check':<24}{'examined':>10}{'skipped':>9}{'max_violation':>16}"
          f"{'tolerance':>12}  result")
    ok = True
    for rep in reports:
        status = "PASS" if rep.passed else "FAIL"
        ok = ok and rep.passed
        viol = "none" if rep.max_violation == -np.inf else f"{rep.max_violation:.3e}"
        print(f"{rep.name:<24}{rep.examined:>10}{rep.skipped:>9}{viol:>16}"
              f"{rep.tolerance:>12.0e}  {status}")
        if rep.note:
            print(f"    note: {rep.note}")
        if not rep.passed and rep.witness is not None:
            print(f"    worst at (node, round) = {rep.witness}")
    return 0 if ok else 1


def cmd_gen_topology(args) -> int:
    graph = generate(args.kind, args.n_honest, args.n_byzantine, args.seed,
                     degree=args.degree, p=args.p, chords=args.chords)
    save_graph(graph, args.out)
    stats = graph_stats(graph)
    print(f"wrote {args.out}: n={graph.n} byzantine={sorted(graph.byzantine)} "
          f"delta_min={stats.delta_min} lambda2={stats.lambda2:.6f}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
