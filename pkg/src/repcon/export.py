"""CSV export with stable schemas and exact float round-tripping.

Floats are written with repr(), the shortest digit string that parses back
to the identical double, so identical runs produce identical bytes and
downstream tools can reconstruct states exactly.
"""

from __future__ import annotations

import os


from .engine import RunResult

__all__ = ["write_metrics_csv", "write_reputations_csv", "write_final_states_csv", "write_run_outputs"]


def _fmt(x) -> str:
    return repr(float(x))


def write_metrics_csv(result: RunResult, path) -> None:
    """Columns: round, rmse, dia, d_inf, d_2, disagreement, and — only when
    the graph has byzantine nodes and the protocol produces weights —
    byz_mass_mean, byz_mass_max."""
    with_byz = bool(result.graph.byzantine) and result.protocol.kind in ("arepc", "wla", "repc")
    cols = ["round", "rmse", "dia", "d_inf", "d_2", "disagreement"]
    if with_byz:
        cols += ["byz_mass_mean", "byz_mass_max"]
    lines = [",".join(cols)]
    for row in result.traces:
        vals = [str(row.t), _fmt(row.rmse), _fmt(row.dia), _fmt(row.d_inf),
                _fmt(row.d_2), _fmt(row.disagreement)]
        if with_byz:
            vals += [_fmt(row.byz_mass_mean), _fmt(row.byz_mass_max)]
        lines.append(",".join(vals))
    _write(path, lines)


def write_reputations_csv(result: RunResult, path) -> None:
    """Long format: round, observer, neighbor, weight, neighbor_is_byzantine.
    Header-only for protocols that do not produce weights."""
    lines = ["round,observer,neighbor,weight,neighbor_is_byzantine"]
    byz = result.graph.byzantine
    for t, reps in enumerate(result.reputations):
        if reps is None:
            continue
        for i in result.honest_ids:
            rep = reps[i]
            for j, w in zip(rep.ids, rep.weights):
                lines.append(f"{t},{i},{j},{_fmt(w)},{int(j in byz)}")
    _write(path, lines)


def write_final_states_csv(result: RunResult, path) -> None:
    dim = result.honest_states.shape[2]
    header = "node," + ",".join(f"x{k}" for k in range(dim))
    lines = [header]
    for k, i in enumerate(result.honest_ids):
        row = result.honest_states[-1, k]
        lines.append(str(i) + "," + ",".join(_fmt(v) for v in row))
    _write(path, lines)


def write_run_outputs(result: RunResult, out_dir) -> dict:
    os.makedirs(out_dir, exist_ok=True)
    paths = {
        "metrics": os.path.join(out_dir, "metrics.csv"),
        "reputations": os.path.join(out_dir, "reputations.csv"),
        "final_states": os.path.join(out_dir, "final_states.csv"),
    }
    write_metrics_csv(result, paths["metrics"])
    write_reputations_csv(result, paths["reputations"])
    write_final_states_csv(result, paths["final_states"])
    return paths


def _write(path, lines) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")
