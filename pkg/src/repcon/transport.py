"""Multi-process backend: one OS process per node over local stream sockets.

Nodes exchange fixed-layout binary frames in lockstep and the orchestrator
aggregates per-node fragments into the same CSV schema the in-process
engine emits. Seeds are derived per node id exactly as in the engine, so
for identical inputs the two backends produce byte-identical outputs.

Frame layout (little-endian): magic b"ARPC", version u8 (=1), round u64,
sender u32, receiver u32, dim u32, then dim IEEE-754 doubles. Total size
25 + 8*dim bytes.
"""

from __future__ import annotations

import multiprocessing
import os
import socket
import struct
import tempfile
import time
from dataclasses import dataclass

import numpy as np

from .adversary import ByzantineNode
from .core import NeighborStates, TransportError
from .engine import InitSpec, RunResult, build_traces
from .export import write_run_outputs
from .protocol import HonestNode, ProtocolConfig, step
from .reputation import ReputationVector
from .topology import Graph

MAGIC = b"ARPC"
VERSION = 1
_HEADER = struct.Struct("<4sBQIII")
HEADER_SIZE = _HEADER.size  # 25
CONNECT_DEADLINE = 30.0
ROUND_TIMEOUT = 120.0


@dataclass(frozen=True)
class WireFrame:
    round: int
    sender: int
    receiver: int
    payload: np.ndarray

    @property
    def dim(self) -> int:
        return self.payload.shape[0]


def encode_frame(frame: WireFrame) -> bytes:
    head = _HEADER.pack(MAGIC, VERSION, frame.round, frame.sender,
                        frame.receiver, frame.dim)
    return head + frame.payload.astype("<f8").tobytes()


def decode_frame(buf: bytes) -> WireFrame:
    if len(buf) < HEADER_SIZE:
        raise TransportError("frame shorter than header")
    magic, version, rnd, sender, receiver, dim = _HEADER.unpack(buf[:HEADER_SIZE])
    if magic != MAGIC:
        raise TransportError("bad frame magic")
    if version != VERSION:
        raise TransportError(f"unsupported frame version {version}")
    if len(buf) != HEADER_SIZE + 8 * dim:
        raise TransportError("frame length does not match dim")
    payload = np.frombuffer(buf[HEADER_SIZE:], dtype="<f8").astype(float)
    return WireFrame(rnd, sender, receiver, payload)


def _recv_exact(sock: socket.socket, n: int) -> bytes:
    chunks = []
    got = 0
    while got < n:
        chunk = sock.recv(n - got)
        if not chunk:
            raise TransportError("peer disconnected")
        chunks.append(chunk)
        got += len(chunk)
    return b"".join(chunks)


def _recv_frame(sock: socket.socket) -> WireFrame:
    head = _recv_exact(sock, HEADER_SIZE)
    magic, version, rnd, sender, receiver, dim = _HEADER.unpack(head)
    if magic != MAGIC:
        raise TransportError("bad frame magic")
    if version != VERSION:
        raise TransportError(f"unsupported frame version {version}")
    payload = np.frombuffer(_recv_exact(sock, 8 * dim), dtype="<f8").astype(float)
    return WireFrame(rnd, sender, receiver, payload)


def read_rendezvous(path) -> dict:
    out = {}
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line:
                node, addr = line.split(maxsplit=1)
                out[int(node)] = addr
    return out


def _connect_edges(me: int, neighbors, addresses) -> dict:
    """One stream socket per graph edge; the lower id initiates."""
    listener = socket.socket(socket.AF_UNIX, socket.SOCK_STREAM)
    listener.bind(addresses[me])
    expected = [j for j in neighbors if j < me]
    listener.listen(max(len(expected), 1))
    socks = {}
    for j in neighbors:
        if j > me:
            deadline = time.monotonic() + CONNECT_DEADLINE
            while True:
                s = socket.socket(socket.AF_UNIX, socket.SOCK_STREAM)
                try:
                    s.connect(addresses[j])
                    break
                except (FileNotFoundError, ConnectionRefusedError):
                    s.close()
                    if time.monotonic() > deadline:
                        raise TransportError(f"node {me}: cannot reach peer {j}")
                    time.sleep(0.005)
            s.sendall(struct.pack("<I", me))
            socks[j] = s
    listener.settimeout(CONNECT_DEADLINE)
    for _ in expected:
        s, _ = listener.accept()
        (peer,) = struct.unpack("<I", _recv_exact(s, 4))
        if peer not in expected or peer in socks:
            raise TransportError(f"node {me}: unexpected hello from {peer}")
        socks[peer] = s
    listener.close()
    for s in socks.values():
        s.settimeout(ROUND_TIMEOUT)
    return socks


def _exchange_round(me, t, socks, neighbors, outgoing, dim) -> dict:
    """Send this round's frames, then block for one frame per neighbor.

    Frames must carry exactly round t: lockstep tolerates no reordering.
    """
    for j in neighbors:
        socks[j].sendall(encode_frame(WireFrame(t, me, j, outgoing[j])))
    received = {}
    for j in neighbors:
        frame = _recv_frame(socks[j])
        if frame.round != t:
            raise TransportError(
                f"node {me}: frame for round {frame.round} from {frame.sender}, expected {t}")
        if frame.sender != j or frame.receiver != me:
            raise TransportError(f"node {me}: misrouted frame from socket of {j}")
        if frame.dim != dim:
            raise TransportError(f"node {me}: frame dim {frame.dim}, expected {dim}")
        received[j] = frame.payload
    return received


def serve_node(node_id: int, graph: Graph, protocol: ProtocolConfig, attacks: dict,
               init: InitSpec, dim: int, rounds: int, master_seed: int,
               rendezvous_path: str, fragment_path: str | None) -> None:
    """Process main loop for one node (honest or byzantine)."""
    addresses = read_rendezvous(rendezvous_path)
    neighbors = graph.neighbors[node_id]
    socks = _connect_edges(node_id, neighbors, addresses)
    try:
        if node_id in graph.byzantine:
            attacker = ByzantineNode.create(node_id, attacks[node_id], dim,
                                            init.lo, init.hi, master_seed)
            for t in range(rounds):
                outgoing = attacker.emit(t, neighbors)
                received = _exchange_round(node_id, t, socks, neighbors, outgoing, dim)
                attacker.observe(received)
            return
        node = HonestNode.create(node_id, init.state_for(node_id, dim, master_seed),
                                 protocol, neighbors)
        states = np.empty((rounds + 1, dim))
        states[0] = node.state
        rep_hist = np.empty((rounds, len(neighbors))) if protocol.kind in ("arepc", "wla", "repc") else None
        for t in range(rounds):
            outgoing = {j: node.state for j in neighbors}
            received = _exchange_round(node_id, t, socks, neighbors, outgoing, dim)
            rows = np.array([received[j] for j in neighbors])
            new_state, rep = step(node, NeighborStates(neighbors, rows))
            if rep is not None:
                rep_hist[t] = rep.weights
            node.state = new_state
            states[t + 1] = new_state
        if fragment_path is not None:
            if rep_hist is None:
                np.savez(fragment_path, states=states)
            else:
                np.savez(fragment_path, states=states, reputations=rep_hist)
    finally:
        for s in socks.values():
            s.close()


def orchestrate(graph: Graph, protocol: ProtocolConfig, attacks: dict, init: InitSpec,
                dim: int, rounds: int, master_seed: int, out_dir: str) -> dict:
    """Spawn one process per node, wait for completion, aggregate outputs.

    Returns the same CSV paths dict as the engine export. Any child that
    exits nonzero aborts the whole run.
    """
    with tempfile.TemporaryDirectory(prefix="arpc-") as workdir:
        addresses = {i: os.path.join(workdir, f"s{i}") for i in range(graph.n)}
        rendezvous = os.path.join(workdir, "rendezvous")
        with open(rendezvous, "w", encoding="utf-8", newline="\n") as fh:
            for i in range(graph.n):
                fh.write(f"{i} {addresses[i]}\n")
        fragments = {
            i: os.path.join(workdir, f"frag{i}.npz")
            for i in graph.honest
        }
        # fork keeps children independent of the caller's __main__ module;
        # spawn is the fallback where fork is unavailable.
        method = "fork" if "fork" in multiprocessing.get_all_start_methods() else "spawn"
        ctx = multiprocessing.get_context(method)
        procs = {}
        for i in range(graph.n):
            frag = fragments.get(i)
            procs[i] = ctx.Process(
                target=serve_node,
                args=(i, graph, protocol, attacks, init, dim, rounds,
                      master_seed, rendezvous, frag),
                name=f"node-{i}",
            )
        for p in procs.values():
            p.start()
        failed = []
        try:
            for i, p in procs.items():
                p.join(timeout=ROUND_TIMEOUT + CONNECT_DEADLINE)
                if p.exitcode is None:
                    failed.append((i, "timeout"))
                elif p.exitcode != 0:
                    failed.append((i, f"exit {p.exitcode}"))
        finally:
            for p in procs.values():
                if p.is_alive():
                    p.terminate()
                    p.join()
        if failed:
            detail = ", ".join(f"node {i}: {why}" for i, why in failed)
            raise TransportError(f"socket run failed ({detail})")

        honest_ids = tuple(graph.honest)
        states = np.empty((rounds + 1, len(honest_ids), dim))
        with_reps = protocol.kind in ("arepc", "wla", "repc")
        rep_weights = {}
        for k, i in enumerate(honest_ids):
            with np.load(fragments[i]) as data:
                states[:, k, :] = data["states"]
                if with_reps:
                    rep_weights[i] = data["reputations"]
        reputations = []
        for t in range(rounds):
            if not with_reps:
                reputations.append(None)
                continue
            reputations.append({
                i: ReputationVector(graph.neighbors[i], rep_weights[i][t])
                for i in honest_ids
            })
        traces = build_traces(graph, states, reputations)
        result = RunResult(graph, protocol, rounds, master_seed, honest_ids,
                           states, [], reputations, traces)
        return write_run_outputs(result, out_dir)
