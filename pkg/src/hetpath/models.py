"""Model backends: the black-box prediction interface and implementations.

All backends answer the same question - class probabilities for one target
node given a graph or view - and promise determinism, insensitivity to node
renaming (only types, features and structure matter), and information flow
along directed edges only.

``WalkSumModel`` is an analytically tractable oracle: the class score of a
target is the sum, over all walks ending there within a length bound, of the
product of per-type node and edge weights along the walk.  It is implemented
twice (dynamic program and brute-force enumeration) and the two routes are
required to agree; this redundancy is deliberate and must not be collapsed.

``MessagePassingHGN`` is a small typed message-passing network with mean
aggregation per edge type plus a per-node-type self transform, used as the
realistic subject model.

``ExternalModel`` forwards predictions to an out-of-process predictor over a
newline-delimited JSON protocol (see :mod:`hetpath.cli` docs for the wire
format); graphs are sent once at session start and each request carries only
the overlay delta.
"""

from __future__ import annotations

import hashlib
import json
import socket
import subprocess
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .graph import GraphView, HetGraph, as_view

__all__ = [
    "Prediction",
    "BlackBoxModel",
    "WalkSumModel",
    "MessagePassingHGN",
    "ExternalModel",
    "BackendError",
    "StdioTransport",
    "TcpTransport",
]

PROB_SUM_TOL = 1e-9


class BackendError(RuntimeError):
    """An external prediction backend misbehaved (protocol, I/O, values)."""


@dataclass(frozen=True)
class Prediction:
    """Class probabilities for one target node.

    ``label`` breaks argmax ties toward the lowest class id.
    """

    probs: np.ndarray

    def __post_init__(self) -> None:
        arr = np.asarray(self.probs, dtype=np.float64)
        if arr.ndim != 1 or arr.size == 0:
            raise ValueError("probs must be a non-empty 1-D array")
        if np.any(arr < 0):
            raise ValueError("probabilities must be non-negative")
        if abs(float(arr.sum()) - 1.0) > PROB_SUM_TOL:
            raise ValueError(f"probabilities sum to {arr.sum()!r}, not 1")
        arr.setflags(write=False)
        object.__setattr__(self, "probs", arr)

    @property
    def n_classes(self) -> int:
        return int(self.probs.shape[0])

    @property
    def label(self) -> int:
        return int(np.argmax(self.probs))


class BlackBoxModel:
    """Interface every backend implements.

    ``receptive_depth`` is a hint for how many hops can influence a
    prediction; the path search uses it as its default depth bound.
    """

    n_classes: int

    def predict(self, g: HetGraph | GraphView, target: str) -> Prediction:
        raise NotImplementedError

    @property
    def receptive_depth(self) -> int:
        raise NotImplementedError

    @property
    def n_parameters(self) -> int:
        raise NotImplementedError


def _softmax(scores: np.ndarray) -> np.ndarray:
    shifted = scores - scores.max()
    e = np.exp(shifted)
    return e / e.sum()


def _unit_interval_weight(seed: int, kind: str, class_id: int, type_name: str) -> float:
    """Deterministic weight in (0, 1] from a stable hash of the coordinates.

    Strictly positive so that no walk product can vanish and mask an
    enumeration bug through cancellation.
    """
    payload = f"{seed}|{kind}|{class_id}|{type_name}".encode()
    h = int.from_bytes(hashlib.blake2b(payload, digest_size=8).digest(), "big")
    return (h + 1) / (2**64 + 1) if h else 1.0


class WalkSumModel(BlackBoxModel):
    """Walk-sum scoring oracle over typed walks.

    score_c(t) = sum over walks W ending at t with 1..max_walk_len edges of
    prod(node weights along W) * prod(edge weights along W), where weights
    depend on (class, type, seed) only.  Probabilities are the softmax of
    the class scores.
    """

    def __init__(self, n_classes: int, max_walk_len: int, seed: int = 0) -> None:
        if n_classes < 2:
            raise ValueError("need at least two classes")
        if max_walk_len < 1:
            raise ValueError("max_walk_len must be positive")
        self.n_classes = n_classes
        self.max_walk_len = max_walk_len
        self.seed = seed
        self._cache: dict[tuple[str, int, str], float] = {}

    def node_weight(self, class_id: int, type_name: str) -> float:
        key = ("node", class_id, type_name)
        if key not in self._cache:
            self._cache[key] = _unit_interval_weight(self.seed, *key)
        return self._cache[key]

    def edge_weight(self, class_id: int, type_name: str) -> float:
        key = ("edge", class_id, type_name)
        if key not in self._cache:
            self._cache[key] = _unit_interval_weight(self.seed, *key)
        return self._cache[key]

    # -- scoring, route 1: dynamic program ---------------------------------

    def scores(self, g: HetGraph | GraphView, target: str) -> np.ndarray:
        """Class scores via a length-layered dynamic program over in-edges."""
        v = as_view(g)
        if not v.has_node(target):
            raise KeyError(target)
        node_list = list(v.nodes())
        idx = {nid: i for i, nid in enumerate(node_list)}
        C = self.n_classes
        alpha = np.empty((C, len(node_list)))
        for i, nid in enumerate(node_list):
            tname = v.node_type_name(nid)
            for c in range(C):
                alpha[c, i] = self.node_weight(c, tname)
        edges = []
        for ref in v.edges():
            tname = v.edge_type_names[ref.etype]
            beta = np.array([self.edge_weight(c, tname) for c in range(C)])
            edges.append((idx[ref.src], idx[ref.dst], beta))

        total = np.zeros(C)
        state = alpha.copy()  # walks with 0 edges ending at each node
        for _ in range(self.max_walk_len):
            nxt = np.zeros_like(state)
            for s, d, beta in edges:
                nxt[:, d] += beta * state[:, s]
            state = alpha * nxt
            total += state[:, idx[target]]
        return total

    # -- scoring, route 2: brute-force enumeration -------------------------

    def walk_product(self, g: HetGraph | GraphView, walk) -> np.ndarray:
        """Per-class product of weights along one walk (all node occurrences)."""
        v = as_view(g)
        C = self.n_classes
        out = np.ones(C)
        for nid in walk.nodes:
            tname = v.node_type_name(nid)
            for c in range(C):
                out[c] *= self.node_weight(c, tname)
        for eid in walk.edges:
            tname = v.edge_type_names[v.edge_ref(eid).etype]
            for c in range(C):
                out[c] *= self.edge_weight(c, tname)
        return out

    def scores_by_enumeration(
        self, g: HetGraph | GraphView, target: str, limit: int = 1_000_000
    ) -> np.ndarray:
        """Class scores by explicitly enumerating and multiplying out walks."""
        from .walks import enumerate_walks

        total = np.zeros(self.n_classes)
        for w in enumerate_walks(g, target, self.max_walk_len, limit=limit):
            total += self.walk_product(g, w)
        return total

    def predict(self, g: HetGraph | GraphView, target: str) -> Prediction:
        return Prediction(_softmax(self.scores(g, target)))

    @property
    def receptive_depth(self) -> int:
        return self.max_walk_len

    @property
    def n_parameters(self) -> int:
        return len(self._cache)


class MessagePassingHGN(BlackBoxModel):
    """Typed message-passing network with per-edge-type mean aggregation.

    Layer update for node x:

        h'["x"] = relu( W_self[type(x)] @ h[x]
                        + sum over edge types s of
                          mean over in-edges (u -s-> x) of W_s @ h[u] )

    followed by a linear readout and softmax at the target.  Weights are
    drawn once from a seeded generator in a fixed order (sorted type names),
    so equal seeds give equal models.  ``scale=0`` yields the uniform
    predictor.
    """

    def __init__(
        self,
        n_classes: int,
        node_feat_dims: Mapping[str, int],
        edge_type_names: Sequence[str],
        n_layers: int = 2,
        hidden: int = 8,
        seed: int = 0,
        scale: float = 1.0,
    ) -> None:
        if n_classes < 2:
            raise ValueError("need at least two classes")
        if n_layers < 1:
            raise ValueError("need at least one layer")
        self.n_classes = n_classes
        self.n_layers = n_layers
        self.hidden = hidden
        self.seed = seed
        self.scale = scale
        self._feat_dims = dict(node_feat_dims)
        self._edge_types = sorted(edge_type_names)

        rng = np.random.default_rng(seed)

        def draw(rows: int, cols: int) -> np.ndarray:
            w = rng.standard_normal((rows, cols)) * (scale / np.sqrt(max(cols, 1)))
            w.setflags(write=False)
            return w

        self.w_in = {t: draw(hidden, d) for t, d in sorted(self._feat_dims.items())}
        self.w_self = [
            {t: draw(hidden, hidden) for t in sorted(self._feat_dims)}
            for _ in range(n_layers)
        ]
        self.w_rel = [
            {s: draw(hidden, hidden) for s in self._edge_types} for _ in range(n_layers)
        ]
        self.w_out = draw(n_classes, hidden)

    @classmethod
    def for_graph(
        cls,
        g: HetGraph,
        n_classes: int,
        n_layers: int = 2,
        hidden: int = 8,
        seed: int = 0,
        scale: float = 1.0,
    ) -> "MessagePassingHGN":
        dims = {
            t: 0 for t in g.node_type_names
        }
        for nid in g.nodes():
            dims[g.node_type_name(nid)] = g.node_feature(nid).shape[0]
        return cls(
            n_classes,
            dims,
            g.edge_type_names,
            n_layers=n_layers,
            hidden=hidden,
            seed=seed,
            scale=scale,
        )

    def predict(self, g: HetGraph | GraphView, target: str) -> Prediction:
        v = as_view(g)
        if not v.has_node(target):
            raise KeyError(target)
        h: dict[str, np.ndarray] = {}
        for nid in v.nodes():
            tname = v.node_type_name(nid)
            if tname not in self.w_in:
                raise BackendError(f"model has no weights for node type {tname!r}")
            feat = v.node_feature(nid)
            if feat.shape[0] != self.w_in[tname].shape[1]:
                raise BackendError(
                    f"node {nid!r}: feature dim {feat.shape[0]} does not match "
                    f"model dim {self.w_in[tname].shape[1]} for type {tname!r}"
                )
            h[nid] = self.w_in[tname] @ feat
        for layer in range(self.n_layers):
            nxt: dict[str, np.ndarray] = {}
            for nid in v.nodes():
                tname = v.node_type_name(nid)
                acc = self.w_self[layer][tname] @ h[nid]
                by_type: dict[str, list[np.ndarray]] = {}
                for ref in v.in_edges(nid):
                    sname = v.edge_type_names[ref.etype]
                    by_type.setdefault(sname, []).append(ref.src)
                for sname in sorted(by_type):
                    if sname not in self.w_rel[layer]:
                        raise BackendError(f"model has no weights for edge type {sname!r}")
                    w = self.w_rel[layer][sname]
                    msgs = [w @ h[u] for u in by_type[sname]]
                    acc = acc + sum(msgs) / len(msgs)
                nxt[nid] = np.maximum(acc, 0.0)
            h = nxt
        logits = self.w_out @ h[target]
        return Prediction(_softmax(logits))

    @property
    def receptive_depth(self) -> int:
        return self.n_layers

    @property
    def n_parameters(self) -> int:
        total = sum(w.size for w in self.w_in.values()) + self.w_out.size
        for layer in range(self.n_layers):
            total += sum(w.size for w in self.w_self[layer].values())
            total += sum(w.size for w in self.w_rel[layer].values())
        return int(total)

    # -- weight exchange ----------------------------------------------------

    def export_weights(self) -> dict:
        """Weights as nested flat decimal arrays (shared-seed sidecar format)."""

        def flat(w: np.ndarray) -> dict:
            return {"shape": list(w.shape), "data": [float(x) for x in w.ravel()]}

        return {
            "format": "hetpath-mp-weights",
            "version": 1,
            "classes": self.n_classes,
            "layers": self.n_layers,
            "hidden": self.hidden,
            "seed": self.seed,
            "node_types": {
                t: {
                    "feat_dim": self._feat_dims[t],
                    "in_proj": flat(self.w_in[t]),
                    "self": [flat(self.w_self[k][t]) for k in range(self.n_layers)],
                }
                for t in sorted(self._feat_dims)
            },
            "edge_types": {
                s: {"rel": [flat(self.w_rel[k][s]) for k in range(self.n_layers)]}
                for s in self._edge_types
            },
            "readout": flat(self.w_out),
        }

    def save_weights(self, path: str) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.export_weights(), fh)
            fh.write("\n")


# -- external backend ------------------------------------------------------


class _Transport:
    def send(self, obj: dict) -> None:
        raise NotImplementedError

    def recv(self) -> dict:
        raise NotImplementedError

    def close(self) -> None:  # pragma: no cover - overridden
        pass


class StdioTransport(_Transport):
    """Talk to a child process over its stdin/stdout, one JSON per line."""

    def __init__(self, argv: Sequence[str]) -> None:
        try:
            self.proc = subprocess.Popen(
                list(argv),
                stdin=subprocess.PIPE,
                stdout=subprocess.PIPE,
                text=True,
                bufsize=1,
            )
        except OSError as exc:
            raise BackendError(f"cannot start bridge process: {exc}") from exc

    def send(self, obj: dict) -> None:
        if self.proc.poll() is not None:
            raise BackendError("bridge process exited")
        try:
            self.proc.stdin.write(json.dumps(obj, separators=(",", ":")) + "\n")
            self.proc.stdin.flush()
        except (BrokenPipeError, OSError) as exc:
            raise BackendError(f"bridge pipe broken: {exc}") from exc

    def recv(self) -> dict:
        line = self.proc.stdout.readline()
        if not line:
            raise BackendError("bridge closed the stream without answering")
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as exc:
            raise BackendError(f"bridge sent malformed JSON: {line!r}") from exc
        if not isinstance(obj, dict):
            raise BackendError(f"bridge sent a non-object: {obj!r}")
        return obj

    def close(self) -> None:
        try:
            if self.proc.poll() is None:
                self.proc.stdin.close()
                self.proc.wait(timeout=5)
        except Exception:
            self.proc.kill()


class TcpTransport(_Transport):
    """Talk to a listening bridge over a stream socket."""

    def __init__(self, host: str, port: int, timeout: float = 30.0) -> None:
        try:
            self.sock = socket.create_connection((host, port), timeout=timeout)
        except OSError as exc:
            raise BackendError(f"cannot connect to bridge at {host}:{port}: {exc}") from exc
        self.rfile = self.sock.makefile("r", encoding="utf-8")
        self.wfile = self.sock.makefile("w", encoding="utf-8")

    def send(self, obj: dict) -> None:
        try:
            self.wfile.write(json.dumps(obj, separators=(",", ":")) + "\n")
            self.wfile.flush()
        except OSError as exc:
            raise BackendError(f"bridge socket write failed: {exc}") from exc

    def recv(self) -> dict:
        try:
            line = self.rfile.readline()
        except (OSError, socket.timeout) as exc:
            raise BackendError(f"bridge socket read failed: {exc}") from exc
        if not line:
            raise BackendError("bridge closed the connection without answering")
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as exc:
            raise BackendError(f"bridge sent malformed JSON: {line!r}") from exc
        if not isinstance(obj, dict):
            raise BackendError(f"bridge sent a non-object: {obj!r}")
        return obj

    def close(self) -> None:
        try:
            self.sock.close()
        except OSError:
            pass


def _node_payload(v: GraphView, nid: str) -> dict:
    return {
        "id": nid,
        "type": v.node_type_name(nid),
        "feat": [float(x) for x in v.node_feature(nid)],
    }


class ExternalModel(BlackBoxModel):
    """Prediction backend living in another process.

    The base graph is transferred once during the session handshake; each
    predict request then carries only the delta of the view against that
    base (proxy nodes, added edges, removed edge ids).
    """

    def __init__(
        self,
        transport: _Transport,
        base: HetGraph,
        n_classes: int,
        depth_hint: int = 3,
    ) -> None:
        self._transport = transport
        self._base = base
        self.n_classes = n_classes
        self._depth = depth_hint
        self._rid = 0
        bv = base.as_view()
        init = {
            "op": "init",
            "nodes": [_node_payload(bv, nid) for nid in base.nodes()],
            "edges": [
                {
                    "id": str(ref.edge_id),
                    "src": ref.src,
                    "dst": ref.dst,
                    "type": base.edge_type_names[ref.etype],
                }
                for ref in base.edges()
            ],
            "classes": n_classes,
        }
        self._transport.send(init)
        reply = self._transport.recv()
        if reply.get("ok") is not True:
            raise BackendError(f"bridge rejected init: {reply!r}")

    def predict(self, g: HetGraph | GraphView, target: str) -> Prediction:
        v = as_view(g)
        if v.base is not self._base:
            raise BackendError(
                "external backend is bound to a different base graph; "
                "open a new session for a new graph"
            )
        delta: dict = {"add_nodes": [], "add_edges": [], "del_edges": []}
        for pid in v.proxy_ids:
            entry = _node_payload(v, pid)
            entry["origin"] = v.proxy_origin(pid)
            delta["add_nodes"].append(entry)
        for ref in v.edges():
            if ref.edge_id >= self._base.n_edges:
                delta["add_edges"].append(
                    {
                        "id": str(ref.edge_id),
                        "src": ref.src,
                        "dst": ref.dst,
                        "type": v.edge_type_names[ref.etype],
                    }
                )
        delta["del_edges"] = [str(e) for e in sorted(v.removed_edge_ids)]
        self._rid += 1
        self._transport.send(
            {"op": "predict", "rid": self._rid, "target": target, "delta": delta}
        )
        reply = self._transport.recv()
        if "error" in reply:
            raise BackendError(f"bridge error: {reply['error']}")
        if reply.get("rid") != self._rid:
            raise BackendError(
                f"bridge answered rid {reply.get('rid')!r} to request {self._rid}"
            )
        probs = reply.get("probs")
        if not isinstance(probs, list) or len(probs) != self.n_classes:
            raise BackendError(f"bridge sent bad probs: {probs!r}")
        try:
            return Prediction(np.asarray(probs, dtype=np.float64))
        except ValueError as exc:
            raise BackendError(f"bridge probabilities invalid: {exc}") from exc

    def close(self) -> None:
        try:
            self._transport.send({"op": "shutdown"})
        except BackendError:
            pass
        self._transport.close()

    @property
    def receptive_depth(self) -> int:
        return self._depth

    @property
    def n_parameters(self) -> int:
        return 0
