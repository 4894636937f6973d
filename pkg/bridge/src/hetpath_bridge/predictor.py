"""Bundled typed message-passing predictor.

Forward pass, per layer, for every node x:

    h'[x] = relu( W_self[type(x)] @ h[x]
                  + sum over present edge types s, in sorted name order, of
                    mean over incoming s-edges (u -> x), in arrival order,
                    of W_s @ h[u] )

after an input projection per node type and before a linear readout and a
max-shifted softmax at the target.  The update is written to match the
explainer's in-process backend step for step, so that equal weights give
equal probabilities; agreement is covered by cross-implementation tests.

Weights come either from a sidecar file of flat decimal arrays or are
derived from a seed with the same generator and draw order the explainer
uses (input projections for sorted node types, then per-layer self
transforms for sorted node types, then per-layer relation transforms for
sorted edge types, then the readout).
"""

from __future__ import annotations

import json

import numpy as np

__all__ = [
    "PredictorError",
    "ReferencePredictor",
    "derive_weights",
    "load_weights",
]

SIDECAR_FORMAT = "hetpath-mp-weights"


class PredictorError(ValueError):
    """The request cannot be answered with the configured weights."""


def derive_weights(
    classes: int,
    feat_dims: dict[str, int],
    edge_types: list[str],
    layers: int = 2,
    hidden: int = 8,
    seed: int = 0,
    scale: float = 1.0,
) -> dict:
    """Seeded weight tables in the documented draw order."""
    if classes < 2:
        raise PredictorError("need at least two classes")
    if layers < 1:
        raise PredictorError("need at least one layer")
    rng = np.random.default_rng(seed)

    def draw(rows: int, cols: int) -> np.ndarray:
        return rng.standard_normal((rows, cols)) * (scale / np.sqrt(max(cols, 1)))

    w_in = {t: draw(hidden, d) for t, d in sorted(feat_dims.items())}
    w_self = [
        {t: draw(hidden, hidden) for t in sorted(feat_dims)} for _ in range(layers)
    ]
    w_rel = [
        {s: draw(hidden, hidden) for s in sorted(edge_types)} for _ in range(layers)
    ]
    w_out = draw(classes, hidden)
    return {
        "classes": classes,
        "layers": layers,
        "hidden": hidden,
        "feat_dims": dict(feat_dims),
        "w_in": w_in,
        "w_self": w_self,
        "w_rel": w_rel,
        "w_out": w_out,
    }


def _unflatten(entry: dict, where: str) -> np.ndarray:
    try:
        shape = entry["shape"]
        data = entry["data"]
    except (TypeError, KeyError) as exc:
        raise PredictorError(f"{where}: expected an object with shape and data") from exc
    arr = np.asarray(data, dtype=np.float64)
    if arr.size != int(np.prod(shape)):
        raise PredictorError(f"{where}: data length does not match shape {shape}")
    return arr.reshape(shape)


def load_weights(path_or_doc) -> dict:
    """Weight tables from a sidecar file path or an already-parsed document."""
    if isinstance(path_or_doc, (str, bytes)):
        with open(path_or_doc, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
    else:
        doc = path_or_doc
    if not isinstance(doc, dict) or doc.get("format") != SIDECAR_FORMAT:
        raise PredictorError(f"not a {SIDECAR_FORMAT} document")
    if doc.get("version") != 1:
        raise PredictorError(f"unsupported sidecar version {doc.get('version')!r}")
    layers = int(doc["layers"])
    node_types = doc.get("node_types", {})
    edge_types = doc.get("edge_types", {})
    w_in = {}
    w_self = [dict() for _ in range(layers)]
    w_rel = [dict() for _ in range(layers)]
    feat_dims = {}
    for t, entry in node_types.items():
        feat_dims[t] = int(entry["feat_dim"])
        w_in[t] = _unflatten(entry["in_proj"], f"node_types[{t}].in_proj")
        per_layer = entry["self"]
        if len(per_layer) != layers:
            raise PredictorError(f"node_types[{t}].self: expected {layers} matrices")
        for k, m in enumerate(per_layer):
            w_self[k][t] = _unflatten(m, f"node_types[{t}].self[{k}]")
    for s, entry in edge_types.items():
        per_layer = entry["rel"]
        if len(per_layer) != layers:
            raise PredictorError(f"edge_types[{s}].rel: expected {layers} matrices")
        for k, m in enumerate(per_layer):
            w_rel[k][s] = _unflatten(m, f"edge_types[{s}].rel[{k}]")
    w_out = _unflatten(doc["readout"], "readout")
    return {
        "classes": int(doc["classes"]),
        "layers": layers,
        "hidden": int(doc["hidden"]),
        "feat_dims": feat_dims,
        "w_in": w_in,
        "w_self": w_self,
        "w_rel": w_rel,
        "w_out": w_out,
    }


class ReferencePredictor:
    def __init__(self, weights: dict) -> None:
        self.classes = weights["classes"]
        self.layers = weights["layers"]
        self.feat_dims = weights["feat_dims"]
        self.w_in = weights["w_in"]
        self.w_self = weights["w_self"]
        self.w_rel = weights["w_rel"]
        self.w_out = weights["w_out"]

    def predict(self, view, target: str) -> list[float]:
        if not view.has_node(target):
            raise PredictorError(f"unknown target node {target!r}")
        h: dict[str, np.ndarray] = {}
        for nid in view.nodes():
            t = view.node_type(nid)
            if t not in self.w_in:
                raise PredictorError(f"no weights for node type {t!r}")
            feat = view.node_feat(nid)
            if feat.shape[0] != self.w_in[t].shape[1]:
                raise PredictorError(
                    f"node {nid!r}: feature length {feat.shape[0]} does not "
                    f"match weights for type {t!r}"
                )
            h[nid] = self.w_in[t] @ feat
        for layer in range(self.layers):
            nxt: dict[str, np.ndarray] = {}
            for nid in view.nodes():
                t = view.node_type(nid)
                acc = self.w_self[layer][t] @ h[nid]
                by_type: dict[str, list[str]] = {}
                for e in view.incoming(nid):
                    by_type.setdefault(e.etype, []).append(e.src)
                for sname in sorted(by_type):
                    if sname not in self.w_rel[layer]:
                        raise PredictorError(f"no weights for edge type {sname!r}")
                    w = self.w_rel[layer][sname]
                    msgs = [w @ h[u] for u in by_type[sname]]
                    acc = acc + sum(msgs) / len(msgs)
                nxt[nid] = np.maximum(acc, 0.0)
            h = nxt
        logits = self.w_out @ h[target]
        shifted = logits - logits.max()
        e = np.exp(shifted)
        probs = e / e.sum()
        return [float(x) for x in probs]
