"""Predictor numerics, checked against hand-worked forward passes.

The oracle values below are computed with plain Python arithmetic, not by
re-running the implementation, so a transcription error in the layer update
cannot cancel itself out.
"""

import json
import math

import numpy as np
import pytest

from hetpath_bridge.predictor import (
    PredictorError,
    ReferencePredictor,
    derive_weights,
    load_weights,
)
from hetpath_bridge.store import GraphStore


def _flat(arr):
    return {"shape": list(arr.shape), "data": [float(x) for x in arr.ravel()]}


def _sidecar_doc(weights):
    node_types = {
        t: {
            "feat_dim": weights["feat_dims"][t],
            "in_proj": _flat(weights["w_in"][t]),
            "self": [_flat(layer[t]) for layer in weights["w_self"]],
        }
        for t in weights["feat_dims"]
    }
    edge_types = {
        s: {"rel": [_flat(layer[s]) for layer in weights["w_rel"]]}
        for s in weights["w_rel"][0]
    }
    return {
        "format": "hetpath-mp-weights",
        "version": 1,
        "classes": weights["classes"],
        "layers": weights["layers"],
        "hidden": weights["hidden"],
        "node_types": node_types,
        "edge_types": edge_types,
        "readout": _flat(weights["w_out"]),
    }


def _store(edges):
    nodes = [
        {"id": "u", "type": "A", "feat": [2.0]},
        {"id": "v", "type": "A", "feat": [4.0]},
        {"id": "t", "type": "B", "feat": [3.0]},
    ]
    return GraphStore(nodes, edges)


def _hand_weights():
    return {
        "classes": 2,
        "layers": 1,
        "hidden": 1,
        "feat_dims": {"A": 1, "B": 1},
        "w_in": {"A": np.array([[1.0]]), "B": np.array([[0.5]])},
        "w_self": [{"A": np.array([[-1.0]]), "B": np.array([[2.0]])}],
        "w_rel": [{"s": np.array([[1.0]])}],
        "w_out": np.array([[1.0], [0.0]]),
    }


def test_hand_computed_single_edge_forward():
    # u feeds t through one s-edge.  By hand: h_u = 1.0 * 2.0, h_t = 0.5 * 3.0,
    # t after the layer = relu(2.0 * 1.5 + 1.0 * 2.0) = 5.0, logits (5, 0).
    store = _store([{"id": "0", "src": "u", "dst": "t", "type": "s"}])
    predictor = ReferencePredictor(_hand_weights())
    probs = predictor.predict(store.overlay(None), "t")
    expected_hi = math.exp(5.0) / (math.exp(5.0) + 1.0)
    assert probs[0] == pytest.approx(expected_hi, abs=1e-12)
    assert probs[1] == pytest.approx(1.0 - expected_hi, abs=1e-12)


def test_incoming_messages_of_one_type_are_averaged_not_summed():
    # Two s-edges into t carry h values 2.0 and 4.0; their mean 3.0 plus the
    # self term 3.0 gives 6.0.  A sum would give 9.0 instead.
    store = _store(
        [
            {"id": "0", "src": "u", "dst": "t", "type": "s"},
            {"id": "1", "src": "v", "dst": "t", "type": "s"},
        ]
    )
    predictor = ReferencePredictor(_hand_weights())
    probs = predictor.predict(store.overlay(None), "t")
    expected_hi = math.exp(6.0) / (math.exp(6.0) + 1.0)
    assert probs[0] == pytest.approx(expected_hi, abs=1e-12)


def test_negative_preactivations_are_clipped():
    # With no incoming edges, u's own update is relu(-1 * 2.0) = 0, so the
    # readout at u sees a zero vector and the two classes tie at one half.
    store = _store([{"id": "0", "src": "u", "dst": "t", "type": "s"}])
    predictor = ReferencePredictor(_hand_weights())
    probs = predictor.predict(store.overlay(None), "u")
    assert probs == [0.5, 0.5]


def test_derive_weights_is_deterministic():
    kwargs = dict(
        classes=3, feat_dims={"A": 2, "B": 1}, edge_types=["r", "s"], seed=9
    )
    a = derive_weights(**kwargs)
    b = derive_weights(**kwargs)
    assert np.array_equal(a["w_out"], b["w_out"])
    for t in a["w_in"]:
        assert np.array_equal(a["w_in"][t], b["w_in"][t])
    for la, lb in zip(a["w_rel"], b["w_rel"]):
        for s in la:
            assert np.array_equal(la[s], lb[s])


def test_derive_weights_depends_on_seed():
    base = dict(classes=3, feat_dims={"A": 2}, edge_types=["s"])
    a = derive_weights(seed=0, **base)
    b = derive_weights(seed=1, **base)
    assert not np.array_equal(a["w_out"], b["w_out"])


def test_derive_weights_draw_order_is_stable_under_extra_edge_types():
    # Input projections and self transforms are drawn before any relation
    # transform, so adding an edge type must not disturb them; the first
    # relation draw of layer 0 is also shared, later draws shift.
    base = dict(classes=2, feat_dims={"A": 2, "B": 1}, layers=2, seed=4)
    small = derive_weights(edge_types=["r"], **base)
    big = derive_weights(edge_types=["r", "s"], **base)
    for t in small["w_in"]:
        assert np.array_equal(small["w_in"][t], big["w_in"][t])
    for layer_small, layer_big in zip(small["w_self"], big["w_self"]):
        for t in layer_small:
            assert np.array_equal(layer_small[t], layer_big[t])
    assert np.array_equal(small["w_rel"][0]["r"], big["w_rel"][0]["r"])
    assert not np.array_equal(small["w_rel"][1]["r"], big["w_rel"][1]["r"])


def test_scale_zero_gives_uniform_probabilities():
    store = _store([{"id": "0", "src": "u", "dst": "t", "type": "s"}])
    weights = derive_weights(
        classes=4, feat_dims={"A": 1, "B": 1}, edge_types=["s"], scale=0.0
    )
    probs = ReferencePredictor(weights).predict(store.overlay(None), "t")
    assert probs == pytest.approx([0.25] * 4, abs=1e-12)


@pytest.mark.parametrize("bad", [dict(classes=1), dict(layers=0)])
def test_derive_weights_rejects_degenerate_shapes(bad):
    kwargs = dict(classes=2, feat_dims={"A": 1}, edge_types=["s"], layers=1)
    kwargs.update(bad)
    with pytest.raises(PredictorError):
        derive_weights(**kwargs)


def test_unknown_node_type_and_feature_length_are_rejected():
    predictor = ReferencePredictor(_hand_weights())
    odd = GraphStore(
        [{"id": "x", "type": "C", "feat": [1.0]}], []
    )
    with pytest.raises(PredictorError, match="node type 'C'"):
        predictor.predict(odd.overlay(None), "x")
    long_feat = GraphStore(
        [{"id": "x", "type": "A", "feat": [1.0, 2.0]}], []
    )
    with pytest.raises(PredictorError, match="feature length 2"):
        predictor.predict(long_feat.overlay(None), "x")
    store = _store([])
    with pytest.raises(PredictorError, match="unknown target"):
        predictor.predict(store.overlay(None), "ghost")


def test_sidecar_round_trip_preserves_predictions(tmp_path):
    weights = derive_weights(
        classes=3, feat_dims={"A": 1, "B": 1}, edge_types=["s"], seed=3, scale=1.5
    )
    path = tmp_path / "weights.json"
    path.write_text(json.dumps(_sidecar_doc(weights)))
    loaded = load_weights(str(path))
    assert loaded["classes"] == 3
    for t in weights["w_in"]:
        assert np.array_equal(loaded["w_in"][t], weights["w_in"][t])
    store = _store([{"id": "0", "src": "u", "dst": "t", "type": "s"}])
    before = ReferencePredictor(weights).predict(store.overlay(None), "t")
    after = ReferencePredictor(loaded).predict(store.overlay(None), "t")
    assert before == after


def test_load_weights_accepts_parsed_documents():
    weights = derive_weights(classes=2, feat_dims={"A": 1}, edge_types=["s"])
    loaded = load_weights(_sidecar_doc(weights))
    assert np.array_equal(loaded["w_out"], weights["w_out"])


@pytest.mark.parametrize(
    "mutate, fragment",
    [
        (lambda d: d.update(format="something-else"), "not a"),
        (lambda d: d.update(version=2), "version"),
        (lambda d: d["readout"].update(data=[1.0]), "does not match shape"),
        (
            lambda d: d["node_types"]["A"].update(self=[]),
            "expected 2 matrices",
        ),
    ],
)
def test_load_weights_rejects_malformed_sidecars(mutate, fragment):
    doc = _sidecar_doc(derive_weights(classes=2, feat_dims={"A": 1}, edge_types=["s"]))
    mutate(doc)
    with pytest.raises(PredictorError, match=fragment):
        load_weights(doc)
