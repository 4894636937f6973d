"""Model backends: the walk-sum oracle, the message-passing net, externals."""

from __future__ import annotations

import numpy as np
import pytest

from hetpath.graph import HetGraph
from hetpath.models import (
    BackendError,
    ExternalModel,
    MessagePassingHGN,
    Prediction,
    WalkSumModel,
)
from hetpath.verify import random_instance

from conftest import make_cite_graph, seeded_rng

try:
    from hypothesis import given, settings
    from hypothesis import strategies as st

    HAVE_HYPOTHESIS = True
except ModuleNotFoundError:  # pragma: no cover - optional dependency
    HAVE_HYPOTHESIS = False


# -- Prediction container ---------------------------------------------------


def test_prediction_validates_inputs():
    Prediction(np.array([0.25, 0.75]))
    with pytest.raises(ValueError):
        Prediction(np.array([0.5, 0.6]))
    with pytest.raises(ValueError):
        Prediction(np.array([-0.1, 1.1]))
    with pytest.raises(ValueError):
        Prediction(np.array([[0.5, 0.5]]))
    with pytest.raises(ValueError):
        Prediction(np.array([]))


def test_prediction_label_breaks_ties_low():
    assert Prediction(np.array([0.5, 0.5])).label == 0
    assert Prediction(np.array([0.2, 0.3, 0.5])).label == 2


# -- walk-sum oracle --------------------------------------------------------


def test_walk_sum_two_routes_agree(cite_graph):
    model = WalkSumModel(n_classes=3, max_walk_len=4, seed=7)
    dp = model.scores(cite_graph, "A")
    brute = model.scores_by_enumeration(cite_graph, "A")
    np.testing.assert_allclose(dp, brute, rtol=0, atol=1e-9)


def test_walk_sum_two_routes_agree_on_random_graphs():
    for seed in range(8):
        g, path = random_instance(seeded_rng(seed))
        model = WalkSumModel(n_classes=3, max_walk_len=3, seed=seed)
        dp = model.scores(g, path.target)
        brute = model.scores_by_enumeration(g, path.target, limit=500_000)
        np.testing.assert_allclose(dp, brute, rtol=0, atol=1e-9)


def test_walk_sum_prediction_is_deterministic(cite_graph):
    a = WalkSumModel(3, 4, seed=11).predict(cite_graph, "A")
    b = WalkSumModel(3, 4, seed=11).predict(make_cite_graph(), "A")
    np.testing.assert_array_equal(a.probs, b.probs)


def test_walk_sum_seed_changes_weights():
    m1, m2 = WalkSumModel(3, 4, seed=1), WalkSumModel(3, 4, seed=2)
    assert m1.node_weight(0, "paper") != m2.node_weight(0, "paper")


def test_walk_sum_weights_positive_unit_interval():
    m = WalkSumModel(4, 3, seed=5)
    for c in range(4):
        for t in ("paper", "author", "venue", "journal"):
            for w in (m.node_weight(c, t), m.edge_weight(c, t)):
                assert 0.0 < w <= 1.0


def test_walk_sum_invariant_under_node_renaming(cite_graph):
    renamed = HetGraph(
        [(f"node:{nid}", cite_graph.node_type_name(nid), cite_graph.node_feature(nid))
         for nid in cite_graph.nodes()],
        [(f"node:{r.src}", f"node:{r.dst}", cite_graph.edge_type_names[r.etype], None)
         for r in cite_graph.edges()],
    )
    model = WalkSumModel(3, 4, seed=3)
    np.testing.assert_array_equal(
        model.predict(cite_graph, "A").probs,
        model.predict(renamed, "node:A").probs,
    )


def test_walk_sum_respects_view_deltas(cite_graph):
    from hetpath.rewiring import rewire_for_path
    from hetpath.walks import SimplePath

    model = WalkSumModel(3, 4, seed=0)
    base = model.scores(cite_graph, "A")
    v = rewire_for_path(cite_graph, SimplePath(("D", "C", "B", "A"), (0, 1, 3)))
    rewired = model.scores(v, "A")
    assert not np.allclose(base, rewired)
    np.testing.assert_allclose(
        rewired, model.scores_by_enumeration(v, "A"), rtol=0, atol=1e-9
    )


def test_walk_sum_rejects_bad_config():
    with pytest.raises(ValueError):
        WalkSumModel(1, 3)
    with pytest.raises(ValueError):
        WalkSumModel(3, 0)


def test_walk_sum_receptive_depth(cite_graph):
    m = WalkSumModel(3, 5, seed=0)
    assert m.receptive_depth == 5
    m.predict(cite_graph, "A")
    assert m.n_parameters > 0


# -- message-passing network ------------------------------------------------


def test_mp_prediction_shape_and_determinism(cite_graph):
    model = MessagePassingHGN.for_graph(cite_graph, n_classes=3, seed=4)
    pred = model.predict(cite_graph, "A")
    assert pred.n_classes == 3
    again = MessagePassingHGN.for_graph(make_cite_graph(), n_classes=3, seed=4)
    np.testing.assert_array_equal(pred.probs, again.predict(cite_graph, "A").probs)


def test_mp_zero_scale_gives_uniform(cite_graph):
    model = MessagePassingHGN.for_graph(cite_graph, n_classes=4, seed=0, scale=0.0)
    pred = model.predict(cite_graph, "A")
    np.testing.assert_allclose(pred.probs, np.full(4, 0.25), atol=1e-12)


def test_mp_depends_on_structure(cite_graph):
    model = MessagePassingHGN.for_graph(cite_graph, n_classes=3, seed=9, scale=1.5)
    base = model.predict(cite_graph, "A").probs
    from hetpath.graph import GraphView

    masked = GraphView(cite_graph, removed_edges=[3, 4])
    assert not np.array_equal(base, model.predict(masked, "A").probs)


def test_mp_invariant_under_node_renaming(cite_graph):
    renamed = HetGraph(
        [(nid * 3, cite_graph.node_type_name(nid), cite_graph.node_feature(nid))
         for nid in cite_graph.nodes()],
        [(r.src * 3, r.dst * 3, cite_graph.edge_type_names[r.etype], None)
         for r in cite_graph.edges()],
    )
    model = MessagePassingHGN.for_graph(cite_graph, n_classes=3, seed=2, scale=1.2)
    np.testing.assert_allclose(
        model.predict(cite_graph, "A").probs,
        model.predict(renamed, "AAA").probs,
        atol=1e-12,
    )


def test_mp_rejects_unknown_types(cite_graph):
    model = MessagePassingHGN.for_graph(cite_graph, n_classes=3, seed=1)
    other = HetGraph(
        [("a", "conference", [1.0]), ("b", "paper", [1.0, 0.0])],
        [("a", "b", "hosts", None)],
    )
    with pytest.raises(BackendError):
        model.predict(other, "b")


def test_mp_receptive_depth_is_layer_count(cite_graph):
    model = MessagePassingHGN.for_graph(cite_graph, n_classes=3, n_layers=3, seed=0)
    assert model.receptive_depth == 3
    assert model.n_parameters > 0


def test_mp_weight_sidecar_roundtrip(cite_graph, tmp_path):
    import json

    model = MessagePassingHGN.for_graph(
        cite_graph, n_classes=3, n_layers=2, hidden=4, seed=6, scale=1.1
    )
    path = tmp_path / "weights.json"
    model.save_weights(str(path))
    doc = json.loads(path.read_text())
    assert doc["format"] == "hetpath-mp-weights"
    assert doc["version"] == 1
    assert doc["classes"] == 3 and doc["layers"] == 2 and doc["hidden"] == 4
    assert set(doc["node_types"]) == {"paper", "author", "venue"}
    assert set(doc["edge_types"]) == {"writes", "cites", "publishes"}
    assert doc["readout"]["shape"] == [3, 4]
    paper = doc["node_types"]["paper"]
    assert paper["feat_dim"] == 2
    assert paper["in_proj"]["shape"] == [4, 2]
    assert len(paper["self"]) == 2
    n_values = len(doc["readout"]["data"])
    assert n_values == 12


# -- external backend over a fake transport ---------------------------------


class _ScriptedTransport:
    """Replays canned replies and records everything sent."""

    def __init__(self, replies):
        self.replies = list(replies)
        self.sent = []
        self.closed = False

    def send(self, obj):
        self.sent.append(obj)

    def recv(self):
        return self.replies.pop(0)

    def close(self):
        self.closed = True


def _handshake_reply():
    return {"ok": True}


def test_external_model_handshake_payload(cite_graph):
    t = _ScriptedTransport([_handshake_reply()])
    ExternalModel(t, cite_graph, n_classes=3)
    init = t.sent[0]
    assert init["op"] == "init"
    assert init["classes"] == 3
    assert [n["id"] for n in init["nodes"]] == ["A", "B", "C", "D", "E"]
    assert init["nodes"][3] == {"id": "D", "type": "author", "feat": [0.5]}
    assert init["edges"][0] == {"id": "0", "src": "D", "dst": "C", "type": "writes"}
    assert len(init["edges"]) == 6


def test_external_model_rejected_init(cite_graph):
    t = _ScriptedTransport([{"ok": False, "error": "nope"}])
    with pytest.raises(BackendError):
        ExternalModel(t, cite_graph, n_classes=3)


def test_external_model_predict_delta(cite_graph):
    from hetpath.rewiring import rewire_for_path
    from hetpath.walks import SimplePath

    t = _ScriptedTransport(
        [_handshake_reply(), {"rid": 1, "probs": [0.2, 0.3, 0.5]}]
    )
    model = ExternalModel(t, cite_graph, n_classes=3)
    v = rewire_for_path(cite_graph, SimplePath(("D", "C", "B", "A"), (0, 1, 3)))
    pred = model.predict(v, "A")
    assert pred.label == 2
    req = t.sent[1]
    assert req["op"] == "predict" and req["rid"] == 1 and req["target"] == "A"
    delta = req["delta"]
    assert {n["id"] for n in delta["add_nodes"]} == {"C#proxy", "B#proxy"}
    assert all(n["origin"] in ("B", "C") for n in delta["add_nodes"])
    assert {e["src"] for e in delta["add_edges"]} <= {"D", "C#proxy", "B#proxy"}
    assert delta["del_edges"] == ["0"]


def test_external_model_validates_replies(cite_graph):
    # Wrong rid echo.
    t = _ScriptedTransport([_handshake_reply(), {"rid": 99, "probs": [0.5, 0.5]}])
    model = ExternalModel(t, cite_graph, n_classes=2)
    with pytest.raises(BackendError):
        model.predict(cite_graph, "A")

    # Error reply.
    t = _ScriptedTransport([_handshake_reply(), {"rid": 1, "error": "boom"}])
    model = ExternalModel(t, cite_graph, n_classes=2)
    with pytest.raises(BackendError):
        model.predict(cite_graph, "A")

    # Wrong probability count.
    t = _ScriptedTransport([_handshake_reply(), {"rid": 1, "probs": [1.0]}])
    model = ExternalModel(t, cite_graph, n_classes=2)
    with pytest.raises(BackendError):
        model.predict(cite_graph, "A")

    # Probabilities that do not normalize.
    t = _ScriptedTransport([_handshake_reply(), {"rid": 1, "probs": [0.9, 0.9]}])
    model = ExternalModel(t, cite_graph, n_classes=2)
    with pytest.raises(BackendError):
        model.predict(cite_graph, "A")


def test_external_model_refuses_foreign_base(cite_graph):
    t = _ScriptedTransport([_handshake_reply()])
    model = ExternalModel(t, cite_graph, n_classes=2)
    with pytest.raises(BackendError):
        model.predict(make_cite_graph(), "A")


def test_external_model_close_sends_shutdown(cite_graph):
    t = _ScriptedTransport([_handshake_reply()])
    model = ExternalModel(t, cite_graph, n_classes=2)
    model.close()
    assert t.sent[-1] == {"op": "shutdown"}
    assert t.closed


# -- cross-backend properties ----------------------------------------------

if HAVE_HYPOTHESIS:

    @st.composite
    def seeds(draw):
        return draw(st.integers(min_value=0, max_value=5_000))

    @given(seeds())
    @settings(max_examples=20, deadline=None)
    def test_walk_sum_probabilities_well_formed(seed):
        g, path = random_instance(seeded_rng(seed))
        model = WalkSumModel(n_classes=3, max_walk_len=3, seed=seed)
        pred = model.predict(g, path.target)
        assert pred.probs.shape == (3,)
        assert abs(pred.probs.sum() - 1.0) < 1e-9

    @given(seeds())
    @settings(max_examples=10, deadline=None)
    def test_mp_probabilities_well_formed(seed):
        g, path = random_instance(seeded_rng(seed))
        model = MessagePassingHGN.for_graph(g, n_classes=3, seed=seed, scale=1.5)
        pred = model.predict(g, path.target)
        assert pred.probs.shape == (3,)
        assert abs(pred.probs.sum() - 1.0) < 1e-9
