"""Fidelity: explanation subgraphs under a sparsity cap and drop metrics."""

from __future__ import annotations

import numpy as np
import pytest

from hetpath.explain import Explanation, SearchConfig, search_topk
from hetpath.fidelity import (
    bottom_k,
    evaluate_fidelity,
    explanation_mask_view,
    induce_explanation_graph,
)
from hetpath.models import MessagePassingHGN, WalkSumModel
from hetpath.verify import random_instance
from hetpath.walks import SimplePath

from conftest import seeded_rng

P_LONG = SimplePath(("D", "C", "B", "A"), (0, 1, 3))
P_SHORT = SimplePath(("D", "C", "A"), (0, 4))
P_SIDE = SimplePath(("E", "B", "A"), (5, 3))


# -- subgraph construction under the node cap -------------------------------


def test_union_of_paths_within_cap(cite_graph):
    sub, used = induce_explanation_graph(cite_graph, [P_LONG, P_SHORT], "A", max_nodes=4)
    assert used == [P_LONG, P_SHORT]
    assert set(sub.nodes()) == {"A", "B", "C", "D"}
    assert {(r.src, r.dst) for r in sub.edges()} == {
        ("D", "C"),
        ("C", "B"),
        ("B", "A"),
        ("C", "A"),
    }


def test_cap_counts_the_target(cite_graph):
    # P_SHORT alone touches D, C, A; with the target that is 3 nodes.
    _, used = induce_explanation_graph(cite_graph, [P_SHORT], "A", max_nodes=3)
    assert used == [P_SHORT]
    _, used = induce_explanation_graph(cite_graph, [P_SHORT], "A", max_nodes=2)
    assert used == []


def test_paths_admitted_in_order_until_first_overflow(cite_graph):
    # P_LONG needs 4 nodes, so under a cap of 3 it is rejected immediately
    # and, by the stop rule, nothing after it is considered.
    _, used = induce_explanation_graph(cite_graph, [P_LONG, P_SHORT], "A", max_nodes=3)
    assert used == []
    # In the other order P_SHORT fits first.
    _, used = induce_explanation_graph(cite_graph, [P_SHORT, P_LONG], "A", max_nodes=3)
    assert used == [P_SHORT]


def test_empty_path_list_keeps_only_target(cite_graph):
    sub, used = induce_explanation_graph(cite_graph, [], "A", max_nodes=5)
    assert used == []
    assert list(sub.nodes()) == ["A"]
    assert sub.n_edges == 0


def test_mask_view_matches_induced_subgraph_for_models(cite_graph):
    view, used_v = explanation_mask_view(cite_graph, [P_LONG, P_SHORT], "A", max_nodes=4)
    sub, used_s = induce_explanation_graph(cite_graph, [P_LONG, P_SHORT], "A", max_nodes=4)
    assert used_v == used_s
    # The view blanks exactly the non-explanation edges.
    assert {r.edge_id for r in view.edges()} == {0, 1, 3, 4}

    # Both constructions give identical predictions: nodes left isolated
    # by the mask cannot influence the target.
    for model in (
        WalkSumModel(n_classes=3, max_walk_len=4, seed=1),
        MessagePassingHGN.for_graph(cite_graph, n_classes=3, seed=1, scale=1.3),
    ):
        np.testing.assert_allclose(
            model.predict(view, "A").probs,
            model.predict(sub, "A").probs,
            atol=1e-12,
        )


def test_mask_view_matches_on_random_instances():
    for seed in range(6):
        g, path = random_instance(seeded_rng(seed))
        model = WalkSumModel(n_classes=3, max_walk_len=3, seed=seed)
        view, used_v = explanation_mask_view(g, [path], path.target, max_nodes=6)
        sub, used_s = induce_explanation_graph(g, [path], path.target, max_nodes=6)
        assert [p.key() for p in used_v] == [p.key() for p in used_s]
        if not used_v:
            continue
        np.testing.assert_allclose(
            model.predict(view, path.target).probs,
            model.predict(sub, path.target).probs,
            atol=1e-12,
        )


# -- drop metrics -----------------------------------------------------------


def _samples_for(g, model, targets, k=3, max_edges=3):
    out = []
    for t in targets:
        results, _ = search_topk(
            model, g, t, SearchConfig(k=k, beam_width=6, branch_factor=6, seed=0)
        )
        out.append((t, [e.path for e in results], model.predict(g, t).label))
    return out


def test_fidelity_report_shape(cite_graph):
    model = WalkSumModel(n_classes=3, max_walk_len=4, seed=0)
    samples = _samples_for(cite_graph, model, ["A", "B"])
    report = evaluate_fidelity(model, cite_graph, samples, max_nodes=4)
    assert report.n_samples == 2
    assert report.n_skipped == 0
    assert -1.0 <= report.accuracy_drop <= 1.0
    assert -1.0 <= report.probability_drop <= 1.0
    assert len(report.samples) == 2
    d = report.as_dict()
    assert set(d) >= {"accuracy_drop", "probability_drop", "n_samples", "max_nodes"}


def test_full_coverage_explanation_has_zero_drop(cite_graph):
    # Explanations covering every edge leave the masked graph identical to
    # the original, so both drops must vanish.
    model = WalkSumModel(n_classes=3, max_walk_len=4, seed=0)
    cover = [
        SimplePath(("D", "C", "B", "A"), (0, 1, 3)),
        SimplePath(("B", "C", "A"), (2, 4)),
        SimplePath(("E", "B", "A"), (5, 3)),
    ]
    label = model.predict(cite_graph, "A").label
    report = evaluate_fidelity(model, cite_graph, [("A", cover, label)], max_nodes=5)
    assert report.accuracy_drop == 0.0
    assert abs(report.probability_drop) < 1e-12


def test_require_correct_skips_mispredicted(cite_graph):
    model = WalkSumModel(n_classes=3, max_walk_len=4, seed=0)
    y = model.predict(cite_graph, "A").label
    wrong = (y + 1) % 3
    samples = [("A", [P_LONG], wrong), ("B", [SimplePath(("C", "B"), (1,))], None)]
    report = evaluate_fidelity(model, cite_graph, samples, max_nodes=4)
    assert report.n_samples == 1
    assert report.n_skipped == 1
    relaxed = evaluate_fidelity(
        model, cite_graph, samples, max_nodes=4, require_correct=False
    )
    assert relaxed.n_samples == 2


def test_all_samples_skipped_is_an_error(cite_graph):
    model = WalkSumModel(n_classes=3, max_walk_len=4, seed=0)
    y = model.predict(cite_graph, "A").label
    wrong = (y + 1) % 3
    with pytest.raises(ValueError):
        evaluate_fidelity(model, cite_graph, [("A", [P_LONG], wrong)], max_nodes=4)


def test_bottom_k_takes_worst_ranked(cite_graph):
    model = WalkSumModel(n_classes=3, max_walk_len=4, seed=0)
    results, trace = search_topk(
        model, cite_graph, "A", SearchConfig(k=10, beam_width=10, branch_factor=10)
    )
    worst, underfilled = bottom_k(cite_graph, trace.evaluated, k=3)
    assert len(worst) == 3
    assert not underfilled
    top_scores = [e.score for e in results[:3]]
    assert min(top_scores) >= max(w.score for w in worst) or len(trace.evaluated) < 6


def test_bottom_k_underfill_flag(cite_graph):
    only = [Explanation(P_LONG, 0.5, True, True)]
    worst, underfilled = bottom_k(cite_graph, only, k=3)
    assert len(worst) == 1
    assert underfilled
