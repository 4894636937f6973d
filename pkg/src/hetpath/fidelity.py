"""Fidelity evaluation: do the found paths carry the prediction?

The explanation graph for a target is the union of the selected paths'
nodes and edges plus the target itself, subject to a sparsity cap on the
node count.  Paths are consumed in the order given (callers pass them best
first); the first path that would push the graph past the cap stops the
intake.

Two aggregate metrics compare predictions on the full graph and on the
explanation graph across a set of samples:

* accuracy drop: fraction of samples whose predicted label changes,
* probability drop: mean decrease of the original label's probability.

Both are zero when the explanation graph is the whole graph.  By default
only samples the model predicts correctly are counted, mirroring the usual
evaluation protocol; pass ``require_correct=False`` (or omit true labels)
to rate every sample against the model's own prediction.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

from .explain import Explanation, ranking_key
from .graph import GraphView, HetGraph, as_view
from .models import BlackBoxModel
from .walks import SimplePath

__all__ = [
    "DEFAULT_MAX_NODES",
    "FidelityReport",
    "induce_explanation_graph",
    "explanation_mask_view",
    "evaluate_fidelity",
    "bottom_k",
]

DEFAULT_MAX_NODES = 5


def _kept_union(
    paths: Sequence[SimplePath], target: str, max_nodes: int
) -> tuple[set[str], set[int], list[SimplePath]]:
    if max_nodes < 1:
        raise ValueError("the node cap must allow at least the target")
    nodes = {target}
    edges: set[int] = set()
    used: list[SimplePath] = []
    for p in paths:
        if p.target != target:
            raise ValueError(f"path {p.nodes} does not end at {target!r}")
        widened = nodes | set(p.nodes)
        if len(widened) > max_nodes:
            break
        nodes = widened
        edges.update(p.edges)
        used.append(p)
    return nodes, edges, used


def induce_explanation_graph(
    g: HetGraph,
    paths: Sequence[SimplePath],
    target: str,
    max_nodes: int = DEFAULT_MAX_NODES,
) -> tuple[HetGraph, list[SimplePath]]:
    """Standalone explanation graph and the prefix of paths that fit."""
    nodes, edges, used = _kept_union(paths, target, max_nodes)
    return g.subgraph(sorted(nodes), sorted(edges)), used


def explanation_mask_view(
    g: HetGraph,
    paths: Sequence[SimplePath],
    target: str,
    max_nodes: int = DEFAULT_MAX_NODES,
) -> tuple[GraphView, list[SimplePath]]:
    """The same explanation graph expressed as edge removals on the base.

    Nodes outside the explanation keep their entry but lose every incident
    edge, so no information can flow from them; for models that only read
    the target's incoming flow this predicts identically to the standalone
    subgraph, while staying expressible as a delta for external backends.
    """
    _, edges, used = _kept_union(paths, target, max_nodes)
    removed = [ref.edge_id for ref in g.edges() if ref.edge_id not in edges]
    return GraphView(g, removed_edges=removed), used


@dataclass
class FidelityReport:
    accuracy_drop: float
    probability_drop: float
    n_samples: int
    n_skipped: int
    max_nodes: int
    samples: list[dict] = field(default_factory=list)

    def as_dict(self) -> dict:
        return {
            "accuracy_drop": self.accuracy_drop,
            "probability_drop": self.probability_drop,
            "n_samples": self.n_samples,
            "n_skipped": self.n_skipped,
            "max_nodes": self.max_nodes,
            "samples": self.samples,
        }


def evaluate_fidelity(
    model: BlackBoxModel,
    g: HetGraph,
    samples: Sequence[tuple[str, Sequence[SimplePath], int | None]],
    max_nodes: int = DEFAULT_MAX_NODES,
    require_correct: bool = True,
) -> FidelityReport:
    """Score explanation quality over ``(target, paths, label)`` samples.

    ``label`` may be None when no ground truth exists; such samples are
    rated against the model's own base prediction.
    """
    if not samples:
        raise ValueError("fidelity evaluation needs at least one sample")
    acc_terms: list[float] = []
    prob_terms: list[float] = []
    detail: list[dict] = []
    skipped = 0
    for target, paths, label in samples:
        base = model.predict(g, target)
        if require_correct and label is not None and base.label != label:
            skipped += 1
            continue
        y = base.label if label is None else int(label)
        masked, used = explanation_mask_view(g, paths, target, max_nodes)
        reduced = model.predict(masked, target)
        acc = 0.0 if reduced.label == y else 1.0
        drop = float(base.probs[y] - reduced.probs[y])
        acc_terms.append(acc)
        prob_terms.append(drop)
        detail.append(
            {
                "target": target,
                "label": y,
                "base_label": base.label,
                "reduced_label": reduced.label,
                "label_changed": bool(acc),
                "probability_drop": drop,
                "paths_given": len(paths),
                "paths_used": len(used),
            }
        )
    if not acc_terms:
        raise ValueError(
            "no sample survived the correct-prediction filter; "
            "pass require_correct=False to rate all samples"
        )
    return FidelityReport(
        accuracy_drop=sum(acc_terms) / len(acc_terms),
        probability_drop=sum(prob_terms) / len(prob_terms),
        n_samples=len(acc_terms),
        n_skipped=skipped,
        max_nodes=max_nodes,
        samples=detail,
    )


def bottom_k(
    g: HetGraph | GraphView, evaluated: Sequence[Explanation], k: int
) -> tuple[list[Explanation], bool]:
    """The k worst-scoring candidates a search evaluated, worst first.

    Useful as the contrast set for fidelity comparisons.  The second
    return value flags underfill: fewer than k candidates existed.
    """
    if k < 1:
        raise ValueError("k must be positive")
    v = as_view(g)
    ranked = sorted(evaluated, key=lambda e: ranking_key(v, e))
    worst = ranked[-k:][::-1]
    return worst, len(worst) < k
