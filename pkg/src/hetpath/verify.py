"""Machine checks of the structural guarantees behind path rewiring.

Three properties are checked on randomized instances:

1. Walk partition.  Rewiring for a path P should leave, among walks ending
   at the target within the length bound, exactly the walks not associated
   with P (up to node-type/feature and edge-type/feature equivalence).
2. Path distinctness.  Two different simple paths into the same target
   must have different associated-walk families, witnessed by a concrete
   walk no longer than the longer path.
3. Walk-sum consistency.  For the analytic walk-sum model, the score after
   rewiring must equal the base score minus the summed contributions of
   the associated walks.

The literal form of properties 1 and 3 does not hold on arbitrary graphs;
:func:`classify_missing_walk` names the structural feature each observed
counterexample exploits.  The restricted instance family produced by
``restricted=True`` avoids those features (target is a sink, no reverse
edge on the path's first hop, no parallel edge on any path hop), and
there the checks are expected to pass.  The one-sided blocking property,
that no rewired walk is equivalent to a blocked associated walk, holds
without restriction as far as these checks can see.

Checkers accept an injectable rewiring function so a deliberately broken
variant can prove the suite actually discriminates.
"""

from __future__ import annotations

import warnings
from typing import Callable

import numpy as np

from .explain import influence_score
from .graph import GraphView, HetGraph, serialize_graph
from .models import WalkSumModel, _softmax
from .rewiring import rewire_for_path
from .walks import (
    SimplePath,
    Walk,
    WalkLimitExceeded,
    enumerate_walks,
    format_walk,
    is_associated,
    walk_signature,
)

__all__ = [
    "random_instance",
    "random_path",
    "restricted_instance_ok",
    "classify_missing_walk",
    "check_walk_partition",
    "check_blocking",
    "check_path_distinctness",
    "check_walk_sum_consistency",
    "run_suite",
    "make_broken_rewire",
    "SUITE_NAMES",
]

RewireFn = Callable[[HetGraph, SimplePath], GraphView]

WALK_SUM_TOL = 1e-9
TRIAL_WALK_LIMIT = 60_000


# -- randomized instances ---------------------------------------------------


def _random_graph(rng: np.random.Generator, distinct_features: bool) -> HetGraph:
    n = int(rng.integers(4, 13))
    n_ntypes = int(rng.integers(2, min(4, n) + 1))
    n_etypes = int(rng.integers(1, 4))
    ntype_names = [f"T{i}" for i in range(n_ntypes)]
    etype_names = [f"s{i}" for i in range(n_etypes)]

    nodes = []
    for i in range(n):
        tname = ntype_names[i] if i < n_ntypes else ntype_names[int(rng.integers(n_ntypes))]
        if distinct_features:
            feat = [0.0] * n
            feat[i] = 1.0
        else:
            feat = None
        nodes.append((f"n{i}", tname, feat))

    max_edges = 30
    # The distinct (src, dst, type) space bounds how many edges can exist;
    # cap the draw so the fill loop below always terminates.
    capacity = n * n * n_etypes
    target_edges = int(rng.integers(n, max_edges + 1))
    target_edges = min(target_edges, max_edges, capacity)
    seen: set[tuple[str, str, str]] = set()
    edges: list[tuple[str, str, str, None]] = []

    def add(src: str, dst: str, etype: str) -> None:
        if len(edges) >= max_edges or (src, dst, etype) in seen:
            return
        seen.add((src, dst, etype))
        edges.append((src, dst, etype, None))

    attempts = 0
    while len(edges) < target_edges and attempts < 50 * max_edges:
        attempts += 1
        u = f"n{int(rng.integers(n))}"
        roll = rng.random()
        if roll < 0.08:
            add(u, u, etype_names[int(rng.integers(n_etypes))])
            continue
        w = f"n{int(rng.integers(n))}"
        if w == u:
            continue
        et = etype_names[int(rng.integers(n_etypes))]
        add(u, w, et)
        if rng.random() < 0.25:
            add(w, u, etype_names[int(rng.integers(n_etypes))])
        if n_etypes > 1 and rng.random() < 0.05:
            others = [t for t in etype_names if t != et]
            add(u, w, others[int(rng.integers(len(others)))])

    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        return HetGraph(nodes, edges)


def random_path(
    rng: np.random.Generator,
    g: HetGraph,
    target: str,
    max_edges: int = 3,
    bare_interior: bool = False,
) -> SimplePath | None:
    """A random simple path into ``target`` built by walking backward.

    With ``bare_interior`` the path only grows past a node whose outgoing
    edges are its own path edge and self-loops, so no interior node offers
    an exit off the path.
    """
    want = int(rng.integers(1, max_edges + 1))
    nodes = [target]
    edge_ids: list[int] = []
    seen = {target}
    head = target
    for _ in range(want):
        if bare_interior and head != target:
            exits = [
                r for r in g.out_edges(head)
                if r.dst != head and r.edge_id != edge_ids[0]
            ]
            if exits:
                break
        options = [r for r in g.in_edges(head) if r.src not in seen]
        if not options:
            break
        ref = options[int(rng.integers(len(options)))]
        nodes.insert(0, ref.src)
        edge_ids.insert(0, ref.edge_id)
        seen.add(ref.src)
        head = ref.src
    if not edge_ids:
        return None
    return SimplePath(tuple(nodes), tuple(edge_ids))


def restricted_instance_ok(g: HetGraph, path: SimplePath) -> bool:
    """True when the instance avoids all known rewiring failure modes.

    Requires a sink target (no outgoing edges, self-loops included), no
    edge running against the path's first hop, and no parallel edge along
    any hop of the path.  A parallel first-hop edge would give the proxy
    lane a second entrance; walks entering there and escaping back to the
    target duplicate surviving originals, which set comparisons cannot see
    but walk sums can.
    """
    if g.out_edges(path.target):
        return False
    first_src, first_dst = path.nodes[0], path.nodes[1]
    for ref in g.out_edges(first_dst):
        if ref.dst == first_src:
            return False
    for i in range(path.n_edges):
        u, w = path.nodes[i], path.nodes[i + 1]
        if sum(1 for r in g.out_edges(u) if r.dst == w) > 1:
            return False
    return True


def random_instance(
    rng: np.random.Generator,
    restricted: bool = False,
    multiset_safe: bool = False,
    distinct_features: bool = True,
    max_path_edges: int = 3,
    max_attempts: int = 400,
) -> tuple[HetGraph, SimplePath]:
    """A random graph plus a random simple path into a random target.

    ``multiset_safe`` additionally demands bare interior nodes (see
    :func:`random_path`), the condition under which rewiring preserves
    walk multiplicities and not just the walk set.  It implies
    ``restricted``.
    """
    restricted = restricted or multiset_safe
    for _ in range(max_attempts):
        g = _random_graph(rng, distinct_features)
        with_in = [nid for nid in g.nodes() if g.in_edges(nid)]
        if not with_in:
            continue
        if restricted:
            with_in = [nid for nid in with_in if not g.out_edges(nid)]
            if not with_in:
                continue
        target = with_in[int(rng.integers(len(with_in)))]
        path = random_path(rng, g, target, max_path_edges, bare_interior=multiset_safe)
        if path is None:
            continue
        if restricted and not restricted_instance_ok(g, path):
            continue
        return g, path
    raise RuntimeError("could not draw a usable random instance")


# -- counterexample bookkeeping --------------------------------------------


def classify_missing_walk(g: HetGraph, path: SimplePath, walk: Walk) -> str:
    """Name the structural feature that lets this walk slip the rewiring."""
    if path.target in walk.nodes[:-1]:
        return "walk-continues-past-target"
    first_src, first_dst = path.nodes[0], path.nodes[1]
    steps = list(zip(walk.nodes, walk.nodes[1:]))
    if (first_dst, first_src) in steps:
        return "reverse-edge-on-first-hop"
    path_edges = set(path.edges)
    later_pairs = {
        (path.nodes[i], path.nodes[i + 1]) for i in range(1, path.n_edges)
    }
    for eid, step in zip(walk.edges, steps):
        if step in later_pairs and eid not in path_edges:
            return "parallel-edge-on-later-hop"
    return "unclassified"


def _instance_payload(g: HetGraph, path: SimplePath) -> dict:
    node_text, edge_text = serialize_graph(g)
    return {
        "nodes_tsv": node_text,
        "edges_tsv": edge_text,
        "path_nodes": list(path.nodes),
        "path_edges": list(path.edges),
        "target": path.target,
    }


# -- individual property checks --------------------------------------------


def _split_walks(
    g: HetGraph, path: SimplePath, bound: int
) -> tuple[list[Walk], list[Walk]]:
    surviving: list[Walk] = []
    associated: list[Walk] = []
    for w in enumerate_walks(g, path.target, bound, limit=TRIAL_WALK_LIMIT):
        (associated if is_associated(w, path) else surviving).append(w)
    return surviving, associated


def check_walk_partition(
    g: HetGraph,
    path: SimplePath,
    bound: int = 6,
    rewire: RewireFn = rewire_for_path,
) -> dict:
    """Compare surviving walks against the rewired graph's walks exactly."""
    surviving, associated = _split_walks(g, path, bound)
    rewired = rewire(g, path)
    rewired_walks = list(
        enumerate_walks(rewired, path.target, bound, limit=TRIAL_WALK_LIMIT)
    )
    expected = {walk_signature(g, w) for w in surviving}
    got = {walk_signature(rewired, w) for w in rewired_walks}
    missing = [w for w in surviving if walk_signature(g, w) not in got]
    spurious = [w for w in rewired_walks if walk_signature(rewired, w) not in expected]
    ok = not missing and not spurious
    detail = {
        "ok": ok,
        "bound": bound,
        "n_walks_base": len(surviving) + len(associated),
        "n_associated": len(associated),
        "n_walks_rewired": len(rewired_walks),
    }
    if not ok:
        detail["missing"] = [format_walk(w) for w in missing[:10]]
        detail["spurious"] = [format_walk(w) for w in spurious[:10]]
        detail["missing_classes"] = sorted(
            {classify_missing_walk(g, path, w) for w in missing}
        )
        detail["instance"] = _instance_payload(g, path)
    return detail


def check_blocking(
    g: HetGraph,
    path: SimplePath,
    bound: int = 6,
    rewire: RewireFn = rewire_for_path,
) -> dict:
    """No walk of the rewired graph may be equivalent to an associated walk.

    Associated walks whose signature is shared by some surviving walk are
    exempt: the surviving twin is entitled to stay.
    """
    surviving, associated = _split_walks(g, path, bound)
    survivor_sigs = {walk_signature(g, w) for w in surviving}
    blocked_sigs = {
        walk_signature(g, w): w
        for w in associated
        if walk_signature(g, w) not in survivor_sigs
    }
    rewired = rewire(g, path)
    leaked = []
    for w in enumerate_walks(rewired, path.target, bound, limit=TRIAL_WALK_LIMIT):
        sig = walk_signature(rewired, w)
        if sig in blocked_sigs:
            leaked.append((w, blocked_sigs[sig]))
    detail = {"ok": not leaked, "bound": bound, "n_associated": len(associated)}
    if leaked:
        detail["leaked"] = [
            {"rewired_walk": format_walk(a), "associated_walk": format_walk(b)}
            for a, b in leaked[:10]
        ]
        detail["instance"] = _instance_payload(g, path)
    return detail


def check_path_distinctness(
    g: HetGraph, p1: SimplePath, p2: SimplePath
) -> dict:
    """Distinct paths must induce distinct walk families, with a witness."""
    if p1.key() == p2.key():
        raise ValueError("paths must be distinct")
    if p1.target != p2.target:
        raise ValueError("paths must share a target")
    bound = max(p1.n_edges, p2.n_edges)
    witness = None
    for w in enumerate_walks(g, p1.target, bound, limit=TRIAL_WALK_LIMIT):
        if is_associated(w, p1) != is_associated(w, p2):
            witness = w
            break
    detail = {
        "ok": witness is not None,
        "bound": bound,
        "witness": format_walk(witness) if witness else None,
    }
    if witness is None:
        detail["instance"] = _instance_payload(g, p1)
        detail["other_path_nodes"] = list(p2.nodes)
        detail["other_path_edges"] = list(p2.edges)
    return detail


def check_walk_sum_consistency(
    g: HetGraph,
    path: SimplePath,
    bound: int = 6,
    n_classes: int = 3,
    seed: int = 0,
    rewire: RewireFn = rewire_for_path,
) -> dict:
    """Rewired walk-sum score vs. base score minus associated contributions.

    Four comparisons are reported:

    * ``identity_gap``: rewired score (dynamic program, every walk counted)
      against the analytic subtraction,
    * ``base_start_gap``: same, but counting only rewired walks that start
      at an original node, excluding walks born inside the proxy lane,
    * ``influence_gap``: the model-route influence score of the path
      against the influence score derived from the analytic subtraction,
    * ``dual_route_gap``: internal agreement of the model's two scoring
      routes; independent of the rewiring theory entirely.

    ``ok`` covers all but ``base_start_gap``, which is diagnostic: it
    isolates how much of a failure is pure proxy-lane double counting.

    When the two influence routes disagree only on the discrete flip term
    while the winning route's perturbed top class ties the base label to
    within tolerance, the flip is indeterminate (the indicator is
    discontinuous there); the comparison then falls back to the continuous
    probability part and the trial is marked ``flip_tie``.
    """
    model = WalkSumModel(n_classes, bound, seed=seed)
    target = path.target
    rewired = rewire(g, path)
    direct = model.scores(rewired, target)
    direct_enum = model.scores_by_enumeration(rewired, target, limit=TRIAL_WALK_LIMIT)
    route_gap = float(np.max(np.abs(direct - direct_enum)))
    surviving, associated = _split_walks(g, path, bound)
    analytic = model.scores(g, target).copy()
    for w in associated:
        analytic -= model.walk_product(g, w)
    gap = float(np.max(np.abs(direct - analytic)))

    rewired_walks = list(
        enumerate_walks(rewired, target, bound, limit=TRIAL_WALK_LIMIT)
    )
    base_start = np.zeros(n_classes)
    for w in rewired_walks:
        if not rewired.is_proxy(w.nodes[0]):
            base_start += model.walk_product(rewired, w)
    base_start_gap = float(np.max(np.abs(base_start - analytic)))

    model_route = influence_score(model, g, path)
    base_pred = model.predict(g, target)
    analytic_probs = _softmax(analytic)
    model_probs = _softmax(direct)
    y = base_pred.label
    flipped = int(np.argmax(analytic_probs)) != y
    analytic_score = (1.0 if flipped else -1.0) + float(
        base_pred.probs[y] - analytic_probs[y]
    )
    influence_gap = abs(model_route.score - analytic_score)

    # The flip indicator is discontinuous: when a route's perturbed
    # distribution has its top class tied with the base label to within
    # tolerance, either answer is defensible and the two routes may land on
    # opposite sides.  In that case only the continuous probability part is
    # compared; a decisive flip disagreement still fails.
    flip_tie = False
    if influence_gap > WALK_SUM_TOL and model_route.label_flipped != flipped:
        slack = []
        if model_route.label_flipped:
            slack.append(float(model_probs.max() - model_probs[y]))
        if flipped:
            slack.append(float(analytic_probs.max() - analytic_probs[y]))
        if slack and max(slack) <= WALK_SUM_TOL:
            flip_tie = True
            cont_model = model_route.score - (
                1.0 if model_route.label_flipped else -1.0
            )
            cont_analytic = float(base_pred.probs[y] - analytic_probs[y])
            influence_gap = abs(cont_model - cont_analytic)

    ok = (
        gap <= WALK_SUM_TOL
        and route_gap <= WALK_SUM_TOL
        and influence_gap <= WALK_SUM_TOL
    )
    detail = {
        "ok": ok,
        "bound": bound,
        "identity_gap": gap,
        "base_start_gap": base_start_gap,
        "influence_gap": influence_gap,
        "flip_tie": flip_tie,
        "dual_route_gap": route_gap,
        "n_associated": len(associated),
        "n_surviving": len(surviving),
        "n_walks_rewired": len(rewired_walks),
    }
    if not ok:
        got = {walk_signature(rewired, w) for w in rewired_walks}
        missing = [w for w in surviving if walk_signature(g, w) not in got]
        classes = sorted({classify_missing_walk(g, path, w) for w in missing})
        if not classes:
            classes = (
                ["proxy-lane-double-count"]
                if base_start_gap <= WALK_SUM_TOL
                else ["multiplicity-mismatch"]
            )
        detail["missing_classes"] = classes
        detail["instance"] = _instance_payload(g, path)
    return detail


# -- suite runners ----------------------------------------------------------

SUITE_NAMES = ("partition", "blocking", "distinctness", "walk-sum")


def _distinct_path_pair(
    rng: np.random.Generator, g: HetGraph, target: str, tries: int = 40
) -> tuple[SimplePath, SimplePath] | None:
    p1 = random_path(rng, g, target)
    if p1 is None:
        return None
    for _ in range(tries):
        p2 = random_path(rng, g, target)
        if p2 is not None and p2.key() != p1.key():
            return p1, p2
    return None


def run_suite(
    name: str,
    trials: int,
    seed: int,
    restricted: bool = False,
    bound: int = 6,
    rewire: RewireFn = rewire_for_path,
    max_failure_details: int = 5,
) -> dict:
    """Run one named check over fresh random instances; summarize results.

    The summary is JSON-ready: counts, failure classes and up to
    ``max_failure_details`` serialized counterexamples.
    """
    if name not in SUITE_NAMES:
        raise ValueError(f"unknown suite {name!r}; choose from {SUITE_NAMES}")
    rng = np.random.default_rng(seed)
    passed = 0
    skipped = 0
    failures: list[dict] = []
    failure_classes: dict[str, int] = {}
    done = 0
    while done < trials:
        try:
            if name == "distinctness":
                g, p = random_instance(rng, restricted=restricted)
                pair = _distinct_path_pair(rng, g, p.target)
                if pair is None:
                    skipped += 1
                    continue
                detail = check_path_distinctness(g, *pair)
            elif name == "walk-sum":
                g, p = random_instance(
                    rng, restricted=restricted, multiset_safe=restricted
                )
                detail = check_walk_sum_consistency(g, p, bound, rewire=rewire)
            else:
                g, p = random_instance(rng, restricted=restricted)
                if name == "partition":
                    detail = check_walk_partition(g, p, bound, rewire)
                else:
                    detail = check_blocking(g, p, bound, rewire)
        except WalkLimitExceeded:
            skipped += 1
            continue
        done += 1
        if detail["ok"]:
            passed += 1
        else:
            for cls in detail.get("missing_classes", ["unclassified"]):
                failure_classes[cls] = failure_classes.get(cls, 0) + 1
            if len(failures) < max_failure_details:
                failures.append(detail)
    return {
        "suite": name,
        "restricted": restricted,
        "trials": trials,
        "passed": passed,
        "failed": trials - passed,
        "skipped_draws": skipped,
        "bound": bound,
        "seed": seed,
        "failure_classes": failure_classes,
        "failures": failures,
    }


# -- deliberately broken rewirings (suite sensitivity controls) -------------


def make_broken_rewire(kind: str) -> RewireFn:
    """Sabotaged rewiring variants that a sound check suite must flag.

    ``skip-out-rule``: proxies get no outgoing escape edges, so walks that
    leave the path early are lost (partition check must see missing walks).
    ``keep-first-edge``: the path's first edge survives, so associated
    walks survive too (blocking check must see leaks).
    """

    def _rebuild(g: HetGraph, honest: GraphView, keep_edge, keep_removals: bool):
        added = [
            (r.src, r.dst, r.etype, r.feat, r.origin)
            for r in honest.edges()
            if r.edge_id >= g.n_edges and keep_edge(r)
        ]
        return GraphView(
            g,
            proxies=[(pid, honest.proxy_origin(pid)) for pid in honest.proxy_ids],
            added_edges=added,
            removed_edges=sorted(honest.removed_edge_ids) if keep_removals else (),
        )

    if kind == "skip-out-rule":

        def broken(g: HetGraph, path: SimplePath) -> GraphView:
            honest = rewire_for_path(g, path)
            not_escape = lambda r: not (
                honest.is_proxy(r.src) and not honest.is_proxy(r.dst)
            )
            return _rebuild(g, honest, not_escape, keep_removals=True)

        return broken

    if kind == "keep-first-edge":

        def broken(g: HetGraph, path: SimplePath) -> GraphView:
            honest = rewire_for_path(g, path)
            return _rebuild(g, honest, lambda r: True, keep_removals=False)

        return broken

    raise ValueError(f"unknown sabotage kind {kind!r}")
