"""Walks, simple paths, loop erasure, and path-associated walk sets.

A *walk* is an ordered node sequence joined by directed edges; node and edge
repeats, cycles and self-loops are all allowed.  A *simple path* never
repeats a node.  Both record the exact edge ids they traverse, so parallel
edges of different types yield distinct walks over the same node sequence.

A walk ``W`` ending at a target ``t`` is *associated* with a simple path
``P`` (from some cause node ``v`` to ``t``) when ``W`` has a suffix that

1. starts at ``v``, ends at ``t``, and does not touch ``t`` in between;
2. moves only along self-loops or edges whose endpoint pair lies on ``P``
   (in either direction); and
3. erases to exactly ``P`` - node and edge sequences both - after removing
   all loops.

Loop erasure scans forward keeping a stack of visited nodes; revisiting a
node on the stack discards the cycle above it.  The associated set of a path
is precisely the family of walks that deliver the path's information flow,
possibly with detours that backtrack along the path itself.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable

from .graph import GraphView, HetGraph, as_view

__all__ = [
    "SimplePath",
    "Walk",
    "WalkLimitExceeded",
    "enumerate_walks",
    "erase_loops",
    "is_associated",
    "associated_walks",
    "walks_equivalent",
    "walk_signature",
    "format_walk",
]

DEFAULT_WALK_LIMIT = 1_000_000


class WalkLimitExceeded(RuntimeError):
    """Walk enumeration hit the configured output cap."""

    def __init__(self, limit: int, max_edges: int):
        super().__init__(
            f"walk enumeration exceeded {limit} walks below {max_edges} edges"
        )
        self.limit = limit
        self.max_edges = max_edges


@dataclass(frozen=True)
class SimplePath:
    """A directed simple path, stored as node ids plus traversed edge ids.

    The degenerate single-node form (no edges) is allowed as an internal
    anchor for the search frontier; it is not a real explanation path.
    """

    nodes: tuple[str, ...]
    edges: tuple[int, ...]

    def __post_init__(self) -> None:
        if len(self.nodes) == 0:
            raise ValueError("a path needs at least one node")
        if len(self.edges) != len(self.nodes) - 1:
            raise ValueError("edge count must be node count - 1")
        if len(set(self.nodes)) != len(self.nodes):
            raise ValueError(f"path repeats a node: {self.nodes}")

    @property
    def n_edges(self) -> int:
        return len(self.edges)

    @property
    def start(self) -> str:
        return self.nodes[0]

    @property
    def target(self) -> str:
        return self.nodes[-1]

    def key(self) -> tuple[tuple[str, ...], tuple[int, ...]]:
        return (self.nodes, self.edges)

    def validate_in(self, g: HetGraph | GraphView) -> None:
        """Check every step is a real edge of ``g`` joining the stated nodes."""
        v = as_view(g)
        for nid in self.nodes:
            if not v.has_node(nid):
                raise ValueError(f"path node {nid!r} not in graph")
        for i, eid in enumerate(self.edges):
            ref = v.edge_ref(eid)
            if ref.src != self.nodes[i] or ref.dst != self.nodes[i + 1]:
                raise ValueError(
                    f"path edge {eid} joins {ref.src!r}->{ref.dst!r}, expected "
                    f"{self.nodes[i]!r}->{self.nodes[i + 1]!r}"
                )


@dataclass(frozen=True)
class Walk:
    """A directed walk: node ids plus the exact edge ids traversed."""

    nodes: tuple[str, ...]
    edges: tuple[int, ...]

    def __post_init__(self) -> None:
        if len(self.nodes) < 2:
            raise ValueError("a walk has at least two nodes")
        if len(self.edges) != len(self.nodes) - 1:
            raise ValueError("edge count must be node count - 1")

    @property
    def n_edges(self) -> int:
        return len(self.edges)

    @property
    def target(self) -> str:
        return self.nodes[-1]


def format_walk(w: Walk | SimplePath) -> str:
    """Debug form ``v1 -e3-> v2 -e7-> v3``."""
    parts = [w.nodes[0]]
    for eid, nid in zip(w.edges, w.nodes[1:]):
        parts.append(f"-e{eid}-> {nid}")
    return " ".join(parts)


def enumerate_walks(
    g: HetGraph | GraphView,
    target: str,
    max_edges: int,
    limit: int = DEFAULT_WALK_LIMIT,
) -> list[Walk]:
    """All walks ending at ``target`` with 1..``max_edges`` edges.

    Walks are found by extending backwards over incoming edges, so each
    distinct edge-id sequence appears exactly once.  Raises
    :class:`WalkLimitExceeded` once more than ``limit`` walks are produced.
    """
    v = as_view(g)
    if not v.has_node(target):
        raise KeyError(target)
    if max_edges < 1:
        return []
    out: list[Walk] = []
    # frontier holds (reversed node tuple, reversed edge tuple) ending at target
    frontier: list[tuple[tuple[str, ...], tuple[int, ...]]] = [((target,), ())]
    for _ in range(max_edges):
        nxt: list[tuple[tuple[str, ...], tuple[int, ...]]] = []
        for nodes_r, edges_r in frontier:
            head = nodes_r[-1]
            for ref in v.in_edges(head):
                ext = (nodes_r + (ref.src,), edges_r + (ref.edge_id,))
                nxt.append(ext)
                out.append(Walk(ext[0][::-1], ext[1][::-1]))
                if len(out) > limit:
                    raise WalkLimitExceeded(limit, max_edges)
        frontier = nxt
        if not frontier:
            break
    return out


def erase_loops(nodes: tuple[str, ...], edges: tuple[int, ...]) -> tuple[tuple[str, ...], tuple[int, ...]]:
    """Remove all loops from a walk by stack-based forward scanning.

    Returns the surviving (nodes, edges).  Revisiting a node already on the
    stack discards everything above its first pending occurrence, so e.g.
    ``D C B C B A`` erases to ``D C B A`` and ``x x y`` erases to ``x y``.
    The result may degenerate to a single node when the walk is a closed
    cycle.
    """
    stack_nodes: list[str] = [nodes[0]]
    stack_edges: list[int] = []
    pos: dict[str, int] = {nodes[0]: 0}
    for step, node in enumerate(nodes[1:]):
        if node in pos:
            keep = pos[node]
            for dropped in stack_nodes[keep + 1 :]:
                del pos[dropped]
            del stack_nodes[keep + 1 :]
            del stack_edges[keep:]
        else:
            stack_nodes.append(node)
            stack_edges.append(edges[step])
            pos[node] = len(stack_nodes) - 1
    return tuple(stack_nodes), tuple(stack_edges)


def erase_loops_path(w: Walk) -> SimplePath:
    """Loop-erase a walk into a :class:`SimplePath`."""
    nodes, edges = erase_loops(w.nodes, w.edges)
    return SimplePath(nodes, edges)


def _path_pairs(p: SimplePath) -> set[tuple[str, str]]:
    pairs: set[tuple[str, str]] = set()
    for a, b in zip(p.nodes, p.nodes[1:]):
        pairs.add((a, b))
        pairs.add((b, a))
    return pairs


def is_associated(w: Walk, p: SimplePath) -> bool:
    """Does walk ``w`` deliver path ``p``'s flow into ``p.target``?

    True when some suffix of ``w`` starts at ``p.start``, reaches the end of
    ``w`` at ``p.target`` without visiting it in between, moves only along
    self-loops or node pairs of ``p`` (either direction), and loop-erases to
    ``p`` exactly.
    """
    if p.n_edges == 0:
        raise ValueError("the degenerate single-node path has no associated walks")
    if w.target != p.target:
        return False
    pairs = _path_pairs(p)
    n = len(w.nodes)
    for start in range(n - 1):
        if w.nodes[start] != p.start:
            continue
        if any(w.nodes[i] == p.target for i in range(start, n - 1)):
            continue
        ok = True
        for i in range(start, n - 1):
            a, b = w.nodes[i], w.nodes[i + 1]
            if a != b and (a, b) not in pairs:
                ok = False
                break
        if not ok:
            continue
        suffix_nodes = w.nodes[start:]
        suffix_edges = w.edges[start:]
        if erase_loops(suffix_nodes, suffix_edges) == (p.nodes, p.edges):
            return True
    return False


def associated_walks(
    g: HetGraph | GraphView,
    p: SimplePath,
    max_edges: int,
    limit: int = DEFAULT_WALK_LIMIT,
) -> list[Walk]:
    """All walks of ``g`` up to ``max_edges`` edges associated with ``p``.

    Brute force by construction: enumerate every walk ending at the path
    target, then filter with :func:`is_associated`.  This is the oracle the
    rewiring machinery is checked against and must stay independent of it.
    """
    return [
        w
        for w in enumerate_walks(g, p.target, max_edges, limit=limit)
        if is_associated(w, p)
    ]


def _feat_key(arr) -> bytes | None:
    return None if arr is None else arr.tobytes()


def walk_signature(g: HetGraph | GraphView, w: Walk) -> tuple:
    """Hashable type/feature fingerprint used for walk equivalence.

    Two walks (possibly on different views) are equivalent exactly when
    their signatures are equal: same length, and corresponding nodes/edges
    agree on type and feature vector.  Proxy nodes share their origin's type
    and features, so signatures see through rewiring automatically.
    """
    v = as_view(g)
    node_part = tuple(
        (v.node_type(nid), _feat_key(v.node_feature(nid))) for nid in w.nodes
    )
    edge_part = tuple(
        (v.edge_ref(eid).etype, _feat_key(v.edge_ref(eid).feat)) for eid in w.edges
    )
    return (node_part, edge_part)


def walks_equivalent(
    wa: Walk, ga: HetGraph | GraphView, wb: Walk, gb: HetGraph | GraphView
) -> bool:
    """Type/feature-level equality of two walks on their own graphs."""
    return walk_signature(ga, wa) == walk_signature(gb, wb)


def signature_set(
    g: HetGraph | GraphView, walks: Iterable[Walk]
) -> set[tuple]:
    """Set of walk signatures, for equivalence-level set comparisons."""
    return {walk_signature(g, w) for w in walks}
