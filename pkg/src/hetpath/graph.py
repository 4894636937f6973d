"""Immutable heterogeneous directed multigraphs and overlay views.

A :class:`HetGraph` stores typed nodes and typed directed edges.  Node and
edge types are plain strings; every node carries a feature vector (one-hot of
its type when none is given).  Edges may carry an optional feature vector.
Parallel edges between the same ordered node pair are allowed as long as
their edge types differ; self-loops are allowed.

A :class:`GraphView` is a cheap immutable overlay on a base graph: it can add
proxy nodes (clones of a base node, sharing type and features), add edges,
and remove base edges, without ever mutating the base.  All read APIs in this
package accept either a graph or a view; a plain graph behaves exactly like a
view with empty deltas.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Iterable, Iterator, NamedTuple, Sequence

import numpy as np

__all__ = [
    "GraphDataError",
    "EdgeRef",
    "HetGraph",
    "GraphView",
    "load_graph",
    "load_graph_files",
    "parse_node_lines",
    "parse_edge_lines",
    "serialize_graph",
    "PROXY_SUFFIX",
]

PROXY_SUFFIX = "#proxy"


class GraphDataError(ValueError):
    """Raised for malformed or inconsistent graph data."""


class EdgeRef(NamedTuple):
    """A resolved edge of a graph or view.

    ``edge_id`` is stable within one view.  ``origin`` is the base-graph edge
    the entry was copied from (equal to ``edge_id`` for base edges).
    """

    edge_id: int
    src: str
    dst: str
    etype: int
    feat: np.ndarray | None
    origin: int


def _as_feature(values: Sequence[float] | np.ndarray | None) -> np.ndarray | None:
    if values is None:
        return None
    arr = np.asarray(values, dtype=np.float64)
    if arr.ndim != 1:
        raise GraphDataError(f"feature vectors must be 1-D, got shape {arr.shape}")
    arr.setflags(write=False)
    return arr


class HetGraph:
    """A typed directed multigraph with per-node feature vectors.

    Parameters
    ----------
    nodes : iterable of (node_id, type_name, features)
        ``features`` may be ``None``; missing features default to a one-hot
        encoding of the node type (dimension = number of node types).
    edges : iterable of (src_id, dst_id, type_name, features)
        ``features`` may be ``None`` and usually is; the textual edge format
        has no feature column.
    """

    def __init__(
        self,
        nodes: Iterable[tuple[str, str, Sequence[float] | None]],
        edges: Iterable[tuple[str, str, str, Sequence[float] | None]],
    ) -> None:
        node_rows = list(nodes)
        edge_rows = list(edges)

        ids: list[str] = []
        index: dict[str, int] = {}
        type_names: list[str] = []
        type_index: dict[str, int] = {}
        raw_feats: list[np.ndarray | None] = []
        ntypes: list[int] = []
        for row in node_rows:
            nid, tname, feat = row
            if not nid:
                raise GraphDataError("empty node id")
            if nid in index:
                raise GraphDataError(f"duplicate node id {nid!r}")
            if tname not in type_index:
                type_index[tname] = len(type_names)
                type_names.append(tname)
            index[nid] = len(ids)
            ids.append(nid)
            ntypes.append(type_index[tname])
            raw_feats.append(_as_feature(feat))

        n_node_types = len(type_names)
        feats: list[np.ndarray] = []
        for nid, t, f in zip(ids, ntypes, raw_feats):
            if f is None:
                onehot = np.zeros(n_node_types, dtype=np.float64)
                onehot[t] = 1.0
                onehot.setflags(write=False)
                feats.append(onehot)
            else:
                feats.append(f)
        # All nodes of one type must agree on feature dimension.
        dim_by_type: dict[int, int] = {}
        for nid, t, f in zip(ids, ntypes, feats):
            d = dim_by_type.setdefault(t, f.shape[0])
            if f.shape[0] != d:
                raise GraphDataError(
                    f"node {nid!r}: feature dim {f.shape[0]} != {d} for type "
                    f"{type_names[t]!r}"
                )

        etype_names: list[str] = []
        etype_index: dict[str, int] = {}
        src: list[int] = []
        dst: list[int] = []
        etypes: list[int] = []
        efeats: list[np.ndarray | None] = []
        seen: set[tuple[int, int, int]] = set()
        for row in edge_rows:
            s, d, tname, feat = row
            if s not in index:
                raise GraphDataError(f"edge references unknown node {s!r}")
            if d not in index:
                raise GraphDataError(f"edge references unknown node {d!r}")
            if tname not in etype_index:
                etype_index[tname] = len(etype_names)
                etype_names.append(tname)
            key = (index[s], index[d], etype_index[tname])
            if key in seen:
                raise GraphDataError(
                    f"parallel edge {s!r}->{d!r} duplicates type {tname!r}"
                )
            seen.add(key)
            src.append(index[s])
            dst.append(index[d])
            etypes.append(etype_index[tname])
            efeats.append(_as_feature(feat))

        self._ids: tuple[str, ...] = tuple(ids)
        self._index = index
        self._node_types = np.asarray(ntypes, dtype=np.int64)
        self._node_feats: tuple[np.ndarray, ...] = tuple(feats)
        self._node_type_names: tuple[str, ...] = tuple(type_names)
        self._edge_type_names: tuple[str, ...] = tuple(etype_names)
        self._src = np.asarray(src, dtype=np.int64)
        self._dst = np.asarray(dst, dtype=np.int64)
        self._etypes = np.asarray(etypes, dtype=np.int64)
        self._edge_feats: tuple[np.ndarray | None, ...] = tuple(efeats)

        in_adj: list[list[int]] = [[] for _ in ids]
        out_adj: list[list[int]] = [[] for _ in ids]
        for e in range(len(src)):
            out_adj[src[e]].append(e)
            in_adj[dst[e]].append(e)
        self._in: tuple[tuple[int, ...], ...] = tuple(tuple(a) for a in in_adj)
        self._out: tuple[tuple[int, ...], ...] = tuple(tuple(a) for a in out_adj)

        if len(self._node_type_names) + len(self._edge_type_names) <= 2:
            warnings.warn(
                "graph has at most two distinct types in total; it is "
                "effectively homogeneous",
                stacklevel=2,
            )

    # -- structure ---------------------------------------------------------

    @property
    def node_ids(self) -> tuple[str, ...]:
        return self._ids

    @property
    def n_nodes(self) -> int:
        return len(self._ids)

    @property
    def n_edges(self) -> int:
        return len(self._src)

    @property
    def node_type_names(self) -> tuple[str, ...]:
        return self._node_type_names

    @property
    def edge_type_names(self) -> tuple[str, ...]:
        return self._edge_type_names

    def has_node(self, node_id: str) -> bool:
        return node_id in self._index

    def node_type(self, node_id: str) -> int:
        return int(self._node_types[self._index[node_id]])

    def node_type_name(self, node_id: str) -> str:
        return self._node_type_names[self.node_type(node_id)]

    def node_feature(self, node_id: str) -> np.ndarray:
        return self._node_feats[self._index[node_id]]

    def edge_ref(self, edge_id: int) -> EdgeRef:
        return EdgeRef(
            edge_id,
            self._ids[self._src[edge_id]],
            self._ids[self._dst[edge_id]],
            int(self._etypes[edge_id]),
            self._edge_feats[edge_id],
            edge_id,
        )

    def in_edges(self, node_id: str) -> tuple[EdgeRef, ...]:
        return tuple(self.edge_ref(e) for e in self._in[self._index[node_id]])

    def out_edges(self, node_id: str) -> tuple[EdgeRef, ...]:
        return tuple(self.edge_ref(e) for e in self._out[self._index[node_id]])

    def nodes(self) -> Iterator[str]:
        return iter(self._ids)

    def edges(self) -> Iterator[EdgeRef]:
        return (self.edge_ref(e) for e in range(self.n_edges))

    def as_view(self) -> "GraphView":
        return GraphView(self)

    def subgraph(self, node_ids: Iterable[str], edge_ids: Iterable[int]) -> "HetGraph":
        """New graph keeping only the given nodes and edges, ids preserved.

        Preserves the original iteration order of nodes and edges so that
        serialization stays stable.
        """
        keep_nodes = set(node_ids)
        keep_edges = set(edge_ids)
        unknown = keep_nodes - set(self._ids)
        if unknown:
            raise GraphDataError(f"subgraph references unknown nodes {sorted(unknown)}")
        nodes = [
            (nid, self.node_type_name(nid), self.node_feature(nid))
            for nid in self._ids
            if nid in keep_nodes
        ]
        edges = []
        for e in sorted(keep_edges):
            ref = self.edge_ref(e)
            if ref.src not in keep_nodes or ref.dst not in keep_nodes:
                raise GraphDataError(
                    f"subgraph edge {ref.src!r}->{ref.dst!r} has a dropped endpoint"
                )
            edges.append((ref.src, ref.dst, self._edge_type_names[ref.etype], ref.feat))
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            return HetGraph(nodes, edges)

    def __repr__(self) -> str:  # pragma: no cover - debugging aid
        return (
            f"HetGraph({self.n_nodes} nodes, {self.n_edges} edges, "
            f"{len(self._node_type_names)} node types, "
            f"{len(self._edge_type_names)} edge types)"
        )


@dataclass(frozen=True)
class _AddedEdge:
    src: str
    dst: str
    etype: int
    feat: np.ndarray | None
    origin: int


class GraphView:
    """Immutable overlay over a :class:`HetGraph`.

    Proxy nodes clone a base node's type and features under a fresh id.
    Added edges may connect any mix of base and proxy nodes and record the
    base edge they were copied from.  Removed edges disappear from adjacency.
    """

    def __init__(
        self,
        base: HetGraph,
        proxies: Sequence[tuple[str, str]] = (),
        added_edges: Sequence[tuple[str, str, int, np.ndarray | None, int]] = (),
        removed_edges: Iterable[int] = (),
    ) -> None:
        self.base = base
        self._proxy_origin: dict[str, str] = {}
        for pid, origin in proxies:
            if base.has_node(pid) or pid in self._proxy_origin:
                raise GraphDataError(f"proxy id {pid!r} collides with an existing node")
            if not base.has_node(origin):
                raise GraphDataError(f"proxy origin {origin!r} is not a base node")
            self._proxy_origin[pid] = origin

        self._removed = frozenset(int(e) for e in removed_edges)
        for e in self._removed:
            if not 0 <= e < base.n_edges:
                raise GraphDataError(f"removed edge id {e} out of range")

        self._added: list[_AddedEdge] = []
        self._added_in: dict[str, list[int]] = {}
        self._added_out: dict[str, list[int]] = {}
        for src, dst, etype, feat, origin in added_edges:
            if not self.has_node(src):
                raise GraphDataError(f"added edge source {src!r} not in view")
            if not self.has_node(dst):
                raise GraphDataError(f"added edge target {dst!r} not in view")
            if not 0 <= int(origin) < base.n_edges:
                raise GraphDataError(f"added edge origin {origin} out of range")
            eid = base.n_edges + len(self._added)
            self._added.append(_AddedEdge(src, dst, int(etype), feat, int(origin)))
            self._added_out.setdefault(src, []).append(eid)
            self._added_in.setdefault(dst, []).append(eid)

    # -- nodes -------------------------------------------------------------

    @property
    def n_nodes(self) -> int:
        return self.base.n_nodes + len(self._proxy_origin)

    @property
    def n_edges(self) -> int:
        return self.base.n_edges - len(self._removed) + len(self._added)

    @property
    def proxy_ids(self) -> tuple[str, ...]:
        return tuple(self._proxy_origin)

    @property
    def removed_edge_ids(self) -> frozenset[int]:
        return self._removed

    def is_proxy(self, node_id: str) -> bool:
        return node_id in self._proxy_origin

    def proxy_origin(self, node_id: str) -> str:
        """Base node a proxy stands for; identity for base nodes."""
        return self._proxy_origin.get(node_id, node_id)

    def has_node(self, node_id: str) -> bool:
        return self.base.has_node(node_id) or node_id in self._proxy_origin

    def _resolve(self, node_id: str) -> str:
        origin = self._proxy_origin.get(node_id)
        if origin is not None:
            return origin
        if not self.base.has_node(node_id):
            raise KeyError(node_id)
        return node_id

    def node_type(self, node_id: str) -> int:
        return self.base.node_type(self._resolve(node_id))

    def node_type_name(self, node_id: str) -> str:
        return self.base.node_type_name(self._resolve(node_id))

    def node_feature(self, node_id: str) -> np.ndarray:
        return self.base.node_feature(self._resolve(node_id))

    def nodes(self) -> Iterator[str]:
        yield from self.base.nodes()
        yield from self._proxy_origin

    # -- edges -------------------------------------------------------------

    @property
    def node_type_names(self) -> tuple[str, ...]:
        return self.base.node_type_names

    @property
    def edge_type_names(self) -> tuple[str, ...]:
        return self.base.edge_type_names

    def edge_ref(self, edge_id: int) -> EdgeRef:
        m = self.base.n_edges
        if edge_id < m:
            if edge_id in self._removed:
                raise KeyError(f"edge {edge_id} was removed from this view")
            return self.base.edge_ref(edge_id)
        a = self._added[edge_id - m]
        return EdgeRef(edge_id, a.src, a.dst, a.etype, a.feat, a.origin)

    def in_edges(self, node_id: str) -> tuple[EdgeRef, ...]:
        refs: list[EdgeRef] = []
        if self.base.has_node(node_id):
            refs.extend(
                r for r in self.base.in_edges(node_id) if r.edge_id not in self._removed
            )
        elif node_id not in self._proxy_origin:
            raise KeyError(node_id)
        refs.extend(self.edge_ref(e) for e in self._added_in.get(node_id, ()))
        return tuple(refs)

    def out_edges(self, node_id: str) -> tuple[EdgeRef, ...]:
        refs: list[EdgeRef] = []
        if self.base.has_node(node_id):
            refs.extend(
                r for r in self.base.out_edges(node_id) if r.edge_id not in self._removed
            )
        elif node_id not in self._proxy_origin:
            raise KeyError(node_id)
        refs.extend(self.edge_ref(e) for e in self._added_out.get(node_id, ()))
        return tuple(refs)

    def edges(self) -> Iterator[EdgeRef]:
        for e in range(self.base.n_edges):
            if e not in self._removed:
                yield self.base.edge_ref(e)
        m = self.base.n_edges
        for i in range(len(self._added)):
            yield self.edge_ref(m + i)

    def __repr__(self) -> str:  # pragma: no cover - debugging aid
        return (
            f"GraphView(base={self.base.n_nodes}n/{self.base.n_edges}e, "
            f"+{len(self._proxy_origin)} proxies, +{len(self._added)} edges, "
            f"-{len(self._removed)} edges)"
        )


def as_view(g: HetGraph | GraphView) -> GraphView:
    """Coerce a graph to the view interface (no-op for views)."""
    return g.as_view() if isinstance(g, HetGraph) else g


# -- tabular formats -------------------------------------------------------
#
# Node lines:   node_id <TAB> type_name [<TAB> f1;f2;...;fd]
# Edge lines:   src_id <TAB> dst_id <TAB> edge_type_name
# Lines starting with "#" and blank lines are ignored.


def parse_node_lines(lines: Iterable[str]) -> list[tuple[str, str, list[float] | None]]:
    rows: list[tuple[str, str, list[float] | None]] = []
    for i, raw in enumerate(lines, 1):
        line = raw.rstrip("\n")
        if not line.strip() or line.lstrip().startswith("#"):
            continue
        parts = line.split("\t")
        if len(parts) not in (2, 3):
            raise GraphDataError(f"node line {i}: expected 2 or 3 tab-separated fields")
        nid, tname = parts[0], parts[1]
        feat: list[float] | None = None
        if len(parts) == 3 and parts[2] != "":
            try:
                feat = [float(x) for x in parts[2].split(";")]
            except ValueError as exc:
                raise GraphDataError(f"node line {i}: bad feature value ({exc})") from exc
        rows.append((nid, tname, feat))
    return rows


def parse_edge_lines(lines: Iterable[str]) -> list[tuple[str, str, str, None]]:
    rows: list[tuple[str, str, str, None]] = []
    for i, raw in enumerate(lines, 1):
        line = raw.rstrip("\n")
        if not line.strip() or line.lstrip().startswith("#"):
            continue
        parts = line.split("\t")
        if len(parts) != 3:
            raise GraphDataError(f"edge line {i}: expected 3 tab-separated fields")
        rows.append((parts[0], parts[1], parts[2], None))
    return rows


def load_graph(
    node_lines: Iterable[str] | str, edge_lines: Iterable[str] | str
) -> HetGraph:
    """Build a graph from node/edge tables given as text or line iterables."""
    if isinstance(node_lines, str):
        node_lines = node_lines.splitlines()
    if isinstance(edge_lines, str):
        edge_lines = edge_lines.splitlines()
    return HetGraph(parse_node_lines(node_lines), parse_edge_lines(edge_lines))


def load_graph_files(nodes_path: str, edges_path: str) -> HetGraph:
    with open(nodes_path, "r", encoding="utf-8") as fh:
        node_rows = parse_node_lines(fh)
    with open(edges_path, "r", encoding="utf-8") as fh:
        edge_rows = parse_edge_lines(fh)
    return HetGraph(node_rows, edge_rows)


def _format_feature(arr: np.ndarray) -> str:
    return ";".join(repr(float(x)) for x in arr)


def serialize_graph(g: HetGraph | GraphView) -> tuple[str, str]:
    """Render a graph or view back to (node_text, edge_text).

    Proxy nodes appear under their view ids (``origin#proxy``); added edges
    appear as ordinary edges.  ``load_graph`` on the output reproduces the
    flattened structure.
    """
    v = as_view(g)
    node_lines = []
    for nid in v.nodes():
        node_lines.append(
            f"{nid}\t{v.node_type_name(nid)}\t{_format_feature(v.node_feature(nid))}"
        )
    edge_lines = []
    for ref in v.edges():
        edge_lines.append(f"{ref.src}\t{ref.dst}\t{v.edge_type_names[ref.etype]}")
    return "\n".join(node_lines) + "\n", "\n".join(edge_lines) + "\n"
