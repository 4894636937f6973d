"""Session graph state: a base graph plus non-destructive per-request deltas.

The store validates the init payload once; every predict request is then
served from an :class:`OverlayView` that merges the delta without touching
the base, so consecutive requests always see the identical base graph.

Edge order is part of the contract with the client: a node's incoming
edges are reported in arrival order, base edges first (init payload
order), then delta edges (delta payload order).  Aggregating clients rely
on this order being reproducible.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = ["StoreError", "GraphStore", "OverlayView"]


class StoreError(ValueError):
    """The graph payload or a delta is malformed."""


@dataclass(frozen=True)
class _Edge:
    edge_id: str
    src: str
    dst: str
    etype: str


def _feat_array(raw, where: str) -> np.ndarray:
    if not isinstance(raw, list) or not all(
        isinstance(x, (int, float)) and not isinstance(x, bool) for x in raw
    ):
        raise StoreError(f"{where}: 'feat' must be a list of numbers")
    if not raw:
        raise StoreError(f"{where}: 'feat' must not be empty")
    arr = np.asarray(raw, dtype=np.float64)
    arr.setflags(write=False)
    return arr


class GraphStore:
    """The base graph of one session, as received in the init message."""

    def __init__(self, nodes: list, edges: list) -> None:
        if not isinstance(nodes, list) or not nodes:
            raise StoreError("'nodes' must be a non-empty list")
        if not isinstance(edges, list):
            raise StoreError("'edges' must be a list")
        self.node_type: dict[str, str] = {}
        self.node_feat: dict[str, np.ndarray] = {}
        feat_dim: dict[str, int] = {}
        for i, entry in enumerate(nodes):
            where = f"nodes[{i}]"
            if not isinstance(entry, dict):
                raise StoreError(f"{where}: must be an object")
            nid, ntype = entry.get("id"), entry.get("type")
            if not isinstance(nid, str) or not isinstance(ntype, str):
                raise StoreError(f"{where}: 'id' and 'type' must be strings")
            if nid in self.node_type:
                raise StoreError(f"{where}: duplicate node id {nid!r}")
            feat = _feat_array(entry.get("feat"), where)
            if ntype in feat_dim and feat_dim[ntype] != feat.shape[0]:
                raise StoreError(
                    f"{where}: feature length {feat.shape[0]} conflicts with "
                    f"earlier length {feat_dim[ntype]} for type {ntype!r}"
                )
            feat_dim[ntype] = feat.shape[0]
            self.node_type[nid] = ntype
            self.node_feat[nid] = feat

        self.edges: dict[str, _Edge] = {}
        self.in_edges: dict[str, list[_Edge]] = {}
        for i, entry in enumerate(edges):
            where = f"edges[{i}]"
            e = self._parse_edge(entry, where, known_nodes=self.node_type)
            if e.edge_id in self.edges:
                raise StoreError(f"{where}: duplicate edge id {e.edge_id!r}")
            self.edges[e.edge_id] = e
            self.in_edges.setdefault(e.dst, []).append(e)

        self.feat_dim = feat_dim
        self.edge_types = sorted({e.etype for e in self.edges.values()})

    @staticmethod
    def _parse_edge(entry, where: str, known_nodes) -> _Edge:
        if not isinstance(entry, dict):
            raise StoreError(f"{where}: must be an object")
        eid, src, dst, etype = (
            entry.get("id"),
            entry.get("src"),
            entry.get("dst"),
            entry.get("type"),
        )
        if not all(isinstance(x, str) for x in (eid, src, dst, etype)):
            raise StoreError(f"{where}: 'id', 'src', 'dst', 'type' must be strings")
        if src not in known_nodes:
            raise StoreError(f"{where}: unknown source node {src!r}")
        if dst not in known_nodes:
            raise StoreError(f"{where}: unknown target node {dst!r}")
        return _Edge(eid, src, dst, etype)

    def overlay(self, delta: dict | None) -> "OverlayView":
        return OverlayView(self, delta or {})


class OverlayView:
    """One predict request's graph: base plus added nodes/edges minus removals."""

    def __init__(self, base: GraphStore, delta: dict) -> None:
        if not isinstance(delta, dict):
            raise StoreError("'delta' must be an object")
        unknown = set(delta) - {"add_nodes", "add_edges", "del_edges"}
        if unknown:
            raise StoreError(f"delta has unknown keys {sorted(unknown)}")
        self.base = base
        self.extra_type: dict[str, str] = {}
        self.extra_feat: dict[str, np.ndarray] = {}
        for i, entry in enumerate(delta.get("add_nodes", [])):
            where = f"add_nodes[{i}]"
            if not isinstance(entry, dict):
                raise StoreError(f"{where}: must be an object")
            nid, ntype = entry.get("id"), entry.get("type")
            if not isinstance(nid, str) or not isinstance(ntype, str):
                raise StoreError(f"{where}: 'id' and 'type' must be strings")
            if nid in base.node_type or nid in self.extra_type:
                raise StoreError(f"{where}: node id {nid!r} already exists")
            feat = _feat_array(entry.get("feat"), where)
            if ntype in base.feat_dim and base.feat_dim[ntype] != feat.shape[0]:
                raise StoreError(
                    f"{where}: feature length {feat.shape[0]} conflicts with "
                    f"type {ntype!r}"
                )
            origin = entry.get("origin")
            if origin is not None and origin not in base.node_type:
                raise StoreError(f"{where}: origin {origin!r} is not a base node")
            self.extra_type[nid] = ntype
            self.extra_feat[nid] = feat

        removed = delta.get("del_edges", [])
        if not isinstance(removed, list):
            raise StoreError("'del_edges' must be a list")
        for eid in removed:
            if eid not in base.edges:
                raise StoreError(f"del_edges: unknown edge id {eid!r}")
        self.removed = frozenset(removed)

        self.extra_in: dict[str, list[_Edge]] = {}
        seen_extra: set[str] = set()
        for i, entry in enumerate(delta.get("add_edges", [])):
            where = f"add_edges[{i}]"
            e = GraphStore._parse_edge(entry, where, known_nodes=self._all_nodes())
            if e.edge_id in base.edges or e.edge_id in seen_extra:
                raise StoreError(f"{where}: edge id {e.edge_id!r} already exists")
            seen_extra.add(e.edge_id)
            self.extra_in.setdefault(e.dst, []).append(e)

    def _all_nodes(self) -> dict:
        merged = dict(self.base.node_type)
        merged.update(self.extra_type)
        return merged

    def has_node(self, nid: str) -> bool:
        return nid in self.base.node_type or nid in self.extra_type

    def nodes(self):
        yield from self.base.node_type
        yield from self.extra_type

    def node_type(self, nid: str) -> str:
        if nid in self.extra_type:
            return self.extra_type[nid]
        return self.base.node_type[nid]

    def node_feat(self, nid: str) -> np.ndarray:
        if nid in self.extra_feat:
            return self.extra_feat[nid]
        return self.base.node_feat[nid]

    def incoming(self, nid: str) -> list[_Edge]:
        kept = [
            e
            for e in self.base.in_edges.get(nid, [])
            if e.edge_id not in self.removed
        ]
        kept.extend(self.extra_in.get(nid, []))
        return kept
