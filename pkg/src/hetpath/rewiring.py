"""Graph rewiring: detach one influence path's walks from the target.

Given a simple path ``P = <v, v_1, ..., v_L, t>``, :func:`rewire_for_path`
builds an overlay view in which every interior node ``v_i`` gains a proxy
clone (same type and features).  Edges are laid out so that walks faithfully
following ``P`` are diverted into the proxy lane and can never complete the
final hop into ``t``, while walks that leave the path at any point exit the
lane back into the real graph:

* each in-edge ``<u, v_i>`` that is a self-loop or whose node pair lies on
  ``P`` (either direction) is copied as ``<proxy(u), proxy(v_i)>``, with
  ``proxy(v) = v`` and ``proxy(t) = t`` for the endpoints;
* each out-edge ``<v_i, u>`` that is not a self-loop and whose node pair
  lies off ``P`` is copied as ``<proxy(v_i), u>``;
* finally the path's first edge ``<v, v_1>`` is removed from the base.

Copied edges keep the original edge's type and feature and record the
original edge id.  For a single-edge path there are no interior nodes, so
the rewiring is just the removal of that edge.
"""

from __future__ import annotations

from .graph import PROXY_SUFFIX, GraphView, HetGraph
from .walks import SimplePath

__all__ = ["rewire_for_path"]


def rewire_for_path(g: HetGraph | GraphView, path: SimplePath) -> GraphView:
    """Overlay view of ``g`` with ``path``'s walk family blocked.

    ``path`` must be a real simple path of ``g`` with at least one edge.
    The base graph is never mutated; repeated calls with equal inputs
    produce structurally identical views.  A view is accepted only when it
    carries no changes of its own; stacking rewirings is not supported.
    """
    if isinstance(g, GraphView):
        if g.proxy_ids or g.removed_edge_ids or g.n_edges != g.base.n_edges:
            raise ValueError("cannot rewire a view that already carries changes")
        g = g.base
    if path.n_edges < 1:
        raise ValueError("rewiring needs a path with at least one edge")
    path.validate_in(g)

    interior = path.nodes[1:-1]
    proxies = [(f"{nid}{PROXY_SUFFIX}", nid) for nid in interior]
    proxy_of = {nid: pid for pid, nid in proxies}

    def proxy(nid: str) -> str:
        # Path endpoints map to themselves.
        return proxy_of.get(nid, nid)

    on_path: set[tuple[str, str]] = set()
    for a, b in zip(path.nodes, path.nodes[1:]):
        on_path.add((a, b))
        on_path.add((b, a))

    added: list[tuple[str, str, int, object, int]] = []
    for v_i in interior:
        for ref in g.in_edges(v_i):
            u = ref.src
            if u == v_i or (u, v_i) in on_path:
                added.append((proxy(u), proxy(v_i), ref.etype, ref.feat, ref.edge_id))
        for ref in g.out_edges(v_i):
            u = ref.dst
            if u != v_i and (v_i, u) not in on_path:
                added.append((proxy(v_i), u, ref.etype, ref.feat, ref.edge_id))

    return GraphView(
        g,
        proxies=proxies,
        added_edges=added,
        removed_edges=(path.edges[0],),
    )
