"""Protocol loop: newline-delimited JSON requests, one session per stream.

Message flow: exactly one ``init`` (graph + class count), then any number
of ``predict`` requests, then ``shutdown`` or end of stream.  Every
well-formed predict gets exactly one reply carrying its request id, either
``{"rid": n, "probs": [...]}`` or ``{"rid": n, "error": "..."}``.
Failures before a request id is known are answered with ``"rid": null``.
The server never lets a bad request or a predictor exception kill the
session; only stream loss or shutdown ends it.
"""

from __future__ import annotations

import json
import logging
import math
import socket
from typing import Callable

from .predictor import PredictorError, ReferencePredictor, derive_weights
from .store import GraphStore, StoreError

__all__ = ["ProtocolError", "serve_session", "serve_stdio", "serve_tcp"]

log = logging.getLogger(__name__)

PROB_SUM_TOL = 1e-9

PredictorFactory = Callable[[GraphStore, int], ReferencePredictor]


class ProtocolError(ValueError):
    """The client broke the message flow contract."""


def seeded_factory(
    seed: int, layers: int = 2, hidden: int = 8, scale: float = 1.0
) -> PredictorFactory:
    """Factory deriving weights from the session's own graph schema."""

    def make(store: GraphStore, classes: int) -> ReferencePredictor:
        weights = derive_weights(
            classes,
            store.feat_dim,
            store.edge_types,
            layers=layers,
            hidden=hidden,
            seed=seed,
            scale=scale,
        )
        return ReferencePredictor(weights)

    return make


def fixed_factory(predictor: ReferencePredictor) -> PredictorFactory:
    """Factory handing out one pre-built predictor (sidecar weights)."""

    def make(store: GraphStore, classes: int) -> ReferencePredictor:
        if classes != predictor.classes:
            raise ProtocolError(
                f"init announces {classes} classes but weights have "
                f"{predictor.classes}"
            )
        return make_validated(store, predictor)

    def make_validated(store: GraphStore, p: ReferencePredictor) -> ReferencePredictor:
        for t, d in store.feat_dim.items():
            if t not in p.feat_dims:
                raise ProtocolError(f"weights lack node type {t!r}")
            if p.feat_dims[t] != d:
                raise ProtocolError(
                    f"weights expect {p.feat_dims[t]}-dim features for type "
                    f"{t!r}, graph has {d}"
                )
        return p

    return make


def _validated_probs(probs: list[float], classes: int) -> list[float]:
    if len(probs) != classes:
        raise PredictorError(f"predictor produced {len(probs)} probabilities")
    if any(not math.isfinite(p) or p < 0 for p in probs):
        raise PredictorError("predictor produced negative or non-finite values")
    if abs(sum(probs) - 1.0) > PROB_SUM_TOL:
        raise PredictorError(f"predictor probabilities sum to {sum(probs)!r}")
    return probs


def serve_session(rfile, wfile, factory: PredictorFactory) -> None:
    """Process one client session from ``rfile``, answering on ``wfile``."""

    def reply(obj: dict) -> None:
        wfile.write(json.dumps(obj, separators=(",", ":")) + "\n")
        wfile.flush()

    store: GraphStore | None = None
    predictor: ReferencePredictor | None = None
    classes = 0
    for line in rfile:
        if not line.strip():
            continue
        try:
            msg = json.loads(line)
        except json.JSONDecodeError:
            reply({"rid": None, "error": "malformed JSON"})
            continue
        if not isinstance(msg, dict):
            reply({"rid": None, "error": "message must be an object"})
            continue
        op = msg.get("op")
        if op == "shutdown":
            log.info("session shutdown requested")
            return
        if op == "init":
            if store is not None:
                reply({"rid": None, "error": "init already received"})
                continue
            try:
                classes = msg.get("classes")
                if not isinstance(classes, int) or classes < 2:
                    raise ProtocolError("'classes' must be an integer >= 2")
                store = GraphStore(msg.get("nodes"), msg.get("edges"))
                predictor = factory(store, classes)
            except (StoreError, ProtocolError, PredictorError) as exc:
                store = predictor = None
                reply({"rid": None, "error": str(exc)})
                continue
            log.info(
                "session graph: %d nodes, %d edges, %d classes",
                len(store.node_type),
                len(store.edges),
                classes,
            )
            reply({"ok": True})
            continue
        if op == "predict":
            rid = msg.get("rid")
            if not isinstance(rid, int):
                reply({"rid": None, "error": "'rid' must be an integer"})
                continue
            if store is None:
                reply({"rid": rid, "error": "predict before init"})
                continue
            try:
                target = msg.get("target")
                if not isinstance(target, str):
                    raise ProtocolError("'target' must be a string")
                view = store.overlay(msg.get("delta"))
                probs = _validated_probs(predictor.predict(view, target), classes)
            except (StoreError, ProtocolError, PredictorError) as exc:
                reply({"rid": rid, "error": str(exc)})
                continue
            except Exception as exc:  # predictor bugs must not kill the session
                log.exception("predictor failed")
                reply({"rid": rid, "error": f"internal predictor failure: {exc}"})
                continue
            reply({"rid": rid, "probs": probs})
            continue
        reply({"rid": None, "error": f"unknown op {op!r}"})


def serve_stdio(factory: PredictorFactory) -> None:
    import sys

    serve_session(sys.stdin, sys.stdout, factory)


def serve_tcp(host: str, port: int, factory: PredictorFactory, max_sessions=None):
    """Accept connections sequentially, one session each, until interrupted.

    ``max_sessions`` exists for tests; production use leaves it None.
    Returns the bound port (useful when asking for port 0).
    """
    srv = socket.create_server((host, port))
    bound = srv.getsockname()[1]
    log.info("listening on %s:%d", host, bound)
    served = 0
    try:
        while max_sessions is None or served < max_sessions:
            conn, peer = srv.accept()
            log.info("connection from %s", peer)
            with conn:
                rfile = conn.makefile("r", encoding="utf-8")
                wfile = conn.makefile("w", encoding="utf-8")
                try:
                    serve_session(rfile, wfile, factory)
                except (OSError, ValueError) as exc:
                    log.warning("session aborted: %s", exc)
            served += 1
    finally:
        srv.close()
    return bound
