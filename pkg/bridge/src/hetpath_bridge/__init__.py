"""Reference model server for the hetpath external-backend protocol.

The server holds one typed graph per session, applies per-request overlay
deltas without mutating it, and answers class-probability queries from a
bundled typed message-passing predictor.  The package is intentionally
independent of the explainer library; the newline-delimited JSON protocol
is the only shared surface.
"""

from .predictor import ReferencePredictor, derive_weights, load_weights
from .server import ProtocolError, serve_session
from .store import GraphStore, StoreError

__all__ = [
    "GraphStore",
    "StoreError",
    "ReferencePredictor",
    "derive_weights",
    "load_weights",
    "ProtocolError",
    "serve_session",
]

__version__ = "0.1.0"
