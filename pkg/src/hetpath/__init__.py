"""hetpath: influence-path explanations for heterogeneous graph models."""

from .graph import (
    EdgeRef,
    GraphDataError,
    GraphView,
    HetGraph,
    load_graph,
    load_graph_files,
    serialize_graph,
)
from .walks import (
    SimplePath,
    Walk,
    WalkLimitExceeded,
    associated_walks,
    enumerate_walks,
    erase_loops,
    erase_loops_path,
    format_walk,
    is_associated,
    signature_set,
    walk_signature,
    walks_equivalent,
)
from .rewiring import rewire_for_path
from .models import (
    BackendError,
    BlackBoxModel,
    ExternalModel,
    MessagePassingHGN,
    Prediction,
    StdioTransport,
    TcpTransport,
    WalkSumModel,
)
from .explain import (
    Explanation,
    SearchConfig,
    SearchTrace,
    explanation_document,
    influence_score,
    search_topk,
)
from .fidelity import (
    FidelityReport,
    bottom_k,
    evaluate_fidelity,
    explanation_mask_view,
    induce_explanation_graph,
)

__all__ = [
    "EdgeRef",
    "GraphDataError",
    "GraphView",
    "HetGraph",
    "load_graph",
    "load_graph_files",
    "serialize_graph",
    "SimplePath",
    "Walk",
    "WalkLimitExceeded",
    "associated_walks",
    "enumerate_walks",
    "erase_loops",
    "erase_loops_path",
    "format_walk",
    "is_associated",
    "signature_set",
    "walk_signature",
    "walks_equivalent",
    "rewire_for_path",
    "BackendError",
    "BlackBoxModel",
    "ExternalModel",
    "MessagePassingHGN",
    "Prediction",
    "StdioTransport",
    "TcpTransport",
    "WalkSumModel",
    "Explanation",
    "SearchConfig",
    "SearchTrace",
    "explanation_document",
    "influence_score",
    "search_topk",
    "FidelityReport",
    "bottom_k",
    "evaluate_fidelity",
    "explanation_mask_view",
    "induce_explanation_graph",
]

__version__ = "0.1.0"
