"""Shared fixtures: a small citation-style demo graph and helpers.

The demo graph has five nodes with pairwise distinct types and six edges:

    D -> C, C -> B, B -> C, B -> A, C -> A, E -> B

Node A is the usual prediction target in tests; the canonical candidate
explanation is the path D -> C -> B -> A.
"""

from __future__ import annotations

import numpy as np
import pytest

from hetpath.graph import HetGraph
from hetpath.walks import SimplePath

CITE_NODES = [
    ("A", "paper", [1.0, 0.0]),
    ("B", "paper", [0.0, 1.0]),
    ("C", "paper", [1.0, 1.0]),
    ("D", "author", [0.5]),
    ("E", "venue", [0.25, 0.75, 0.5]),
]

# Edge ids follow list order: 0..5.
CITE_EDGES = [
    ("D", "C", "writes", None),   # e0
    ("C", "B", "cites", None),    # e1
    ("B", "C", "cites", None),    # e2
    ("B", "A", "cites", None),    # e3
    ("C", "A", "cites", None),    # e4
    ("E", "B", "publishes", None),  # e5
]


def make_cite_graph() -> HetGraph:
    return HetGraph(CITE_NODES, CITE_EDGES)


@pytest.fixture
def cite_graph() -> HetGraph:
    return make_cite_graph()


@pytest.fixture
def cite_path() -> SimplePath:
    """The path D -> C -> B -> A through edge ids 0, 1, 3."""
    return SimplePath(("D", "C", "B", "A"), (0, 1, 3))


@pytest.fixture
def cite_path_short() -> SimplePath:
    """The two-edge path D -> C -> A through edge ids 0, 4."""
    return SimplePath(("D", "C", "A"), (0, 4))


@pytest.fixture
def cite_path_side() -> SimplePath:
    """The path E -> B -> A through edge ids 5, 3."""
    return SimplePath(("E", "B", "A"), (5, 3))


def make_chain_graph(n: int) -> HetGraph:
    """n0 -> n1 -> ... -> n{n-1}, alternating node types."""
    nodes = [(f"n{i}", f"T{i % 2}", None) for i in range(n)]
    edges = [(f"n{i}", f"n{i + 1}", "next", None) for i in range(n - 1)]
    return HetGraph(nodes, edges)


def seeded_rng(seed: int) -> np.random.Generator:
    return np.random.default_rng(seed)
