"""Walkthrough: explaining a model that lives in another process.

The explainer never needs the model's internals, only predictions, so any
server speaking the newline-delimited JSON protocol can be a backend.  The
companion package under bridge/ ships a reference server; here we launch it
over a pipe, run the same search against it and against an equivalent
in-process model, and check the two agree to floating-point noise.

Run with:  python3 demos/04_external_backend.py
(needs the bridge installed:  pip install -e bridge --no-build-isolation)
"""

import sys

from hetpath import (
    ExternalModel,
    HetGraph,
    MessagePassingHGN,
    SearchConfig,
    StdioTransport,
    format_walk,
    search_topk,
)

NODES = [
    ("A", "paper", [1.0, 0.0]),
    ("B", "paper", [0.0, 1.0]),
    ("C", "paper", [1.0, 1.0]),
    ("D", "author", [0.5]),
    ("E", "venue", [0.25, 0.75, 0.5]),
]
EDGES = [
    ("D", "C", "writes", None),
    ("C", "B", "cites", None),
    ("B", "C", "cites", None),
    ("B", "A", "cites", None),
    ("C", "A", "cites", None),
    ("E", "B", "publishes", None),
]


def main() -> None:
    g = HetGraph(NODES, EDGES)
    local = MessagePassingHGN.for_graph(g, n_classes=3, n_layers=2, seed=11, scale=1.2)

    command = [
        sys.executable, "-m", "hetpath_bridge", "--stdio",
        "--seed", "11", "--layers", "2", "--hidden", "8", "--scale", "1.2",
    ]
    print("launching backend: python3", " ".join(command[1:]))
    remote = ExternalModel(StdioTransport(command), g, n_classes=3, depth_hint=2)
    try:
        base_local = local.predict(g, "A")
        base_remote = remote.predict(g, "A")
        print(f"verdict at A  in-process: class {base_local.label}")
        print(f"verdict at A  over pipe : class {base_remote.label}")
        gap = float(abs(base_local.probs - base_remote.probs).max())
        print(f"largest probability difference: {gap:.2e}")

        config = SearchConfig(k=3, beam_width=5, branch_factor=5, seed=0)
        local_results, _ = search_topk(local, g, "A", config)
        remote_results, _ = search_topk(remote, g, "A", config)
        print("\ntop paths over the pipe (in-process scores in brackets):")
        for r, l in zip(remote_results, local_results):
            print(f"  {r.score:+.6f}  [{l.score:+.6f}]  {format_walk(r.path)}")
        agree = [r.path.key() for r in remote_results] == [
            l.path.key() for l in local_results
        ]
        print(f"\nrankings agree: {agree}")
    finally:
        remote.close()


if __name__ == "__main__":
    main()
