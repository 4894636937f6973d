"""Command line front end.

Three subcommands share the graph file formats (tab-separated node and edge
tables) and a single seeded random stream:

* ``explain``: search influence paths for one target and write the
  explanation document as JSON.
* ``verify``: run the randomized structural check suites and write their
  summaries as JSON.
* ``evaluate``: search per target, then compare fidelity of the best
  paths against the worst scored paths.

Exit codes: 0 success, 1 bad configuration or arguments, 2 unreadable or
invalid input data, 3 external backend failure, 4 verification checks ran
and found failing instances.  All logging goes to stderr; stdout carries
only the requested document, and equal seeds produce byte-identical
documents.
"""

from __future__ import annotations

import argparse
import json
import logging
import shlex
import sys
from typing import Sequence

from .explain import SearchConfig, explanation_document, search_topk
from .fidelity import DEFAULT_MAX_NODES, bottom_k, evaluate_fidelity
from .graph import GraphDataError, HetGraph, load_graph_files
from .models import (
    BackendError,
    BlackBoxModel,
    ExternalModel,
    MessagePassingHGN,
    StdioTransport,
    TcpTransport,
    WalkSumModel,
)
from .verify import SUITE_NAMES, run_suite

log = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_DATA = 2
EXIT_BACKEND = 3
EXIT_FINDINGS = 4


class _Parser(argparse.ArgumentParser):
    """Argument parser whose usage errors exit with the config code."""

    def error(self, message: str):  # noqa: D102 - argparse contract
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


def _add_graph_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--nodes", required=True, help="node table (id<TAB>type[<TAB>f1;f2;...])")
    p.add_argument("--edges", required=True, help="edge table (src<TAB>dst<TAB>type)")


def _add_backend_args(p: argparse.ArgumentParser) -> None:
    p.add_argument(
        "--backend",
        choices=("walksum", "mp", "external"),
        default="mp",
        help="prediction backend (default: mp)",
    )
    p.add_argument(
        "--endpoint",
        help="external backend address: HOST:PORT, tcp:HOST:PORT or stdio:CMD ...",
    )
    p.add_argument("--classes", type=int, default=3, help="number of classes (default 3)")
    p.add_argument(
        "--lambda",
        dest="walk_bound",
        type=int,
        default=4,
        help="walk length bound for the walksum backend (default 4)",
    )
    p.add_argument("--layers", type=int, default=2, help="mp backend depth (default 2)")
    p.add_argument("--hidden", type=int, default=8, help="mp backend width (default 8)")
    p.add_argument(
        "--scale", type=float, default=1.0, help="mp backend weight scale (default 1)"
    )
    p.add_argument(
        "--model-seed", type=int, default=0, help="seed for backend weights (default 0)"
    )
    p.add_argument(
        "--weights-out",
        help="write the mp backend's weights to this sidecar file",
    )


def _add_search_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--k", type=int, default=5, help="paths to report (default 5)")
    p.add_argument("--b", type=int, default=5, help="search beam width (default 5)")
    p.add_argument(
        "--m", type=int, default=5, help="in-edge samples per extension (default 5)"
    )
    p.add_argument(
        "--lmax",
        type=int,
        default=None,
        help="maximum path edges (default: backend receptive depth)",
    )
    p.add_argument("--jobs", type=int, default=1, help="parallel scoring workers")


def _make_transport(endpoint: str):
    if endpoint.startswith("stdio:"):
        argv = shlex.split(endpoint[len("stdio:") :])
        if not argv:
            raise ValueError("stdio endpoint needs a command")
        return StdioTransport(argv)
    rest = endpoint[len("tcp:") :] if endpoint.startswith("tcp:") else endpoint
    host, sep, port = rest.rpartition(":")
    if not sep or not port.isdigit():
        raise ValueError(f"endpoint {endpoint!r} is not HOST:PORT, tcp:... or stdio:...")
    return TcpTransport(host or "127.0.0.1", int(port))


def _build_model(args: argparse.Namespace, g: HetGraph) -> BlackBoxModel:
    if args.backend == "walksum":
        return WalkSumModel(args.classes, args.walk_bound, seed=args.model_seed)
    if args.backend == "mp":
        model = MessagePassingHGN.for_graph(
            g,
            args.classes,
            n_layers=args.layers,
            hidden=args.hidden,
            seed=args.model_seed,
            scale=args.scale,
        )
        if args.weights_out:
            model.save_weights(args.weights_out)
            log.info("wrote model weights to %s", args.weights_out)
        return model
    if not args.endpoint:
        raise ValueError("--backend external requires --endpoint")
    transport = _make_transport(args.endpoint)
    return ExternalModel(
        transport, g, args.classes, depth_hint=args.lmax if args.lmax else 3
    )


def _emit(doc: dict, out: str | None) -> None:
    text = json.dumps(doc, indent=2, sort_keys=True) + "\n"
    if out and out != "-":
        with open(out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _search_config(args: argparse.Namespace) -> SearchConfig:
    return SearchConfig(
        k=args.k,
        beam_width=args.b,
        branch_factor=args.m,
        max_path_edges=args.lmax,
        seed=args.seed,
        jobs=args.jobs,
    )


def cmd_explain(args: argparse.Namespace) -> int:
    g = load_graph_files(args.nodes, args.edges)
    if not g.has_node(args.target):
        raise GraphDataError(f"target node {args.target!r} is not in the graph")
    model = _build_model(args, g)
    try:
        results, trace = search_topk(model, g, args.target, _search_config(args))
        doc = explanation_document(g, args.target, results, trace, _search_config(args))
    finally:
        if isinstance(model, ExternalModel):
            model.close()
    _emit(doc, args.out)
    return EXIT_OK


def cmd_verify(args: argparse.Namespace) -> int:
    if args.trials < 1:
        raise ValueError("--trials must be at least 1")
    suites = args.suite or list(SUITE_NAMES)
    reports = []
    for name in suites:
        log.info("running %s suite, %d trials", name, args.trials)
        reports.append(
            run_suite(name, args.trials, args.seed, restricted=False, bound=args.bound)
        )
        if args.with_restricted and name in ("partition", "walk-sum"):
            reports.append(
                run_suite(name, args.trials, args.seed, restricted=True, bound=args.bound)
            )
    failed = sum(r["failed"] for r in reports)
    doc = {
        "suites": reports,
        "all_passed": failed == 0,
        "total_failed": failed,
    }
    _emit(doc, args.out)
    return EXIT_OK if failed == 0 else EXIT_FINDINGS


def cmd_evaluate(args: argparse.Namespace) -> int:
    g = load_graph_files(args.nodes, args.edges)
    targets = args.target
    if not targets:
        targets = [nid for nid in g.nodes() if g.in_edges(nid)]
    for t in targets:
        if not g.has_node(t):
            raise GraphDataError(f"target node {t!r} is not in the graph")
    model = _build_model(args, g)
    cfg = _search_config(args)
    top_samples = []
    bottom_samples = []
    per_target = []
    skipped = []
    try:
        for t in targets:
            results, trace = search_topk(model, g, t, cfg)
            if not results:
                skipped.append(t)
                continue
            worst, underfilled = bottom_k(g, trace.evaluated, args.k)
            top_samples.append((t, [e.path for e in results], None))
            bottom_samples.append((t, [e.path for e in worst], None))
            per_target.append(
                {
                    "target": t,
                    "evaluated": trace.n_evaluated,
                    "best_score": results[0].score,
                    "worst_score": worst[0].score,
                    "bottom_underfilled": underfilled,
                }
            )
        if not top_samples:
            raise ValueError("no target produced any candidate path")
        top = evaluate_fidelity(
            model, g, top_samples, max_nodes=args.sparsity, require_correct=False
        )
        bottom = evaluate_fidelity(
            model, g, bottom_samples, max_nodes=args.sparsity, require_correct=False
        )
    finally:
        if isinstance(model, ExternalModel):
            model.close()
    doc = {
        "top_paths": top.as_dict(),
        "bottom_paths": bottom.as_dict(),
        "per_target": per_target,
        "skipped_targets": skipped,
        "sparsity": args.sparsity,
    }
    _emit(doc, args.out)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(
        prog="hetpath",
        description="Path-based explanations for heterogeneous graph predictions",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_explain = sub.add_parser("explain", help="find influence paths for one target")
    _add_graph_args(p_explain)
    _add_backend_args(p_explain)
    _add_search_args(p_explain)
    p_explain.add_argument("--target", required=True, help="node to explain")
    p_explain.add_argument("--seed", type=int, default=0, help="search seed (default 0)")
    p_explain.add_argument("--out", help="output file (default stdout)")
    p_explain.set_defaults(func=cmd_explain)

    p_verify = sub.add_parser("verify", help="run randomized structural checks")
    p_verify.add_argument("--trials", type=int, default=100, help="instances per suite")
    p_verify.add_argument("--seed", type=int, default=0, help="instance seed (default 0)")
    p_verify.add_argument(
        "--suite",
        action="append",
        choices=SUITE_NAMES,
        help="restrict to one suite (repeatable; default all)",
    )
    p_verify.add_argument(
        "--bound", type=int, default=6, help="walk length bound (default 6)"
    )
    p_verify.add_argument(
        "--with-restricted",
        action="store_true",
        help="also run partition and walk-sum suites on the restricted family",
    )
    p_verify.add_argument("--out", help="output file (default stdout)")
    p_verify.set_defaults(func=cmd_verify)

    p_eval = sub.add_parser("evaluate", help="fidelity of best vs. worst paths")
    _add_graph_args(p_eval)
    _add_backend_args(p_eval)
    _add_search_args(p_eval)
    p_eval.add_argument(
        "--target",
        action="append",
        help="node to evaluate (repeatable; default: all nodes with in-edges)",
    )
    p_eval.add_argument("--seed", type=int, default=0, help="search seed (default 0)")
    p_eval.add_argument(
        "--sparsity",
        type=int,
        default=DEFAULT_MAX_NODES,
        help=f"node cap for explanation graphs (default {DEFAULT_MAX_NODES})",
    )
    p_eval.add_argument("--out", help="output file (default stdout)")
    p_eval.set_defaults(func=cmd_evaluate)

    return parser


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        stream=sys.stderr, level=logging.INFO, format="%(levelname)s %(name)s: %(message)s"
    )
    try:
        return args.func(args)
    except GraphDataError as exc:
        log.error("input data invalid: %s", exc)
        return EXIT_DATA
    except FileNotFoundError as exc:
        log.error("cannot read input: %s", exc)
        return EXIT_DATA
    except OSError as exc:
        log.error("i/o failure: %s", exc)
        return EXIT_DATA
    except BackendError as exc:
        log.error("backend failure: %s", exc)
        return EXIT_BACKEND
    except (ValueError, KeyError) as exc:
        log.error("bad configuration: %s", exc)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
