"""Command line entry: serve the bridge over stdio or a TCP socket."""

from __future__ import annotations

import argparse
import logging
import sys

from .predictor import PredictorError, ReferencePredictor, load_weights
from .server import fixed_factory, seeded_factory, serve_stdio, serve_tcp


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="hetpath-bridge",
        description="Reference prediction server for the hetpath bridge protocol",
    )
    mode = parser.add_mutually_exclusive_group(required=True)
    mode.add_argument("--stdio", action="store_true", help="serve one session on stdio")
    mode.add_argument("--listen", metavar="HOST:PORT", help="serve TCP sessions")
    parser.add_argument("--weights", help="sidecar weight file (flat decimal arrays)")
    parser.add_argument(
        "--seed",
        type=int,
        default=0,
        help="derive weights from this seed and the session graph (default 0)",
    )
    parser.add_argument("--layers", type=int, default=2, help="layers for seed mode")
    parser.add_argument("--hidden", type=int, default=8, help="width for seed mode")
    parser.add_argument(
        "--scale", type=float, default=1.0, help="weight scale for seed mode"
    )
    parser.add_argument("-v", "--verbose", action="store_true", help="log to stderr")
    args = parser.parse_args(argv)

    logging.basicConfig(
        stream=sys.stderr,
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )

    if args.weights:
        try:
            factory = fixed_factory(ReferencePredictor(load_weights(args.weights)))
        except (OSError, ValueError, PredictorError) as exc:
            print(f"cannot load weights: {exc}", file=sys.stderr)
            return 1
    else:
        factory = seeded_factory(
            args.seed, layers=args.layers, hidden=args.hidden, scale=args.scale
        )

    if args.stdio:
        serve_stdio(factory)
        return 0
    host, sep, port = args.listen.rpartition(":")
    if not sep or not port.isdigit():
        print(f"--listen needs HOST:PORT, got {args.listen!r}", file=sys.stderr)
        return 1
    try:
        serve_tcp(host or "127.0.0.1", int(port), factory)
    except KeyboardInterrupt:
        pass
    return 0


if __name__ == "__main__":
    sys.exit(main())
