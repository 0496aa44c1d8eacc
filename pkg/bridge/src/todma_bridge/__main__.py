"""CLI entry: run the fill-mask bridge service over TCP or stdio."""

from __future__ import annotations

import argparse
import sys

from .backend import BackendError, MarkovBackend, load_backend
from .server import serve_stdio, serve_tcp


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="todma-bridge",
        description="Fill-mask prediction service over newline-delimited JSON.")
    parser.add_argument("--endpoint", default="stdio",
                        help="'host:port' to bind TCP, or 'stdio' (default).")
    parser.add_argument("--model", default=None,
                        help="JSON file for the Markov reference backend.")
    parser.add_argument("--backend", default=None, metavar="MODULE:CALLABLE",
                        help="Pluggable backend factory (overrides --model).")
    parser.add_argument("--ready-file", default=None,
                        help="Write the bound endpoint here once listening (TCP only).")
    args = parser.parse_args(argv)

    try:
        if args.backend:
            backend = load_backend(args.backend)
        elif args.model:
            backend = MarkovBackend.from_json(args.model)
        else:
            parser.error("need --model <json> or --backend <module:callable>")
    except (BackendError, OSError, KeyError, ValueError) as exc:
        print(f"todma-bridge: cannot load backend: {exc}", file=sys.stderr)
        return 1

    if args.endpoint == "stdio":
        serve_stdio(backend)
        return 0
    host, sep, port = args.endpoint.rpartition(":")
    if not sep or not port.isdigit():
        print(f"todma-bridge: endpoint must be 'host:port' or 'stdio', got "
              f"{args.endpoint!r}", file=sys.stderr)
        return 2
    try:
        serve_tcp(host, int(port), backend, ready_file=args.ready_file)
    except OSError as exc:
        print(f"todma-bridge: cannot bind {args.endpoint}: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
