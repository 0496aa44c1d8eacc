"""Line-delimited JSON serving loops: TCP and stdio.

One request per line, one response per line, in order.  A malformed
request produces an ``{"error": ...}`` object on its line and the
connection stays open; only transport failures end a session.
"""

from __future__ import annotations

import json
import socketserver
import sys

from .backend import MASK, BackendError


def validate_request(payload, backend) -> tuple:
    """Check a decoded request against the protocol; returns (sequence, candidates)."""
    if not isinstance(payload, dict):
        raise BackendError("request must be a JSON object")
    for key in ("sequence", "candidates", "q"):
        if key not in payload:
            raise BackendError(f"request missing key {key!r}")
    q = payload["q"]
    if q != backend.q:
        raise BackendError(f"request q={q} but the backend serves q={backend.q}")
    sequence = payload["sequence"]
    if not isinstance(sequence, list) or not sequence:
        raise BackendError("sequence must be a nonempty list")
    for v in sequence:
        if not isinstance(v, int) or isinstance(v, bool) or (v != MASK and not 0 <= v < q):
            raise BackendError(f"token id {v!r} out of range [0, {q})")
    raw = payload["candidates"]
    if not isinstance(raw, dict):
        raise BackendError("candidates must be an object keyed by slot index")
    candidates = {}
    for key, cands in raw.items():
        try:
            pos = int(key)
        except (TypeError, ValueError):
            raise BackendError(f"candidate key {key!r} is not a slot index") from None
        if not 0 <= pos < len(sequence):
            raise BackendError(f"candidate slot {pos} outside the sequence")
        if sequence[pos] != MASK:
            raise BackendError(f"slot {pos} is not masked but has candidates")
        if not isinstance(cands, list) or not cands:
            raise BackendError(f"slot {pos} needs a nonempty candidate list")
        for c in cands:
            if not isinstance(c, int) or isinstance(c, bool) or not 0 <= c < q:
                raise BackendError(f"candidate id {c!r} out of range [0, {q})")
        candidates[pos] = cands
    for pos, v in enumerate(sequence):
        if v == MASK and pos not in candidates:
            raise BackendError(f"masked slot {pos} has no candidates")
    return sequence, candidates


def handle_line(line, backend) -> dict:
    try:
        payload = json.loads(line)
    except (json.JSONDecodeError, UnicodeDecodeError) as exc:
        return {"error": f"malformed JSON: {exc}"}
    try:
        sequence, candidates = validate_request(payload, backend)
        filled, scores = backend.fill(sequence, candidates)
    except BackendError as exc:
        return {"error": str(exc)}
    except Exception as exc:  # backend bug: report, keep serving
        return {"error": f"backend failure: {exc}"}
    return {"filled": filled, "scores": scores}


def serve_stream(rfile, wfile, backend) -> None:
    """Serve one request per line until the input stream closes."""
    for line in rfile:
        response = handle_line(line, backend)
        wfile.write(json.dumps(response).encode("utf-8") + b"\n")
        wfile.flush()


def serve_stdio(backend) -> None:
    serve_stream(sys.stdin.buffer, sys.stdout.buffer, backend)


def serve_tcp(host: str, port: int, backend, ready_file: str | None = None) -> None:
    class Handler(socketserver.StreamRequestHandler):
        def handle(self):
            serve_stream(self.rfile, self.wfile, backend)

    class Server(socketserver.ThreadingTCPServer):
        allow_reuse_address = True
        daemon_threads = True

    with Server((host, port), Handler) as server:
        bound = "%s:%d" % server.server_address[:2]
        print(f"todma-bridge listening on {bound}", file=sys.stderr, flush=True)
        if ready_file:
            with open(ready_file, "w", encoding="utf-8") as fh:
                fh.write(bound + "\n")
        server.serve_forever()
