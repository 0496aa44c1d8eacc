"""Masked-token predictors: Markov posterior, uniform baseline, genie, bridge.

All predictors share one contract: every MASK in the request's sequence is
replaced, non-MASK positions pass through unchanged, and (except for the
deliberately context-blind uniform baseline) each fill is a member of the
slot's candidate set.  The bridge client forwards requests to an external
fill-mask service over a newline-delimited JSON protocol.
"""

from __future__ import annotations

import json
import select
import shlex
import socket
import subprocess
from dataclasses import dataclass
from typing import Mapping

import numpy as np

from .assigner import MASK
from .sources import SourceModel

__all__ = [
    "PredictionRequest",
    "mask_positions",
    "markov_predict",
    "random_predict",
    "genie_predict",
    "BridgeError",
    "BridgeTimeout",
    "BridgeProtocolError",
    "BridgeContractError",
    "BridgeClient",
    "bridge_predict",
]


def mask_positions(sequence: np.ndarray) -> np.ndarray:
    return np.flatnonzero(np.asarray(sequence) == MASK)


@dataclass(frozen=True)
class PredictionRequest:
    """Masked sequence plus per-mask candidate sets (keys = mask positions)."""

    sequence: np.ndarray
    candidates: Mapping[int, np.ndarray]

    def __post_init__(self):
        seq = np.array(self.sequence, dtype=np.int64, copy=True)
        seq.flags.writeable = False
        object.__setattr__(self, "sequence", seq)
        cands = {int(n): np.sort(np.asarray(c, dtype=np.int64)) for n, c in self.candidates.items()}
        object.__setattr__(self, "candidates", cands)
        masks = set(int(n) for n in mask_positions(seq))
        if masks != set(cands):
            raise ValueError(
                f"candidate sets must cover exactly the MASK positions {sorted(masks)}, "
                f"got keys {sorted(cands)}"
            )
        for n, c in cands.items():
            if c.size == 0:
                raise ValueError(f"empty candidate set at slot {n}")


def markov_predict(request: PredictionRequest, model: SourceModel) -> np.ndarray:
    """Fill masks left to right by the restricted Markov posterior.

    At mask position n with candidate set C the choice is
    argmax_{t in C} P(t | left) * P(right | t), where the left neighbor is
    the (possibly just-filled) token at n-1 and the right neighbor the
    token at n+1 when it is not masked; boundary positions drop the missing
    factor.  Ties resolve to the smallest candidate id.
    """
    seq = request.sequence.copy()
    n_slots = seq.size
    for n in mask_positions(request.sequence):
        c = request.candidates[int(n)]
        if c.size and (c[0] < 0 or c[-1] >= model.q):
            raise ValueError(f"candidate id out of range [0, {model.q}) at slot {n}")
        scores = np.ones(c.size)
        if n > 0:
            scores = scores * model.transition[seq[n - 1], c]
        if n + 1 < n_slots and seq[n + 1] != MASK:
            scores = scores * model.transition[c, seq[n + 1]]
        seq[n] = c[int(np.argmax(scores))]  # first max = smallest id
    return seq


def random_predict(request: PredictionRequest, q: int,
                   rng: np.random.Generator) -> np.ndarray:
    """Context-unaware baseline: fill every mask uniformly over the full codebook.

    Candidate sets are deliberately ignored; this reproduces the
    non-orthogonal baseline whose per-mask hit probability is 1/Q.
    """
    seq = request.sequence.copy()
    masks = mask_positions(seq)
    if masks.size:
        seq[masks] = rng.integers(0, q, size=masks.size)
    return seq


def genie_predict(request: PredictionRequest, truth: np.ndarray) -> np.ndarray:
    """Upper-bound oracle: fill the true token when it is a candidate.

    When a missed detection leaves the true token outside the candidate
    set, the smallest candidate is written instead (and counted as an error
    by the metrics).
    """
    truth = np.asarray(truth, dtype=np.int64)
    seq = request.sequence.copy()
    if truth.size != seq.size:
        raise ValueError("truth length must match the sequence length")
    for n in mask_positions(seq):
        c = request.candidates[int(n)]
        seq[n] = truth[n] if truth[n] in c else c[0]
    return seq


# ---------------------------------------------------------------------------
# Bridge client: newline-delimited JSON over a stream socket or a spawned
# subprocess's stdio.  MASK on the wire is -1.  Strict request/response
# alternation; contract violations fail the trial.


class BridgeError(RuntimeError):
    """Base class for bridge transport/contract failures."""


class BridgeTimeout(BridgeError):
    pass


class BridgeProtocolError(BridgeError):
    pass


class BridgeContractError(BridgeError):
    pass


def _encode_request(request: PredictionRequest, q: int) -> bytes:
    payload = {
        "sequence": [int(t) for t in request.sequence],
        "candidates": {str(n): [int(t) for t in c] for n, c in request.candidates.items()},
        "q": int(q),
    }
    return json.dumps(payload, separators=(",", ":")).encode("utf-8") + b"\n"


def _validate_response(request: PredictionRequest, payload: dict) -> np.ndarray:
    if "error" in payload:
        raise BridgeProtocolError(f"bridge returned error: {payload['error']}")
    if "filled" not in payload:
        raise BridgeProtocolError("bridge response missing 'filled'")
    filled = np.asarray(payload["filled"], dtype=np.int64)
    seq = request.sequence
    if filled.shape != seq.shape:
        raise BridgeContractError(
            f"bridge filled length {filled.size}, expected {seq.size}")
    fixed = seq != MASK
    if not np.array_equal(filled[fixed], seq[fixed]):
        raise BridgeContractError("bridge changed a non-MASK position")
    for n in mask_positions(seq):
        if filled[n] not in request.candidates[int(n)]:
            raise BridgeContractError(
                f"bridge filled non-candidate token {filled[n]} at slot {n}")
    return filled


class BridgeClient:
    """One-connection client for the fill-mask bridge service.

    ``endpoint`` is either ``host:port`` (TCP) or ``stdio:<command line>``
    (the command is spawned and spoken to over its stdin/stdout).  One
    request is in flight at a time.
    """

    def __init__(self, endpoint: str, timeout: float = 30.0):
        self.endpoint = endpoint
        self.timeout = timeout
        self._sock = None
        self._sock_file = None
        self._proc = None
        if endpoint.startswith("stdio:"):
            command = shlex.split(endpoint[len("stdio:"):])
            if not command:
                raise ValueError("stdio endpoint needs a command: 'stdio:<cmd ...>'")
            self._proc = subprocess.Popen(
                command, stdin=subprocess.PIPE, stdout=subprocess.PIPE, bufsize=0)
        else:
            host, _, port = endpoint.rpartition(":")
            if not host or not port.isdigit():
                raise ValueError(f"endpoint must be 'host:port' or 'stdio:<cmd>', got {endpoint!r}")
            try:
                self._sock = socket.create_connection((host, int(port)), timeout=timeout)
            except OSError as exc:
                raise BridgeError(f"cannot connect to bridge at {endpoint}: {exc}") from exc
            self._sock.settimeout(timeout)
            self._sock_file = self._sock.makefile("rb")

    def _send(self, line: bytes) -> None:
        if self._sock is not None:
            self._sock.sendall(line)
        else:
            self._proc.stdin.write(line)
            self._proc.stdin.flush()

    def _recv_line(self) -> bytes:
        if self._sock_file is not None:
            try:
                line = self._sock_file.readline()
            except socket.timeout as exc:
                raise BridgeTimeout(
                    f"no response from bridge at {self.endpoint} within {self.timeout}s") from exc
        else:
            ready, _, _ = select.select([self._proc.stdout], [], [], self.timeout)
            if not ready:
                raise BridgeTimeout(
                    f"no response from bridge at {self.endpoint} within {self.timeout}s")
            line = self._proc.stdout.readline()
        if not line:
            raise BridgeProtocolError(f"bridge at {self.endpoint} closed the connection")
        return line

    def predict(self, request: PredictionRequest, q: int) -> np.ndarray:
        self._send(_encode_request(request, q))
        line = self._recv_line()
        try:
            payload = json.loads(line.decode("utf-8"))
        except (UnicodeDecodeError, json.JSONDecodeError) as exc:
            raise BridgeProtocolError(f"bridge sent malformed JSON: {exc}") from exc
        if not isinstance(payload, dict):
            raise BridgeProtocolError("bridge response is not a JSON object")
        return _validate_response(request, payload)

    def close(self) -> None:
        if self._sock_file is not None:
            self._sock_file.close()
            self._sock_file = None
        if self._sock is not None:
            self._sock.close()
            self._sock = None
        if self._proc is not None:
            for stream in (self._proc.stdin, self._proc.stdout):
                if stream:
                    stream.close()
            self._proc.terminate()
            try:
                self._proc.wait(timeout=5)
            except subprocess.TimeoutExpired:
                self._proc.kill()
                self._proc.wait()
            self._proc = None

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


def bridge_predict(request: PredictionRequest, q: int, endpoint: str,
                   timeout: float = 30.0) -> np.ndarray:
    """One-shot convenience wrapper: connect, predict once, close."""
    with BridgeClient(endpoint, timeout=timeout) as client:
        return client.predict(request, q)
