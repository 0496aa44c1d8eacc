"""Prediction backends for the fill-mask bridge service.

The reference backend scores each candidate token by the order-1 Markov
posterior P(t | left) * P(right | t) and fills masks left to right, so a
simulator using the same chain statistics can check the wire protocol for
bit-exact parity.  Heavier models (e.g. a pretrained bidirectional
transformer) plug in through ``load_backend`` as long as they expose
``q`` and ``fill``.
"""

from __future__ import annotations

import importlib
import json

MASK = -1

_STOCHASTIC_TOL = 1e-9


class BackendError(ValueError):
    """Invalid model or request content; reported as an error object."""


class MarkovBackend:
    """Exact posterior of an order-1 Markov chain, restricted to candidates."""

    def __init__(self, initial: list, transition: list):
        q = len(initial)
        if q < 2 or len(transition) != q or any(len(row) != q for row in transition):
            raise BackendError("model shape mismatch: need length-Q initial and QxQ transition")
        if any(p < 0 for p in initial) or any(p < 0 for row in transition for p in row):
            raise BackendError("model probabilities must be nonnegative")
        if abs(sum(initial) - 1.0) > _STOCHASTIC_TOL:
            raise BackendError("initial distribution does not sum to 1")
        for i, row in enumerate(transition):
            if abs(sum(row) - 1.0) > _STOCHASTIC_TOL:
                raise BackendError(f"transition row {i} does not sum to 1")
        self.q = q
        self.initial = initial
        self.transition = transition

    @classmethod
    def from_json(cls, path: str) -> "MarkovBackend":
        with open(path, encoding="utf-8") as fh:
            payload = json.load(fh)
        backend = cls(payload["initial"], payload["transition"])
        if backend.q != payload.get("q", backend.q):
            raise BackendError("declared q does not match the model matrices")
        return backend

    def fill(self, sequence: list, candidates: dict) -> tuple:
        """Fill masks left to right; returns (filled sequence, per-mask scores).

        At mask position n the score of candidate t is P(t | seq[n-1]) times
        P(seq[n+1] | t); a missing neighbor (sequence boundary, or a right
        neighbor that is itself still masked) drops its factor.  Ties go to
        the smallest candidate id, so candidates are scored in ascending
        order with a strict improvement test.
        """
        seq = list(sequence)
        n = len(seq)
        scores_out = {}
        for pos in range(n):
            if seq[pos] != MASK:
                continue
            cands = sorted(candidates[pos])
            best = cands[0]
            best_score = -1.0
            scores = []
            for t in cands:
                score = 1.0
                if pos > 0:
                    score = score * self.transition[seq[pos - 1]][t]
                if pos + 1 < n and seq[pos + 1] != MASK:
                    score = score * self.transition[t][seq[pos + 1]]
                scores.append(score)
                if score > best_score:
                    best, best_score = t, score
            seq[pos] = best
            scores_out[str(pos)] = scores
        return seq, scores_out


def load_backend(spec: str):
    """Load a pluggable backend from 'module:callable'; the callable returns it."""
    module_name, sep, attr = spec.partition(":")
    if not sep:
        raise BackendError(f"backend spec must be 'module:callable', got {spec!r}")
    module = importlib.import_module(module_name)
    factory = getattr(module, attr)
    backend = factory()
    if not hasattr(backend, "fill") or not hasattr(backend, "q"):
        raise BackendError(f"backend {spec!r} must expose 'q' and 'fill'")
    return backend
