"""Token sources: Markov sequence models, one-hot views, and token-file I/O.

Devices transmit length-N sequences of token ids drawn from a shared
codebook of size Q.  Real deployments would produce these with a learned
tokenizer; here they come from an order-1 Markov chain (tunable from
uniform i.i.d. to sharply peaked transitions) or from a plain-text token
file exported by an external tokenizer.
"""

from __future__ import annotations

import json
import math
import re
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path

import numpy as np

__all__ = [
    "SourceModel",
    "uniform_model",
    "cyclic_model",
    "dirichlet_model",
    "sample_sequence",
    "sample_sequences",
    "one_hot",
    "from_one_hot",
    "TokenFile",
    "load_sequences",
    "save_sequences",
    "save_model",
    "load_model",
]

_STOCHASTIC_TOL = 1e-9


def _as_readonly(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=np.float64, copy=True)
    a.flags.writeable = False
    return a


@dataclass(frozen=True)
class SourceModel:
    """Order-1 Markov chain over token ids [0, Q).

    ``initial`` is a length-Q probability vector, ``transition`` a QxQ
    row-stochastic matrix.  Instances are immutable and safe to share
    across concurrent trial workers.
    """

    initial: np.ndarray
    transition: np.ndarray

    def __post_init__(self):
        initial = _as_readonly(self.initial)
        transition = _as_readonly(self.transition)
        object.__setattr__(self, "initial", initial)
        object.__setattr__(self, "transition", transition)
        if initial.ndim != 1 or transition.shape != (initial.size, initial.size):
            raise ValueError(
                f"shape mismatch: initial {initial.shape}, transition {transition.shape}"
            )
        if (initial < 0).any() or (transition < 0).any():
            raise ValueError("probabilities must be nonnegative")
        if abs(initial.sum() - 1.0) > _STOCHASTIC_TOL:
            raise ValueError(f"initial distribution sums to {initial.sum()!r}, not 1")
        rowsums = transition.sum(axis=1)
        bad = np.abs(rowsums - 1.0) > _STOCHASTIC_TOL
        if bad.any():
            raise ValueError(f"transition rows {np.flatnonzero(bad)[:5]} are not stochastic")

    @property
    def q(self) -> int:
        return self.initial.size

    # Cumulative rows for inverse-CDF sampling, built once per model.
    @cached_property
    def _cum_initial(self) -> np.ndarray:
        return np.cumsum(self.initial)

    @cached_property
    def _cum_transition(self) -> np.ndarray:
        return np.cumsum(self.transition, axis=1)


def uniform_model(q: int) -> SourceModel:
    """i.i.d. uniform tokens: uniform initial, all transition rows uniform."""
    if q < 2:
        raise ValueError("q must be >= 2")
    u = np.full(q, 1.0 / q)
    return SourceModel(u, np.tile(u, (q, 1)))


def cyclic_model(q: int, start: int | None = 0) -> SourceModel:
    """Deterministic cycle q -> q+1 mod Q; ``start=None`` gives a uniform start."""
    if q < 2:
        raise ValueError("q must be >= 2")
    transition = np.zeros((q, q))
    transition[np.arange(q), (np.arange(q) + 1) % q] = 1.0
    if start is None:
        initial = np.full(q, 1.0 / q)
    else:
        initial = np.zeros(q)
        initial[start] = 1.0
    return SourceModel(initial, transition)


def dirichlet_model(q: int, concentration: float, rng: np.random.Generator) -> SourceModel:
    """Random Markov model with Dirichlet(concentration) transition rows.

    Small concentration gives sharply peaked rows (strong context for a
    predictor to exploit); ``concentration=inf`` degenerates to the uniform
    i.i.d. model.  The initial distribution is uniform.
    """
    if q < 2:
        raise ValueError("q must be >= 2")
    if not concentration > 0:
        raise ValueError("concentration must be positive")
    if math.isinf(concentration):
        return uniform_model(q)
    transition = rng.dirichlet(np.full(q, concentration), size=q)
    # Guard against exact zeros so every row stays strictly stochastic.
    transition = np.maximum(transition, 1e-300)
    transition /= transition.sum(axis=1, keepdims=True)
    return SourceModel(np.full(q, 1.0 / q), transition)


def _inverse_cdf(cum: np.ndarray, u: float) -> int:
    idx = int(np.searchsorted(cum, u, side="right"))
    return min(idx, cum.size - 1)


def sample_sequence(model: SourceModel, n: int, rng: np.random.Generator) -> np.ndarray:
    """Draw one length-n token sequence from the chain; deterministic per rng state."""
    if n < 1:
        raise ValueError("n must be >= 1")
    u = rng.random(n)
    seq = np.empty(n, dtype=np.int64)
    seq[0] = _inverse_cdf(model._cum_initial, u[0])
    cum_t = model._cum_transition
    for i in range(1, n):
        seq[i] = _inverse_cdf(cum_t[seq[i - 1]], u[i])
    return seq


def sample_sequences(model: SourceModel, k: int, n: int, rng: np.random.Generator) -> np.ndarray:
    """k independent device sequences as a (k, n) array, sampled device-major."""
    return np.stack([sample_sequence(model, n, rng) for _ in range(k)])


def one_hot(seq: np.ndarray, q: int) -> np.ndarray:
    """Token sequence -> QxN one-hot matrix (column n selects token seq[n])."""
    seq = np.asarray(seq, dtype=np.int64)
    if seq.ndim != 1:
        raise ValueError("expected a 1-D token sequence")
    if seq.size and (seq.min() < 0 or seq.max() >= q):
        raise ValueError(f"token id out of range [0, {q})")
    b = np.zeros((q, seq.size), dtype=np.int8)
    b[seq, np.arange(seq.size)] = 1
    return b


def from_one_hot(b: np.ndarray) -> np.ndarray:
    """Inverse of :func:`one_hot`; rejects matrices whose columns are not one-hot."""
    b = np.asarray(b)
    if b.ndim != 2:
        raise ValueError("expected a QxN matrix")
    if not np.array_equal(np.sum(b != 0, axis=0), np.ones(b.shape[1], dtype=np.int64)):
        raise ValueError("every column must have exactly one nonzero entry")
    return np.argmax(b != 0, axis=0).astype(np.int64)


# ---------------------------------------------------------------------------
# Token file format: first line "Q=<int> N=<int>", then one sequence per
# non-empty line as N space-separated decimal ids.  UTF-8, LF endings.

_HEADER_RE = re.compile(r"^Q=(\d+)\s+N=(\d+)\s*$")


@dataclass(frozen=True)
class TokenFile:
    """Parsed token file: declared codebook size, sequence length, sequences."""

    q: int
    n: int
    sequences: list = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.sequences)

    def __iter__(self):
        return iter(self.sequences)

    def __getitem__(self, i):
        return self.sequences[i]


def load_sequences(path: str | Path) -> TokenFile:
    """Load token sequences from a token file; empty body gives an empty list."""
    text = Path(path).read_text(encoding="utf-8")
    lines = text.split("\n")
    header = None
    body_start = 0
    for i, line in enumerate(lines):
        if line.strip():
            header = line
            body_start = i + 1
            break
    if header is None:
        raise ValueError(f"{path}: missing 'Q=<int> N=<int>' header")
    m = _HEADER_RE.match(header.strip())
    if m is None:
        raise ValueError(f"{path}: malformed header {header!r}")
    q, n = int(m.group(1)), int(m.group(2))
    if q < 2 or n < 1:
        raise ValueError(f"{path}: invalid header values Q={q} N={n}")
    sequences = []
    for lineno, line in enumerate(lines[body_start:], start=body_start + 1):
        if not line.strip():
            continue
        try:
            ids = np.array([int(tok) for tok in line.split()], dtype=np.int64)
        except ValueError as exc:
            raise ValueError(f"{path}:{lineno}: non-integer token id") from exc
        if ids.size != n:
            raise ValueError(f"{path}:{lineno}: expected {n} tokens, got {ids.size}")
        if ids.min() < 0 or ids.max() >= q:
            raise ValueError(f"{path}:{lineno}: token id out of range [0, {q})")
        sequences.append(ids)
    return TokenFile(q=q, n=n, sequences=sequences)


def save_sequences(path: str | Path, sequences, q: int) -> None:
    sequences = [np.asarray(s, dtype=np.int64) for s in sequences]
    if sequences:
        n = sequences[0].size
        for s in sequences:
            if s.size != n:
                raise ValueError("all sequences must share one length")
            if s.size and (s.min() < 0 or s.max() >= q):
                raise ValueError(f"token id out of range [0, {q})")
    else:
        n = 0
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(f"Q={q} N={n}\n")
        for s in sequences:
            fh.write(" ".join(str(int(t)) for t in s) + "\n")


def save_model(model: SourceModel, path: str | Path) -> None:
    """Serialize a source model to JSON (full float precision round-trip)."""
    payload = {
        "q": model.q,
        "initial": model.initial.tolist(),
        "transition": model.transition.tolist(),
    }
    Path(path).write_text(json.dumps(payload), encoding="utf-8")


def load_model(path: str | Path) -> SourceModel:
    payload = json.loads(Path(path).read_text(encoding="utf-8"))
    model = SourceModel(np.array(payload["initial"]), np.array(payload["transition"]))
    if model.q != payload["q"]:
        raise ValueError(f"{path}: declared q={payload['q']} does not match matrices")
    return model
