"""Shared orthonormal modulation codebook and token-to-codeword mapping.

Every device maps token q to column q of a common LxQ matrix with
orthonormal columns, so one slot carries one unit-norm codeword per
device.  The default construction is the normalized DFT with L = Q.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = ["ModulationCodebook", "build_dft_codebook", "modulate", "modulate_tokens",
           "orthonormality_defect"]


@dataclass(frozen=True)
class ModulationCodebook:
    """LxQ complex matrix whose columns are the per-token codewords."""

    matrix: np.ndarray

    def __post_init__(self):
        m = np.array(self.matrix, dtype=np.complex128, copy=True)
        if m.ndim != 2:
            raise ValueError("codebook must be a 2-D matrix")
        m.flags.writeable = False
        object.__setattr__(self, "matrix", m)

    @property
    def l(self) -> int:
        return self.matrix.shape[0]

    @property
    def q(self) -> int:
        return self.matrix.shape[1]


def build_dft_codebook(q: int) -> ModulationCodebook:
    """Normalized DFT codebook with L = Q: entry (l, c) = exp(-2pi*i*l*c/q)/sqrt(q).

    Deterministic; two calls return bit-identical matrices.
    """
    if q < 2:
        raise ValueError("codebook size must be >= 2")
    rows = np.arange(q)[:, None]
    cols = np.arange(q)[None, :]
    matrix = np.exp(-2j * np.pi * rows * cols / q) / np.sqrt(q)
    return ModulationCodebook(matrix)


def orthonormality_defect(matrix: np.ndarray) -> float:
    """max |U^H U - I| over all entries."""
    matrix = np.asarray(matrix)
    gram = matrix.conj().T @ matrix
    return float(np.abs(gram - np.eye(matrix.shape[1])).max())


def modulate(b: np.ndarray, codebook: ModulationCodebook) -> np.ndarray:
    """One-hot matrix (QxN) -> transmitted frame U @ B (LxN)."""
    b = np.asarray(b)
    if b.ndim != 2 or b.shape[0] != codebook.q:
        raise ValueError(f"one-hot matrix must have {codebook.q} rows, got {b.shape}")
    return codebook.matrix @ b


def modulate_tokens(tokens: np.ndarray, codebook: ModulationCodebook) -> np.ndarray:
    """Column-selection fast path: frame column n is codebook column tokens[n]."""
    tokens = np.asarray(tokens, dtype=np.int64)
    if tokens.size and (tokens.min() < 0 or tokens.max() >= codebook.q):
        raise ValueError(f"token id out of range [0, {codebook.q})")
    return codebook.matrix[:, tokens]
