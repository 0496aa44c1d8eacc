"""Per-slot active-token detection by projection and energy thresholding.

The receiver projects the slot observation onto the codebook to recover
the equivalent channel matrix, then keeps every row whose energy
normalized by the antenna count strictly exceeds the threshold.  Row phi
of the projection doubles as the CSI estimate for token phi.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .modem import ModulationCodebook

__all__ = ["DetectionResult", "project", "row_energies", "default_threshold", "detect"]


@dataclass(frozen=True)
class DetectionResult:
    """Active token set for one slot plus the matching per-token CSI rows.

    ``tokens`` is sorted ascending; ``csi[i]`` is the projected row for
    ``tokens[i]`` (sum of the colliding devices' channels plus noise).
    """

    tokens: np.ndarray
    csi: np.ndarray
    threshold: float
    q: int

    def csi_for(self, token: int) -> np.ndarray:
        i = int(np.searchsorted(self.tokens, token))
        if i >= self.tokens.size or self.tokens[i] != token:
            raise KeyError(f"token {token} not detected")
        return self.csi[i]

    def as_dict(self) -> dict:
        return {int(t): self.csi[i] for i, t in enumerate(self.tokens)}


def project(received: np.ndarray, codebook: ModulationCodebook) -> np.ndarray:
    """U^H Y: equivalent-channel estimate (QxM); preserves the noise variance."""
    received = np.asarray(received, dtype=np.complex128)
    if received.ndim != 2 or received.shape[0] != codebook.l:
        raise ValueError(f"received slot must be ({codebook.l}, M), got {received.shape}")
    return codebook.matrix.conj().T @ received


def row_energies(h_hat: np.ndarray) -> np.ndarray:
    """Per-row energy normalized by the antenna count: ||row||^2 / M."""
    h_hat = np.asarray(h_hat)
    m = h_hat.shape[1]
    return (h_hat.real**2 + h_hat.imag**2).sum(axis=1) / m


def default_threshold(sigma2: float) -> float:
    """Detection threshold 2*sigma^2 (twice the projected noise-row energy)."""
    if sigma2 < 0:
        raise ValueError("sigma2 must be >= 0")
    return 2.0 * sigma2


def detect(h_hat: np.ndarray, threshold: float) -> DetectionResult:
    """Keep rows with ||row||^2 / M strictly above the threshold.

    No cap on the number of detected tokens; ties at exactly the threshold
    are excluded.
    """
    if threshold < 0:
        raise ValueError("threshold must be >= 0")
    h_hat = np.asarray(h_hat, dtype=np.complex128)
    energies = row_energies(h_hat)
    tokens = np.flatnonzero(energies > threshold).astype(np.int64)
    return DetectionResult(tokens=tokens, csi=h_hat[tokens].copy(),
                           threshold=float(threshold), q=h_hat.shape[0])
