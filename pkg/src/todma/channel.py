"""Rayleigh block-fading MIMO multiple-access channel.

Active devices transmit their slot codewords simultaneously; the receiver
sees the rank-K superposition Y_n = sum_k x_{k,n} h_k^T + Z_n.  Channels
are i.i.d. unit-variance complex Gaussian and stay fixed over the N slots
of one trial.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = ["ScenarioConfig", "snr_to_noise_variance", "sample_rayleigh",
           "complex_gaussian", "transmit_slot"]


@dataclass(frozen=True)
class ScenarioConfig:
    """Link-level scenario: device counts, antennas, slots, codebook size, SNR."""

    k_total: int
    k_active: int
    n_antennas: int
    n_slots: int
    q: int
    snr_db: float

    def __post_init__(self):
        if not 1 <= self.k_active <= self.k_total:
            raise ValueError(f"need 1 <= k_active <= k_total, got {self.k_active}/{self.k_total}")
        if self.n_antennas < 1:
            raise ValueError("n_antennas must be >= 1")
        if self.n_slots < 1:
            raise ValueError("n_slots must be >= 1")
        if self.q < 2:
            raise ValueError("q must be >= 2")


def snr_to_noise_variance(snr_db: float) -> float:
    """Per-entry noise variance under the unit-power normalization: 10^(-snr_db/10).

    With unit-norm codewords and unit-variance fading, the projected signal
    rows concentrate at energy/M = 1, so SNR = 1/sigma^2.
    """
    snr_db = float(snr_db)
    if not np.isfinite(snr_db):
        raise ValueError("snr_db must be finite")
    return 10.0 ** (-snr_db / 10.0)


def sample_rayleigh(k: int, m: int, rng: np.random.Generator) -> np.ndarray:
    """(k, m) i.i.d. CN(0, 1) channel matrix; row k is device k's channel h_k^T."""
    if k < 1 or m < 1:
        raise ValueError("k and m must be >= 1")
    return complex_gaussian((k, m), 1.0, rng)


def complex_gaussian(shape, variance: float, rng: np.random.Generator) -> np.ndarray:
    """Circularly-symmetric complex Gaussian, per-entry variance ``variance``."""
    scale = np.sqrt(variance / 2.0)
    return scale * (rng.standard_normal(shape) + 1j * rng.standard_normal(shape))


def transmit_slot(slot_symbols: np.ndarray, channels: np.ndarray, sigma2: float,
                  rng: np.random.Generator | None = None) -> np.ndarray:
    """Superimpose K devices' slot codewords over the MAC: Y = sum_k x_k h_k^T + Z.

    ``slot_symbols`` is (K, L) with row k the codeword device k transmits this
    slot; ``channels`` is (K, M).  With sigma2 = 0 no noise is drawn, so the
    rng stream is untouched in noiseless runs.
    """
    slot_symbols = np.asarray(slot_symbols, dtype=np.complex128)
    channels = np.asarray(channels, dtype=np.complex128)
    if slot_symbols.ndim != 2 or channels.ndim != 2:
        raise ValueError("slot_symbols and channels must be 2-D")
    if slot_symbols.shape[0] != channels.shape[0]:
        raise ValueError(
            f"device count mismatch: {slot_symbols.shape[0]} codewords, "
            f"{channels.shape[0]} channels"
        )
    if sigma2 < 0:
        raise ValueError("sigma2 must be >= 0")
    received = slot_symbols.T @ channels
    if sigma2 > 0:
        if rng is None:
            raise ValueError("rng required when sigma2 > 0")
        received = received + complex_gaussian(received.shape, sigma2, rng)
    return received
