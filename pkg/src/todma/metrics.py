"""Token error rate, collision statistics, analytic oracles, latency models.

TER is the fraction of wrongly reconstructed (device, slot) tokens, which
equals the normalized L0 distance between the one-hot matrices because a
wrong token flips exactly two entries.  The latency models compare the
shared-codebook scheme (L*N/(Ns*fs), independent of the device count)
against an orthogonal adaptive-QAM baseline whose per-device rate shrinks
as 1/K_T.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .assigner import MASK
from .sources import one_hot

__all__ = [
    "TrialOutcome",
    "token_error_rate",
    "token_error_rate_one_hot",
    "errors_per_device",
    "mask_rate_oracle",
    "LatencyModel",
    "orth_latency",
    "todma_latency",
]


@dataclass
class TrialOutcome:
    """Per-trial statistics of one end-to-end pipeline run.

    ``mask_rate`` counts masks after the initial assignment (the quantity
    the collision oracle predicts); ``unresolved_mask_rate`` counts masks
    still open after the fine-grained update, i.e. the predictor's load.
    ``collision_rate`` is the fraction of slots whose residual set was
    nonempty before the update.
    """

    ter: float
    mask_rate: float
    unresolved_mask_rate: float
    collision_rate: float
    errors_per_device: np.ndarray
    device_ids: np.ndarray = field(default_factory=lambda: np.empty(0, dtype=np.int64))


def _check_pair(estimated: np.ndarray, truth: np.ndarray):
    estimated = np.asarray(estimated, dtype=np.int64)
    truth = np.asarray(truth, dtype=np.int64)
    if estimated.ndim == 1:
        estimated = estimated[None, :]
    if truth.ndim == 1:
        truth = truth[None, :]
    if estimated.shape != truth.shape:
        raise ValueError(f"shape mismatch: estimated {estimated.shape}, truth {truth.shape}")
    return estimated, truth


def token_error_rate(estimated: np.ndarray, truth: np.ndarray) -> float:
    """Mismatched (device, slot) fraction; an unfilled MASK counts as an error."""
    estimated, truth = _check_pair(estimated, truth)
    return float(np.count_nonzero(estimated != truth) / estimated.size)


def token_error_rate_one_hot(estimated: np.ndarray, truth: np.ndarray, q: int) -> float:
    """TER via the one-hot L0 form: sum_k ||Bhat_k - B_k||_0 / (2NK).

    Requires fully committed sequences (a MASK has no one-hot column).
    """
    estimated, truth = _check_pair(estimated, truth)
    if (estimated == MASK).any():
        raise ValueError("one-hot TER needs committed sequences (found MASK)")
    k, n = estimated.shape
    l0 = 0
    for dev in range(k):
        l0 += np.count_nonzero(one_hot(estimated[dev], q) != one_hot(truth[dev], q))
    return float(l0 / (2 * n * k))


def errors_per_device(estimated: np.ndarray, truth: np.ndarray) -> np.ndarray:
    estimated, truth = _check_pair(estimated, truth)
    return np.count_nonzero(estimated != truth, axis=1)


def mask_rate_oracle(k_active: int, q: int) -> float:
    """P(a device's token is duplicated by another) under uniform i.i.d. choice.

    1 - (1 - 1/Q)^(K-1): the chance at least one of the other K-1 devices
    picks the same slot token, i.e. the expected pre-update mask rate.
    """
    if k_active < 1 or q < 2:
        raise ValueError("need k_active >= 1 and q >= 2")
    return 1.0 - (1.0 - 1.0 / q) ** (k_active - 1)


@dataclass(frozen=True)
class LatencyModel:
    """OFDM bandwidth/rate parameters for the latency comparison."""

    n_subcarriers: int = 1024
    subcarrier_spacing: float = 15_000.0
    target_ber: float = 1e-3
    snr_linear: float = 10.0 ** 2.5

    def __post_init__(self):
        if self.n_subcarriers < 1:
            raise ValueError("n_subcarriers must be >= 1")
        if self.subcarrier_spacing <= 0:
            raise ValueError("subcarrier_spacing must be positive")
        if not 0 < self.target_ber < 0.2:
            raise ValueError("target_ber must lie in (0, 0.2)")
        if self.snr_linear <= 0:
            raise ValueError("snr_linear must be positive")


def orth_latency(k_total: int, n_tokens: int, q: int, model: LatencyModel) -> float:
    """Seconds to send N tokens of log2(Q) bits over the orthogonal baseline.

    Per-device rate: (Ns*fs/K_T) * log2(1 + 1.5*SNR / (-ln(5*BER))).
    Scales exactly linearly in K_T.
    """
    if k_total < 1 or n_tokens < 1:
        raise ValueError("k_total and n_tokens must be >= 1")
    bits_per_token = math.log2(q)
    if q < 2 or 2 ** round(bits_per_token) != q:
        raise ValueError(f"q must be a power of two for integral bits per token, got {q}")
    gamma = 1.5 * model.snr_linear / (-math.log(5.0 * model.target_ber))
    rate = model.n_subcarriers * model.subcarrier_spacing / k_total * math.log2(1.0 + gamma)
    return n_tokens * round(bits_per_token) / rate


def todma_latency(l: int, n_tokens: int, model: LatencyModel) -> float:
    """Seconds for N slots of L symbols over the full band: L*N/(Ns*fs).

    Independent of the total device count.
    """
    if l < 1 or n_tokens < 1:
        raise ValueError("l and n_tokens must be >= 1")
    return l * n_tokens / (model.n_subcarriers * model.subcarrier_spacing)
