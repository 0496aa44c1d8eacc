"""Shared helpers: crafted-token noiseless frames used across test modules."""

import numpy as np
import pytest

from todma.channel import sample_rayleigh
from todma.harness import NOISELESS_THRESHOLD, simulate_frame, trial_stream
from todma.modem import build_dft_codebook


@pytest.fixture(scope="session")
def codebook64():
    return build_dft_codebook(64)


def run_noiseless(tokens, codebook, seed=0, threshold=NOISELESS_THRESHOLD):
    """Noiseless pipeline on crafted (K, N) tokens with genie CSI."""
    tokens = np.asarray(tokens, dtype=np.int64)
    k = tokens.shape[0]
    channels = sample_rayleigh(k, 32, trial_stream(seed, 0, 3))
    return simulate_frame(tokens, codebook, channels, 0.0, threshold, None)


def distinct_slot_tokens(k, n_slots, q, rng):
    """(k, n) tokens with no per-slot duplicates (collision-free by construction)."""
    return np.stack([rng.choice(q, size=k, replace=False) for _ in range(n_slots)], axis=1)
