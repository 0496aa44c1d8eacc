import numpy as np
import pytest

from todma.channel import (ScenarioConfig, complex_gaussian, sample_rayleigh,
                           snr_to_noise_variance, transmit_slot)
from todma.modem import build_dft_codebook


def rng(seed=0):
    return np.random.default_rng(seed)


class TestScenarioConfig:
    def test_valid(self):
        ScenarioConfig(k_total=500, k_active=8, n_antennas=32, n_slots=32, q=64, snr_db=25.0)

    @pytest.mark.parametrize("field,value", [
        ("k_active", 0), ("k_active", 501), ("n_antennas", 0), ("n_slots", 0), ("q", 1),
    ])
    def test_invalid(self, field, value):
        kwargs = dict(k_total=500, k_active=8, n_antennas=32, n_slots=32, q=64, snr_db=25.0)
        kwargs[field] = value
        with pytest.raises(ValueError):
            ScenarioConfig(**kwargs)


class TestSnrToNoiseVariance:
    def test_zero_db(self):
        assert snr_to_noise_variance(0.0) == 1.0

    def test_ten_db(self):
        assert abs(snr_to_noise_variance(10.0) - 0.1) < 1e-15

    def test_operating_point_25db(self):
        assert abs(snr_to_noise_variance(25.0) - 3.1622776601683794e-3) < 1e-15

    def test_rejects_non_finite(self):
        with pytest.raises(ValueError):
            snr_to_noise_variance(float("inf"))


class TestSampleRayleigh:
    def test_shape(self):
        assert sample_rayleigh(2, 3, rng()).shape == (2, 3)

    def test_reproducible(self):
        assert np.array_equal(sample_rayleigh(4, 8, rng(7)), sample_rayleigh(4, 8, rng(7)))

    def test_unit_variance(self):
        h = sample_rayleigh(1000, 1000, rng(1))
        assert abs(np.mean(np.abs(h) ** 2) - 1.0) < 0.01

    def test_rejects_empty(self):
        with pytest.raises(ValueError):
            sample_rayleigh(0, 4, rng())


class TestTransmitSlot:
    def test_single_device_noiseless_rank_one(self):
        cb = build_dft_codebook(8)
        h = sample_rayleigh(1, 4, rng(2))
        y = transmit_slot(cb.matrix[:, [3]].T, h, 0.0)
        assert np.abs(y - np.outer(cb.matrix[:, 3], h[0])).max() < 1e-14

    def test_collision_superposes_channels(self):
        # Two devices on token q: projected row q carries h1 + h2.
        cb = build_dft_codebook(16)
        h = sample_rayleigh(2, 8, rng(3))
        symbols = cb.matrix[:, [5, 5]].T
        y = transmit_slot(symbols, h, 0.0)
        projected = cb.matrix.conj().T @ y
        assert np.abs(projected[5] - (h[0] + h[1])).max() < 1e-9
        others = np.delete(projected, 5, axis=0)
        assert np.abs(others).max() < 1e-9

    def test_noise_only_variance(self):
        # K = 0 devices: the slot is pure noise at the requested variance.
        sigma2 = 0.25
        entries = []
        g = rng(4)
        for _ in range(50):
            y = transmit_slot(np.zeros((0, 64)), np.zeros((0, 16)), sigma2, g)
            entries.append(np.abs(y) ** 2)
        measured = float(np.mean(entries))
        assert abs(measured - sigma2) / sigma2 < 0.02

    def test_superposition_linearity(self):
        cb = build_dft_codebook(8)
        h = sample_rayleigh(4, 6, rng(5))
        tokens = np.array([1, 1, 4, 7])
        symbols = cb.matrix[:, tokens].T
        joint = transmit_slot(symbols, h, 0.0)
        split = transmit_slot(symbols[:2], h[:2], 0.0) + transmit_slot(symbols[2:], h[2:], 0.0)
        assert np.abs(joint - split).max() < 1e-12

    def test_energy_accounting_no_collisions(self):
        # Unit-norm orthogonal codewords: ||Y||_F^2 = sum_k ||h_k||^2.
        cb = build_dft_codebook(32)
        h = sample_rayleigh(5, 16, rng(6))
        symbols = cb.matrix[:, [0, 3, 9, 17, 30]].T
        y = transmit_slot(symbols, h, 0.0)
        assert abs(np.linalg.norm(y) ** 2 - np.sum(np.abs(h) ** 2)) < 1e-6 * np.sum(np.abs(h) ** 2)

    def test_noise_reproducible(self):
        cb = build_dft_codebook(8)
        h = sample_rayleigh(2, 4, rng(8))
        symbols = cb.matrix[:, [0, 1]].T
        a = transmit_slot(symbols, h, 0.1, rng(42))
        b = transmit_slot(symbols, h, 0.1, rng(42))
        assert np.array_equal(a, b)

    def test_device_count_mismatch(self):
        with pytest.raises(ValueError):
            transmit_slot(np.zeros((2, 8)), np.zeros((3, 4)), 0.0)

    def test_noise_requires_rng(self):
        with pytest.raises(ValueError):
            transmit_slot(np.zeros((1, 8)), np.zeros((1, 4)), 0.1)


def test_complex_gaussian_split_variance():
    z = complex_gaussian((200, 200), 0.5, rng(9))
    assert abs(np.var(z.real) - 0.25) < 0.01
    assert abs(np.var(z.imag) - 0.25) < 0.01
