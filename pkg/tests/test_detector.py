import numpy as np
import pytest
from scipy import stats

from todma.channel import complex_gaussian, sample_rayleigh, transmit_slot
from todma.detector import default_threshold, detect, project, row_energies
from todma.modem import build_dft_codebook


def rng(seed=0):
    return np.random.default_rng(seed)


class TestProject:
    def test_single_device_recovers_channel_row(self):
        cb = build_dft_codebook(16)
        h = sample_rayleigh(1, 8, rng(1))
        y = transmit_slot(cb.matrix[:, [6]].T, h, 0.0)
        h_hat = project(y, cb)
        assert np.abs(h_hat[6] - h[0]).max() < 1e-9
        assert np.abs(np.delete(h_hat, 6, axis=0)).max() < 1e-9

    def test_collision_row_is_channel_sum(self):
        cb = build_dft_codebook(16)
        h = sample_rayleigh(2, 8, rng(2))
        y = transmit_slot(cb.matrix[:, [3, 3]].T, h, 0.0)
        assert np.abs(project(y, cb)[3] - (h[0] + h[1])).max() < 1e-9

    def test_noise_variance_preserved(self):
        # Orthonormal projection leaves the per-entry noise variance at sigma^2.
        cb = build_dft_codebook(64)
        sigma2 = 0.04
        acc = 0.0
        count = 0
        g = rng(3)
        for _ in range(50):
            z = complex_gaussian((64, 64), sigma2, g)
            acc += float(np.sum(np.abs(project(z, cb)) ** 2))
            count += 64 * 64
        measured = acc / count
        assert abs(measured - sigma2) / sigma2 < 0.02

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError):
            project(np.zeros((8, 4)), build_dft_codebook(16))


class TestDefaultThreshold:
    def test_rule(self):
        assert default_threshold(0.01) == 0.02

    def test_zero(self):
        assert default_threshold(0.0) == 0.0

    def test_operating_point(self):
        assert abs(default_threshold(3.1622776601683794e-3) - 6.324555320336759e-3) < 1e-15

    def test_rejects_negative(self):
        with pytest.raises(ValueError):
            default_threshold(-1e-3)


class TestDetect:
    def test_noiseless_single_device(self):
        cb = build_dft_codebook(16)
        h = sample_rayleigh(1, 8, rng(4))
        h_hat = project(transmit_slot(cb.matrix[:, [5]].T, h, 0.0), cb)
        result = detect(h_hat, 1e-9)
        assert result.tokens.tolist() == [5]
        assert np.abs(result.csi_for(5) - h[0]).max() < 1e-9
        assert result.q == 16

    def test_strict_inequality_at_threshold(self):
        # Energy exactly at the threshold is excluded ("exceeds").
        h_hat = np.array([[1.0 + 0j], [2.0 + 0j]])
        result = detect(h_hat, 1.0)
        assert result.tokens.tolist() == [1]

    def test_monotone_in_threshold(self):
        h_hat = complex_gaussian((32, 8), 1.0, rng(5))
        low = set(detect(h_hat, 0.5).tokens.tolist())
        high = set(detect(h_hat, 1.5).tokens.tolist())
        assert high <= low

    def test_exact_recovery_noiseless(self):
        # With sigma^2 = 0 the detected set equals the transmitted set for any
        # threshold in (0, min_k ||h_k||^2 / M).
        cb = build_dft_codebook(32)
        k = 5
        h = sample_rayleigh(k, 16, rng(6))
        tokens = rng(7).choice(32, size=k, replace=False)
        h_hat = project(transmit_slot(cb.matrix[:, tokens].T, h, 0.0), cb)
        cap = (np.abs(h) ** 2).sum(axis=1).min() / 16
        for t in [1e-9, cap / 4, cap * 0.99]:
            assert set(detect(h_hat, t).tokens.tolist()) == set(tokens.tolist())

    def test_csi_keys_match_tokens(self):
        h_hat = complex_gaussian((16, 4), 1.0, rng(8))
        result = detect(h_hat, 1.0)
        assert set(result.as_dict()) == set(result.tokens.tolist())
        energies = row_energies(h_hat)
        assert all(energies[t] > 1.0 for t in result.tokens)

    def test_rejects_negative_threshold(self):
        with pytest.raises(ValueError):
            detect(np.zeros((4, 2), dtype=complex), -0.1)


def test_false_alarm_rate_near_chi_square_tail():
    # Row energy/M of pure noise is sigma^2 * chi2_{2M} / (2M); with T_h = 2 sigma^2
    # the false-alarm probability is P(chi2_{2M} > 4M).  Coarse check at 1e5 rows;
    # the tight 1e6-row comparison lives in the acceptance suite.
    m, q, sigma2 = 16, 64, 0.02
    cb = build_dft_codebook(q)
    th = default_threshold(sigma2)
    g = rng(9)
    false_alarms = 0
    n_slots = 1600  # 1600 * 64 rows
    for _ in range(n_slots):
        z = complex_gaussian((q, m), sigma2, g)
        false_alarms += detect(project(z, cb), th).tokens.size
    p_hat = false_alarms / (n_slots * q)
    p = stats.chi2.sf(4 * m, 2 * m)
    stderr = np.sqrt(p * (1 - p) / (n_slots * q))
    assert abs(p_hat - p) < 4 * stderr
