import numpy as np
import pytest

from todma.modem import (ModulationCodebook, build_dft_codebook, modulate, modulate_tokens,
                         orthonormality_defect)
from todma.sources import one_hot


class TestBuildDftCodebook:
    def test_two_point_dft(self):
        u = build_dft_codebook(2).matrix
        want = np.array([[1, 1], [1, -1]]) / np.sqrt(2)
        assert np.abs(u - want).max() < 1e-12

    def test_orthonormal_q4(self):
        u = build_dft_codebook(4).matrix
        assert np.abs(u.conj().T @ u - np.eye(4)).max() < 1e-12

    def test_paper_size_is_square(self):
        cb = build_dft_codebook(1024)
        assert (cb.l, cb.q) == (1024, 1024)

    def test_constant_modulus(self):
        u = build_dft_codebook(64).matrix
        assert np.abs(np.abs(u) - 1 / 8).max() < 1e-12

    def test_deterministic(self):
        a = build_dft_codebook(32).matrix
        b = build_dft_codebook(32).matrix
        assert np.array_equal(a, b)

    def test_rejects_small_q(self):
        with pytest.raises(ValueError):
            build_dft_codebook(1)

    def test_codebook_immutable(self):
        cb = build_dft_codebook(4)
        with pytest.raises(ValueError):
            cb.matrix[0, 0] = 0


class TestModulate:
    def test_selects_codebook_column(self):
        cb = build_dft_codebook(4)
        frame = modulate(one_hot(np.array([2]), 4), cb)
        assert np.array_equal(frame[:, 0], cb.matrix[:, 2])

    def test_repeated_token_repeats_column(self):
        cb = build_dft_codebook(4)
        frame = modulate(one_hot(np.array([0, 0]), 4), cb)
        assert np.array_equal(frame[:, 0], frame[:, 1])

    def test_unit_norm_columns(self):
        cb = build_dft_codebook(16)
        seq = np.random.default_rng(1).integers(0, 16, size=50)
        frame = modulate(one_hot(seq, 16), cb)
        norms = np.linalg.norm(frame, axis=0)
        assert np.abs(norms - 1).max() < 1e-10

    def test_projection_recovers_one_hot(self):
        # U^H (U B) = B up to numerical error for the orthonormal codebook.
        cb = build_dft_codebook(32)
        b = one_hot(np.random.default_rng(2).integers(0, 32, size=20), 32)
        recovered = cb.matrix.conj().T @ modulate(b, cb)
        assert np.abs(recovered - b).max() < 1e-9

    def test_tokens_fast_path_matches(self):
        cb = build_dft_codebook(8)
        seq = np.random.default_rng(3).integers(0, 8, size=12)
        assert np.array_equal(modulate_tokens(seq, cb), modulate(one_hot(seq, 8), cb))

    def test_dimension_mismatch(self):
        cb = build_dft_codebook(4)
        with pytest.raises(ValueError):
            modulate(np.zeros((5, 2)), cb)

    def test_token_out_of_range(self):
        cb = build_dft_codebook(4)
        with pytest.raises(ValueError):
            modulate_tokens(np.array([4]), cb)


def test_orthonormality_defect_detects_scaling():
    u = build_dft_codebook(8).matrix
    assert orthonormality_defect(u) < 1e-12
    assert orthonormality_defect(2 * u) > 1


def test_custom_codebook_accepted():
    # Any orthonormal matrix works behind the same contract.
    rng = np.random.default_rng(4)
    a = rng.standard_normal((8, 8)) + 1j * rng.standard_normal((8, 8))
    q_mat, _ = np.linalg.qr(a)
    cb = ModulationCodebook(q_mat)
    assert orthonormality_defect(cb.matrix) < 1e-10
