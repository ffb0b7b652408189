"""Tests for channel models, noise calibration and sample generation."""

import numpy as np
import pytest

from app.lib.common.exceptions import ConfigurationError
from app.lib.mimo.channel import (
    TRAIN_STREAM,
    ChannelModel,
    RngStream,
    fixed_channel,
    sample_batch,
    sample_channel,
    sample_problem,
    sigma_for_snr,
    toeplitz_sqrt,
)
from app.lib.mimo.constellation import symbol_indices


@pytest.mark.unit
class TestChannelModel:
    """Construction and derived sizes."""

    def test_rejects_k_above_n(self):
        with pytest.raises(ConfigurationError):
            ChannelModel(regime="vc", distribution="iid_gaussian", K=5, N=3)

    def test_rejects_bad_alpha(self):
        with pytest.raises(ConfigurationError):
            ChannelModel(regime="fc", distribution="alpha_toeplitz", K=3, N=3, alpha=1.2)

    def test_complex_dimensions(self, complex_model):
        assert complex_model.n_inputs == 4
        assert complex_model.n_outputs == 4


@pytest.mark.unit
class TestChannels:
    """Fixed and varying channel draws."""

    def test_toeplitz_gram(self):
        root = toeplitz_sqrt(3, 0.55)
        expected = np.array([[1, 0.55, 0.55**2], [0.55, 1, 0.55], [0.55**2, 0.55, 1]])
        assert np.allclose(root.T @ root, expected)

    def test_toeplitz_model_gram_diagonal(self, toeplitz_model):
        H = fixed_channel(toeplitz_model)
        gram = H.T @ H
        assert np.allclose(np.diag(gram), 1.0)
        assert np.allclose(np.diag(gram, k=1), 0.55)
        assert not H.flags.writeable

    def test_fc_returns_identical_matrix(self, rng):
        model = ChannelModel(regime="fc", distribution="iid_gaussian", K=3, N=5, fixed_seed=9)
        first = sample_channel(model, rng)
        second = sample_channel(model, np.random.default_rng(999))
        assert np.array_equal(first, second)

    def test_vc_draws_differ(self, small_model, rng):
        assert not np.array_equal(sample_channel(small_model, rng), sample_channel(small_model, rng))

    def test_complex_block_structure(self, complex_model, rng):
        H = sample_channel(complex_model, rng)
        assert np.allclose(H[:2, :2], H[2:, 2:])
        assert np.allclose(H[:2, 2:], -H[2:, :2])


@pytest.mark.unit
class TestNoise:
    """SNR to noise variance."""

    def test_iid_bpsk(self, small_model, bpsk):
        # E[tr H^T H] / N = K for i.i.d. unit-variance entries
        assert sigma_for_snr(small_model, bpsk, 0.0) == pytest.approx(4.0)
        assert sigma_for_snr(small_model, bpsk, 10.0) == pytest.approx(0.4)

    def test_vectorized(self, small_model, bpsk):
        values = sigma_for_snr(small_model, bpsk, np.array([0.0, 10.0]))
        assert np.allclose(values, [4.0, 0.4])


@pytest.mark.unit
class TestSampling:
    """Labeled batches."""

    def test_batch_shapes_and_alphabet(self, small_model, bpsk, rng):
        batch = sample_batch(small_model, bpsk, 0.0, 10.0, rng, 16)
        assert batch.H.shape == (16, 8, 4)
        assert batch.y.shape == (16, 8)
        assert batch.x_oh.shape == (16, 8)
        assert len(batch) == 16
        symbol_indices(batch.x, bpsk)
        assert np.all((batch.snr_db >= 0.0) & (batch.snr_db <= 10.0))

    def test_psk8_symbols_are_points(self, complex_model, psk8, rng):
        batch = sample_batch(complex_model, psk8, 20.0, 20.0, rng, 50)
        radii = np.hypot(batch.x[:, :2], batch.x[:, 2:])
        assert np.allclose(radii, 1.0)

    def test_residual_matches_noise_level(self, bpsk):
        model = ChannelModel(regime="vc", distribution="iid_gaussian", K=4, N=8)
        batch = sample_batch(model, bpsk, 5.0, 5.0, np.random.default_rng(3), 4000)
        residual = batch.y - np.einsum("bij,bj->bi", batch.H, batch.x)
        assert residual.var() == pytest.approx(sigma_for_snr(model, bpsk, 5.0), rel=0.05)

    def test_same_key_same_draws(self, small_model, bpsk):
        stream = RngStream(5, TRAIN_STREAM)
        first = sample_batch(small_model, bpsk, 0.0, 5.0, stream.generator(3), 8)
        second = sample_batch(small_model, bpsk, 0.0, 5.0, stream.generator(3), 8)
        third = sample_batch(small_model, bpsk, 0.0, 5.0, stream.generator(4), 8)
        assert np.array_equal(first.y, second.y)
        assert not np.array_equal(first.y, third.y)

    def test_single_problem(self, small_model, bpsk, rng):
        sample = sample_problem(small_model, bpsk, 3.0, 3.0, rng)
        assert sample.H.shape == (8, 4)
        assert sample.snr_db == 3.0

    def test_empty_snr_range(self, small_model, bpsk, rng):
        with pytest.raises(ConfigurationError):
            sample_batch(small_model, bpsk, 10.0, 5.0, rng, 4)

    def test_complex_mismatch(self, small_model, qpsk, rng):
        with pytest.raises(ConfigurationError):
            sample_batch(small_model, qpsk, 5.0, 5.0, rng, 4)
