"""Tests for the AMP detector and its denoiser."""

import numpy as np
import pytest

from app.lib.common.exceptions import ConfigurationError, DomainError
from app.lib.detectors import AmpConfig, AmpDetector, SphereDecoder, amp_detect, posterior_mean_denoiser
from app.lib.evaluation.metrics import error_rate
from app.lib.mimo.channel import ChannelModel, sample_batch
from app.lib.mimo.constellation import hard_round


@pytest.mark.unit
class TestDenoiser:
    """Scalar posterior mean under a uniform alphabet prior."""

    def test_bpsk_closed_form(self, bpsk):
        r = np.linspace(-3, 3, 13)
        mean, variance = posterior_mean_denoiser(r, 0.7, bpsk)
        assert np.allclose(mean, np.tanh(r / 0.7))
        assert np.allclose(variance, 1 - np.tanh(r / 0.7) ** 2)

    def test_symmetric_zero(self, qam16):
        mean, _ = posterior_mean_denoiser(np.zeros(1), 2.0, qam16)
        assert mean[0] == pytest.approx(0.0, abs=1e-12)

    def test_qam16_far_out(self, qam16):
        mean, _ = posterior_mean_denoiser(np.array([10.0]), 0.1, qam16)
        assert abs(mean[0] - 3.0) < 1e-9

    def test_rejects_non_positive_variance(self, bpsk):
        with pytest.raises(DomainError):
            posterior_mean_denoiser(np.zeros(2), 0.0, bpsk)


@pytest.mark.unit
class TestAmpConfig:
    def test_invalid_values(self):
        with pytest.raises(ConfigurationError):
            AmpConfig(iterations=0)
        with pytest.raises(ConfigurationError):
            AmpConfig(damping=1.0)

    def test_noise_variance_required(self):
        with pytest.raises(ConfigurationError, match="noise variance"):
            AmpConfig(knows_sigma2=False)


@pytest.mark.unit
class TestAmpDetect:
    """Iterations on single instances."""

    def test_orthonormal_low_noise(self, bpsk, rng):
        Q, _ = np.linalg.qr(rng.standard_normal((8, 4)))
        x = np.array([1.0, -1.0, -1.0, 1.0])
        output = amp_detect(Q, Q @ x, 1e-8, bpsk, AmpConfig(iterations=1))
        assert np.array_equal(output.hard, x)

    def test_single_iteration_is_denoised_matched_filter(self, bpsk, rng):
        H = rng.standard_normal((6, 3))
        y = rng.standard_normal(6)
        sigma2 = 0.3
        scale = np.sqrt(np.sum(H * H) / 3)
        A = H / scale
        tau2 = sigma2 / scale**2 + 0.5 * bpsk.component_energy
        expected, _ = posterior_mean_denoiser(A.T @ (y / scale), tau2, bpsk)

        output = amp_detect(H, y, sigma2, bpsk, AmpConfig(iterations=1, damping=0.0))
        assert np.allclose(output.metadata["estimate"], expected)
        assert np.array_equal(output.hard, hard_round(expected, bpsk))

    def test_posteriors_normalized(self, qam16, complex_model, rng):
        batch = sample_batch(complex_model, qam16, 15.0, 15.0, rng, 5)
        output = AmpDetector(qam16).detect_batch(batch.H, batch.y, batch.sigma2)
        assert output.posteriors.shape == (5, 4, 4)
        assert np.allclose(output.posteriors.sum(axis=-1), 1.0)

    def test_divergence_flagged_not_raised(self, bpsk, rng):
        H = rng.standard_normal((4, 2))
        output = amp_detect(H, H @ np.ones(2), 0.1, bpsk, AmpConfig(divergence_threshold=1e-6))
        assert output.metadata["diverged"]
        assert output.hard.shape == (2,)

    def test_requires_noise_variance(self, bpsk):
        with pytest.raises(ConfigurationError):
            AmpDetector(bpsk).detect(np.eye(2), np.ones(2))


@pytest.mark.integration
@pytest.mark.slow
class TestAmpAccuracy:
    """AMP against the exact ML decision on an i.i.d. channel."""

    def test_close_to_sphere_decoder(self, bpsk):
        model = ChannelModel(regime="vc", distribution="iid_gaussian", K=8, N=16)
        batch = sample_batch(model, bpsk, 6.0, 6.0, np.random.default_rng(21), 2000)
        amp = AmpDetector(bpsk).detect_batch(batch.H, batch.y, batch.sigma2)
        sd = SphereDecoder(bpsk).detect_batch(batch.H, batch.y)
        amp_errors, total = error_rate(amp.hard, batch.x, bpsk)
        sd_errors, _ = error_rate(sd.hard, batch.x, bpsk)
        assert amp_errors / total <= 2 * sd_errors / total + 0.01
