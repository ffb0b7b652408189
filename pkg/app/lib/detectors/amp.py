"""Approximate message passing with the separable Bayes denoiser."""

from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np
from scipy.special import softmax

from app.lib.common.exceptions import ConfigurationError, DomainError
from app.lib.detectors.base_detector import BaseDetector, DetectorOutput
from app.lib.mimo.constellation import Constellation, hard_round

TAU_FLOOR = np.finfo(float).tiny


@dataclass(frozen=True)
class AmpConfig:
    iterations: int = 50
    damping: float = 0.0
    knows_sigma2: bool = True
    divergence_threshold: float = 1e6

    def __post_init__(self) -> None:
        if self.iterations < 1:
            raise ConfigurationError(f"AMP needs at least one iteration, got {self.iterations}")
        if not 0.0 <= self.damping < 1.0:
            raise ConfigurationError(f"AMP damping must lie in [0, 1), got {self.damping}")
        if not self.knows_sigma2:
            raise ConfigurationError("AMP needs the noise variance; knows_sigma2 cannot be disabled")


def denoiser_weights(r, tau2, c: Constellation) -> np.ndarray:
    """
    Posterior weights of each alphabet value given r = x + sqrt(tau2) z.

    The prior is the constellation's component prior, so 8-PSK components
    are weighted by how often each real value is transmitted.
    """
    r = np.asarray(r, dtype=float)
    tau2 = np.asarray(tau2, dtype=float)
    if np.any(tau2 <= 0):
        raise DomainError(f"Denoiser variance must be positive, got {tau2}")
    logits = -((r[..., None] - c.alphabet) ** 2) / (2.0 * tau2[..., None])
    return softmax(logits + np.log(c.component_prior), axis=-1)


def posterior_mean_denoiser(r, tau2, c: Constellation) -> Tuple[np.ndarray, np.ndarray]:
    """
    Conditional mean and variance of X given X + sqrt(tau2) Z = r.

    :return: (mean, variance) with the shape of r.
    """
    weights = denoiser_weights(r, tau2, c)
    mean = weights @ c.alphabet
    variance = np.maximum(weights @ c.alphabet**2 - mean**2, 0.0)
    return mean, variance


def amp_batch(H, y, sigma2, c: Constellation, cfg: AmpConfig = AmpConfig()) -> DetectorOutput:
    """
    Runs AMP on a batch of instances.

    The channel is rescaled so its columns have unit mean squared norm, then
    iterated as r = x + A^T z, denoise, z = y - A x + z beta mean(v) / tau2,
    tau2 = sigma2 + beta mean(v), beta = n_in / n_out. Instances whose
    pre-denoiser estimate leaves the threshold are frozen and flagged.
    """
    H = np.asarray(H, dtype=float)
    y = np.asarray(y, dtype=float)
    sigma2 = np.broadcast_to(np.asarray(sigma2, dtype=float), (H.shape[0],))
    if np.any(sigma2 <= 0):
        raise DomainError("AMP requires a positive noise variance")

    batch, n_outputs, n_inputs = H.shape
    scale = np.sqrt(np.einsum("bij,bij->b", H, H) / n_inputs)
    A = H / scale[:, None, None]
    y_scaled = y / scale[:, None]
    noise = sigma2 / scale**2
    beta = n_inputs / n_outputs

    x_hat = np.zeros((batch, n_inputs))
    z = y_scaled.copy()
    tau2 = noise + beta * c.component_energy
    weights = denoiser_weights(np.zeros_like(x_hat), tau2[:, None], c)
    diverged = np.zeros(batch, dtype=bool)

    for _ in range(cfg.iterations):
        r = x_hat + np.einsum("bij,bi->bj", A, z)
        norms = np.linalg.norm(r, axis=1)
        diverged |= ~np.isfinite(norms) | (norms > cfg.divergence_threshold)
        active = ~diverged

        with np.errstate(invalid="ignore", over="ignore"):
            new_weights = denoiser_weights(np.where(active[:, None], r, 0.0), tau2[:, None], c)
        mean = new_weights @ c.alphabet
        variance = np.maximum(new_weights @ c.alphabet**2 - mean**2, 0.0)
        x_new = (1.0 - cfg.damping) * mean + cfg.damping * x_hat
        v_mean = variance.mean(axis=1)

        z_new = y_scaled - np.einsum("bij,bj->bi", A, x_new) + z * (beta * v_mean / tau2)[:, None]
        tau2_new = np.maximum(noise + beta * v_mean, TAU_FLOOR)

        x_hat = np.where(active[:, None], x_new, x_hat)
        z = np.where(active[:, None], z_new, z)
        tau2 = np.where(active, tau2_new, tau2)
        weights = np.where(active[:, None, None], new_weights, weights)

    return DetectorOutput(
        hard=hard_round(x_hat, c),
        posteriors=weights,
        metadata={
            "skipped": np.zeros(batch, dtype=bool),
            "diverged": diverged,
            "iterations": cfg.iterations,
            "estimate": x_hat,
        },
    )


def amp_detect(H, y, sigma2: float, c: Constellation, cfg: AmpConfig = AmpConfig()) -> DetectorOutput:
    """Single-instance AMP; divergence is reported in metadata, not raised."""
    H = np.asarray(H, dtype=float)
    y = np.asarray(y, dtype=float)
    output = amp_batch(H[None], y[None], np.array([sigma2]), c, cfg)
    return DetectorOutput(
        hard=output.hard[0],
        posteriors=output.posteriors[0],  # type: ignore[index]
        metadata={
            "diverged": bool(output.metadata["diverged"][0]),
            "iterations": cfg.iterations,
            "estimate": output.metadata["estimate"][0],
        },
    )


class AmpDetector(BaseDetector):
    name = "amp"
    uses_noise_variance = True
    produces_posteriors = True

    def __init__(self, constellation: Constellation, config: Optional[AmpConfig] = None) -> None:
        super().__init__(constellation)
        self.config = config or AmpConfig()

    def _detect(self, H: np.ndarray, y: np.ndarray, sigma2: Optional[float]) -> DetectorOutput:
        output = amp_detect(H, y, float(sigma2), self.constellation, self.config)  # type: ignore[arg-type]
        if output.metadata["diverged"]:
            self.logger.warning("AMP diverged on a single instance")
        return output

    def detect_batch(self, H, y, sigma2=None) -> DetectorOutput:
        output = amp_batch(H, y, self._noise_variance(sigma2), self.constellation, self.config)
        count = int(np.sum(output.metadata["diverged"]))
        if count:
            self.logger.warning(f"AMP diverged on {count} of {len(output.hard)} instances")
        return output
