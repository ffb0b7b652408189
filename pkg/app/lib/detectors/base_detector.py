import logging
from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from typing import Any, Dict, Optional

import numpy as np

from app.lib.common.exceptions import ConfigurationError, DetectionError, DomainError
from app.lib.mimo.constellation import Constellation


@dataclass
class DetectorOutput:
    """
    Hard decisions, optional per-component posteriors and run metadata.

    Single-instance outputs hold hard of shape (n,) and posteriors of shape
    (n, |S|); batch outputs add a leading batch axis and carry a boolean
    "skipped" mask in metadata.
    """

    hard: np.ndarray
    posteriors: Optional[np.ndarray] = None
    metadata: Dict[str, Any] = field(default_factory=dict)

    @property
    def skipped(self) -> np.ndarray:
        mask = self.metadata.get("skipped")
        if mask is None:
            return np.zeros(self.hard.shape[0] if self.hard.ndim > 1 else 1, dtype=bool)
        return np.asarray(mask, dtype=bool)


class BaseDetector(ABC):
    """
    Abstract base class for detectors. Every detector consumes the real-valued
    model (H, y); only detectors flagged with uses_noise_variance ever see sigma2.
    """

    name: str = "detector"
    uses_noise_variance: bool = False
    search_based: bool = False
    produces_posteriors: bool = False

    def __init__(self, constellation: Constellation) -> None:
        self.constellation = constellation
        self.logger = logging.getLogger(self.__class__.__name__)

    def __repr__(self) -> str:
        return f"{self.__class__.__name__}(name={self.name!r}, constellation={self.constellation.kind.value!r})"

    def detect(self, H, y, sigma2: Optional[float] = None) -> DetectorOutput:
        """
        Detects the transmitted vector of one instance.

        :param H: Real channel matrix (n_out, n_in).
        :param y: Received vector (n_out,).
        :param sigma2: Noise variance; withheld from detectors that do not use it.
        :return: DetectorOutput for the instance.
        """
        H = np.asarray(H, dtype=float)
        y = np.asarray(y, dtype=float)
        if H.ndim != 2 or y.shape != (H.shape[0],):
            raise DomainError(f"Shapes H{H.shape} and y{y.shape} are inconsistent")
        return self._detect(H, y, self._noise_variance(sigma2))

    def _noise_variance(self, sigma2):
        if not self.uses_noise_variance:
            return None
        if sigma2 is None:
            raise ConfigurationError(f"Detector '{self.name}' requires the noise variance")
        return sigma2

    @abstractmethod
    def _detect(self, H: np.ndarray, y: np.ndarray, sigma2: Optional[float]) -> DetectorOutput:
        """
        Detector-specific single-instance detection.
        :param H: Validated channel matrix.
        :param y: Validated received vector.
        :param sigma2: Noise variance, or None when the detector must not see it.
        :return: DetectorOutput.
        """
        pass

    def detect_batch(self, H, y, sigma2=None) -> DetectorOutput:
        """
        Detects a batch of instances one by one.

        Instances whose detection raises a DetectionError are marked in the
        "skipped" mask and carry NaN decisions. Subclasses with a vectorized
        formulation override this method.

        :param H: Channels (B, n_out, n_in).
        :param y: Received vectors (B, n_out).
        :param sigma2: Noise variances (B,) or None.
        """
        H = np.asarray(H, dtype=float)
        y = np.asarray(y, dtype=float)
        batch, n_inputs = H.shape[0], H.shape[2]
        size = self.constellation.onehot_dim

        hard = np.full((batch, n_inputs), np.nan)
        posteriors = np.full((batch, n_inputs, size), np.nan) if self.produces_posteriors else None
        skipped = np.zeros(batch, dtype=bool)
        per_sample = []

        for index in range(batch):
            noise = None if sigma2 is None else float(np.asarray(sigma2)[index])
            try:
                output = self.detect(H[index], y[index], noise)
            except DetectionError as e:
                self.logger.warning(f"Skipping instance {index}: {e}")
                skipped[index] = True
                per_sample.append({})
                continue
            hard[index] = output.hard
            if posteriors is not None and output.posteriors is not None:
                posteriors[index] = output.posteriors
            per_sample.append(output.metadata)

        return DetectorOutput(
            hard=hard,
            posteriors=posteriors,
            metadata={"skipped": skipped, "per_sample": per_sample},
        )
