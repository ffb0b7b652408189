from typing import List, Optional

import numpy as np

from app.lib.common.exceptions import ConfigurationError
from app.lib.detectors.base_detector import BaseDetector, DetectorOutput
from app.lib.evaluation.metrics import soft_output_from_onehot
from app.lib.mimo.constellation import hard_round, soft_decode
from app.lib.networks.detnet import compressed_statistics, detnet_forward_statistics
from app.lib.networks.fullycon import fullycon_forward
from app.lib.networks.params import Architecture, NetworkParams


class LearnedDetector(BaseDetector):
    """
    Wraps trained FullyCon or DetNet parameters as a detector.

    output_layer selects an earlier DetNet layer for early exit; by default
    the last layer answers.
    """

    produces_posteriors = True

    def __init__(self, params: NetworkParams, output_layer: Optional[int] = None) -> None:
        super().__init__(params.spec.constellation_obj)
        self.params = params
        self.name = params.spec.architecture.value
        layers = params.spec.layers
        if output_layer is not None:
            if params.spec.architecture is Architecture.FULLYCON:
                raise ConfigurationError("FullyCon has no per-layer outputs")
            if not 1 <= output_layer <= layers:
                raise ConfigurationError(f"Output layer {output_layer} outside 1..{layers}")
            self.name = f"{self.name}@{output_layer}"
        self.output_layer = output_layer or layers

    def _detect(self, H: np.ndarray, y: np.ndarray, sigma2: Optional[float]) -> DetectorOutput:
        output = self.detect_batch(H[None], y[None])
        return DetectorOutput(hard=output.hard[0], posteriors=output.posteriors[0])  # type: ignore[index]

    def layer_outputs(self, H, y) -> List[np.ndarray]:
        """Raw one-hot estimates of every layer for a batch (one entry for FullyCon)."""
        H = np.asarray(H, dtype=float)
        y = np.asarray(y, dtype=float)
        if self.params.spec.architecture is Architecture.FULLYCON:
            return [fullycon_forward(self.params, y)]
        Hty, HtH = compressed_statistics(H, y)
        return detnet_forward_statistics(self.params, Hty, HtH)

    def _decide(self, onehot: np.ndarray) -> DetectorOutput:
        return DetectorOutput(
            hard=hard_round(soft_decode(onehot, self.constellation), self.constellation),
            posteriors=soft_output_from_onehot(onehot, self.constellation),
            metadata={"skipped": np.zeros(onehot.shape[0], dtype=bool)},
        )

    def detect_batch(self, H, y, sigma2=None) -> DetectorOutput:
        outputs = self.layer_outputs(H, y)
        index = 0 if len(outputs) == 1 else self.output_layer - 1
        return self._decide(outputs[index])

    def detect_layers_batch(self, H, y) -> List[DetectorOutput]:
        """Decisions of every layer from one forward pass."""
        return [self._decide(onehot) for onehot in self.layer_outputs(H, y)]
