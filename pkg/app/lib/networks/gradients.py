"""Architecture dispatch for training-time gradients."""

from typing import Dict, Tuple

import numpy as np

from app.lib.mimo.channel import SampleBatch
from app.lib.networks.detnet import detnet_gradient
from app.lib.networks.fullycon import fullycon_gradient
from app.lib.networks.params import Architecture, NetworkParams


def gradient(params: NetworkParams, batch: SampleBatch) -> Tuple[float, Dict[str, np.ndarray], np.ndarray]:
    """
    Exact gradient of the mean per-sample loss over a batch.

    FullyCon sees only y; DetNet sees (H, y).

    :return: (mean loss, gradients by parameter name, per-sample losses)
    """
    if params.spec.architecture is Architecture.FULLYCON:
        return fullycon_gradient(params, batch.y, batch.x_oh)
    return detnet_gradient(params, batch.H, batch.y, batch.x_oh)
