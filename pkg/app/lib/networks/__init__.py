"""Learned detectors: FullyCon, DetNet, Adam and checkpoints."""

from app.lib.networks.adam import AdamState, adam_step
from app.lib.networks.checkpoint import (
    Checkpoint,
    describe_checkpoint,
    ensure_compatible,
    load_checkpoint,
    save_checkpoint,
)
from app.lib.networks.detnet import detnet_forward, detnet_gradient, detnet_loss
from app.lib.networks.gradients import gradient
from app.lib.networks.fullycon import fullycon_forward, fullycon_gradient, fullycon_loss
from app.lib.networks.params import (
    Architecture,
    DetNetParams,
    FullyConParams,
    LossWeighting,
    NetworkParams,
    NetworkSpec,
    detnet_spec,
    fullycon_spec,
    init_params,
    parameter_count,
)

__all__ = [
    "AdamState",
    "adam_step",
    "Checkpoint",
    "describe_checkpoint",
    "ensure_compatible",
    "load_checkpoint",
    "save_checkpoint",
    "detnet_forward",
    "detnet_gradient",
    "detnet_loss",
    "gradient",
    "fullycon_forward",
    "fullycon_gradient",
    "fullycon_loss",
    "Architecture",
    "DetNetParams",
    "FullyConParams",
    "LossWeighting",
    "NetworkParams",
    "NetworkSpec",
    "detnet_spec",
    "fullycon_spec",
    "init_params",
    "parameter_count",
]
