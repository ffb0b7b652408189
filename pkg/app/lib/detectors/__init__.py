"""Detectors behind one interface, registered by their CLI names."""

from typing import Any, Dict, Type

from app.lib.common.exceptions import ConfigurationError
from app.lib.detectors.amp import AmpConfig, AmpDetector, amp_detect, posterior_mean_denoiser
from app.lib.detectors.base_detector import BaseDetector, DetectorOutput
from app.lib.detectors.exhaustive import (
    ExactPosteriorDetector,
    MLDetector,
    exact_posteriors,
    ml_detect_exhaustive,
)
from app.lib.detectors.learned import LearnedDetector
from app.lib.detectors.sphere import MBestDetector, SphereDecoder, mbest_soft, sphere_decode
from app.lib.detectors.zero_forcing import ZeroForcingDetector, zf_detect
from app.lib.mimo.constellation import Constellation

DETECTOR_CLASSES: Dict[str, Type[BaseDetector]] = {
    "zf": ZeroForcingDetector,
    "ml": MLDetector,
    "exact": ExactPosteriorDetector,
    "amp": AmpDetector,
    "sd": SphereDecoder,
    "mbest": MBestDetector,
}

# Backed by checkpoints rather than constructed from options
LEARNED_DETECTORS = ("detnet", "fullycon")


def create_detector(name: str, constellation: Constellation, **options: Any) -> BaseDetector:
    """
    Instantiate a classical detector by CLI name.

    :param options: "m" and "weighting" for mbest; "iterations" and "damping" for amp.
    :raises ConfigurationError: For unknown or checkpoint-backed names.
    """
    if name in LEARNED_DETECTORS:
        raise ConfigurationError(f"Detector '{name}' is loaded from a checkpoint")
    if name not in DETECTOR_CLASSES:
        raise ConfigurationError(
            f"Unknown detector '{name}'. Supported: {', '.join([*DETECTOR_CLASSES, *LEARNED_DETECTORS])}"
        )
    if name == "mbest":
        return MBestDetector(
            constellation, m=int(options.get("m") or 5), weighting=options.get("weighting", "likelihood")
        )
    if name == "amp":
        config = AmpConfig(
            iterations=int(options.get("iterations", 50)), damping=float(options.get("damping", 0.0))
        )
        return AmpDetector(constellation, config)
    return DETECTOR_CLASSES[name](constellation)


__all__ = [
    "AmpConfig",
    "AmpDetector",
    "BaseDetector",
    "DetectorOutput",
    "ExactPosteriorDetector",
    "LearnedDetector",
    "MBestDetector",
    "MLDetector",
    "SphereDecoder",
    "ZeroForcingDetector",
    "DETECTOR_CLASSES",
    "LEARNED_DETECTORS",
    "create_detector",
    "amp_detect",
    "exact_posteriors",
    "mbest_soft",
    "ml_detect_exhaustive",
    "posterior_mean_denoiser",
    "sphere_decode",
    "zf_detect",
]
