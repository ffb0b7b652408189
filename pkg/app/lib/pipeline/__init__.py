"""Training pipeline for the learned detectors."""

from app.lib.pipeline.training import TrainLogRow, TrainResult, build_network, train, validate

__all__ = ["TrainLogRow", "TrainResult", "build_network", "train", "validate"]
