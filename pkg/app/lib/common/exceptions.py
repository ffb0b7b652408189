"""Custom exceptions for MIMO Detect."""

from typing import Optional


class MimoDetectError(Exception):
    """Base exception for all MIMO Detect errors."""

    pass


class ConfigurationError(MimoDetectError):
    """Raised when configuration is invalid or missing."""

    pass


class DomainError(MimoDetectError):
    """Raised when an input lies outside the domain of an operation."""

    pass


class DetectionError(MimoDetectError):
    """Raised when a detector cannot produce an output for an instance."""

    pass


class NumericalError(DetectionError):
    """Raised on singular or rank-deficient channel matrices."""

    pass


class SearchSpaceError(DetectionError):
    """Raised when an exhaustive enumeration exceeds its size guard."""

    pass


class TrainingDivergedError(MimoDetectError):
    """Raised when the training loss stops being finite."""

    def __init__(self, message: str, sample_index: Optional[int] = None) -> None:
        super().__init__(message)
        self.sample_index = sample_index


class CheckpointError(MimoDetectError):
    """Raised when a checkpoint cannot be read or written."""

    pass


class CheckpointIntegrityError(CheckpointError):
    """Raised when a checkpoint is truncated or its checksum does not match."""

    pass


class CheckpointMismatchError(CheckpointError):
    """Raised when checkpoint metadata disagrees with the requested setup."""

    pass


class ArtifactExistsError(MimoDetectError):
    """Raised when an experiment directory already holds artifacts."""

    pass
