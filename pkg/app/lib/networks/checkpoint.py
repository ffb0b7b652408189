"""
Checkpoint container for trained networks.

A checkpoint is an .npz archive holding a JSON metadata document, every
parameter array in declared order, the optimizer state when present, and a
SHA-256 checksum over all of it.
"""

import hashlib
import io
import json
import logging
import zipfile
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, Optional, Union

import numpy as np

from app.lib.common.datetime_utilities import datetime_to_iso
from app.lib.common.exceptions import (
    CheckpointError,
    CheckpointIntegrityError,
    CheckpointMismatchError,
)
from app.lib.common.file_operations import atomic_write_bytes
from app.lib.networks.adam import AdamState
from app.lib.networks.params import NetworkParams, NetworkSpec, params_from_arrays

logger = logging.getLogger(__name__)

FORMAT_VERSION = 1
METADATA_KEY = "__metadata__"
CHECKSUM_KEY = "__checksum__"
PARAM_PREFIX = "param/"
FIRST_MOMENT_PREFIX = "adam_m/"
SECOND_MOMENT_PREFIX = "adam_v/"


@dataclass
class Checkpoint:
    params: NetworkParams
    adam_state: Optional[AdamState] = None
    metadata: Dict[str, Any] = field(default_factory=dict)

    @property
    def iterations(self) -> int:
        return int(self.metadata.get("training", {}).get("iterations", 0))


def _checksum(metadata_json: str, arrays: Dict[str, np.ndarray]) -> str:
    digest = hashlib.sha256(metadata_json.encode("utf-8"))
    for name in sorted(arrays):
        array = np.ascontiguousarray(arrays[name])
        digest.update(name.encode("utf-8"))
        digest.update(str(array.dtype).encode("utf-8"))
        digest.update(str(array.shape).encode("utf-8"))
        digest.update(array.tobytes())
    return digest.hexdigest()


def save_checkpoint(
    path: Union[str, Path],
    params: NetworkParams,
    adam_state: Optional[AdamState] = None,
    training: Optional[Dict[str, Any]] = None,
) -> Path:
    """
    Writes a checkpoint atomically.

    :param training: Training provenance (iterations, config hash, seed).
    :return: Path of the written file.
    """
    arrays = {f"{PARAM_PREFIX}{name}": np.asarray(value) for name, value in params.arrays.items()}
    adam = None
    if adam_state is not None:
        adam = {"step": adam_state.step, **adam_state.hyperparameters()}
        for name in params.names():
            arrays[f"{FIRST_MOMENT_PREFIX}{name}"] = adam_state.first_moment[name]
            arrays[f"{SECOND_MOMENT_PREFIX}{name}"] = adam_state.second_moment[name]

    metadata = {
        "format_version": FORMAT_VERSION,
        "network": params.spec.to_dict(),
        "param_order": params.names(),
        "training": training or {"iterations": 0},
        "adam": adam,
        "created": datetime_to_iso(),
    }
    metadata_json = json.dumps(metadata, sort_keys=True)

    buffer = io.BytesIO()
    np.savez(
        buffer,
        **arrays,
        **{METADATA_KEY: np.array(metadata_json), CHECKSUM_KEY: np.array(_checksum(metadata_json, arrays))},
    )
    target = atomic_write_bytes(path, buffer.getvalue())
    logger.debug(f"Checkpoint written to {target}")
    return target


def _read_archive(path: Path) -> Dict[str, np.ndarray]:
    if not path.exists():
        raise CheckpointError(f"Checkpoint not found: {path}")
    try:
        with np.load(path, allow_pickle=False) as archive:
            return {name: archive[name] for name in archive.files}
    except (OSError, ValueError, EOFError, KeyError, zipfile.BadZipFile) as e:
        raise CheckpointIntegrityError(f"Checkpoint {path} is unreadable: {e}") from e


def load_checkpoint(path: Union[str, Path]) -> Checkpoint:
    """
    Reads and verifies a checkpoint.

    :raises CheckpointError: If the file does not exist.
    :raises CheckpointIntegrityError: If it is truncated, malformed or fails its checksum.
    """
    path = Path(path)
    contents = _read_archive(path)
    if METADATA_KEY not in contents or CHECKSUM_KEY not in contents:
        raise CheckpointIntegrityError(f"Checkpoint {path} lacks metadata or checksum")

    metadata_json = str(contents.pop(METADATA_KEY))
    stored_checksum = str(contents.pop(CHECKSUM_KEY))
    if _checksum(metadata_json, contents) != stored_checksum:
        raise CheckpointIntegrityError(f"Checkpoint {path} failed its checksum")

    try:
        metadata = json.loads(metadata_json)
        if metadata.get("format_version") != FORMAT_VERSION:
            raise CheckpointIntegrityError(
                f"Unsupported checkpoint format {metadata.get('format_version')} in {path}"
            )
        spec = NetworkSpec.from_dict(metadata["network"])
        order = metadata["param_order"]
        arrays = {name: contents[f"{PARAM_PREFIX}{name}"] for name in order}
        adam_state = None
        if metadata.get("adam"):
            adam = dict(metadata["adam"])
            adam_state = AdamState(
                step=int(adam.pop("step")),
                first_moment={n: contents[f"{FIRST_MOMENT_PREFIX}{n}"] for n in order},
                second_moment={n: contents[f"{SECOND_MOMENT_PREFIX}{n}"] for n in order},
                **adam,
            )
    except CheckpointIntegrityError:
        raise
    except (KeyError, TypeError, ValueError) as e:
        raise CheckpointIntegrityError(f"Checkpoint {path} has malformed contents: {e}") from e

    return Checkpoint(params=params_from_arrays(spec, arrays), adam_state=adam_state, metadata=metadata)


def ensure_compatible(spec: NetworkSpec, constellation: str, K: int, N: int, is_complex: bool) -> None:
    """
    Refuses a network trained for another problem size or constellation.

    :raises CheckpointMismatchError: Naming every differing field.
    """
    expected = {"constellation": constellation, "K": K, "N": N, "is_complex": is_complex}
    actual = {
        "constellation": spec.constellation.value,
        "K": spec.K,
        "N": spec.N,
        "is_complex": spec.is_complex,
    }
    differing = [f"{k}: checkpoint {actual[k]!r}, requested {v!r}" for k, v in expected.items() if actual[k] != v]
    if differing:
        raise CheckpointMismatchError("Checkpoint does not match the evaluation setup (" + "; ".join(differing) + ")")


def describe_checkpoint(path: Union[str, Path]) -> str:
    """Human-readable summary of a checkpoint's metadata."""
    checkpoint = load_checkpoint(path)
    spec = checkpoint.params.spec
    if spec.architecture.value == "fullycon":
        widths = f"widths: {list(spec.hidden_widths)}"
    else:
        widths = f"widths: z={spec.z_width} v={spec.v_width}"
    lines = [
        f"architecture: {spec.architecture.value}",
        f"L: {spec.layers}",
        widths,
        f"constellation: {spec.constellation.value}",
        f"K: {spec.K}",
        f"N: {spec.N}",
        f"complex: {spec.is_complex}",
        f"training iterations: {checkpoint.iterations}",
        f"created: {checkpoint.metadata.get('created', 'unknown')}",
    ]
    return "\n".join(lines)
