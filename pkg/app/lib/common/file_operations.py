import logging
import os
import shutil
import tempfile
from pathlib import Path
from typing import Union

from app.lib.common.exceptions import ArtifactExistsError


def prepare_experiment_dir(
    output_root: Union[str, Path], experiment_id: str, force: bool = False
) -> Path:
    """
    Creates <output_root>/<experiment_id>/ for a run.

    A directory that already holds files is only reused when force is set,
    in which case its contents are removed first.

    :param output_root: Artifact root directory.
    :param experiment_id: Filesystem-safe experiment id.
    :param force: Overwrite existing artifacts.
    :return: The experiment directory.
    :raises ArtifactExistsError: If artifacts exist and force is not set.
    """
    target = Path(output_root) / experiment_id
    if target.exists() and any(target.iterdir()):
        if not force:
            raise ArtifactExistsError(
                f"Experiment directory {target} already holds artifacts; use --force to overwrite"
            )
        logging.warning(f"Overwriting artifacts in {target}")
        shutil.rmtree(target)

    target.mkdir(parents=True, exist_ok=True)
    logging.debug(f"Experiment directory ready: {target}")
    return target


def atomic_write_bytes(file_path: Union[str, Path], payload: bytes) -> Path:
    """
    Writes bytes to a temporary sibling file and renames it over the target.

    :param file_path: Final location.
    :param payload: File contents.
    :return: The final path.
    """
    path = Path(file_path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, temp_name = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as handle:
            handle.write(payload)
        os.replace(temp_name, path)
    except Exception as e:
        logging.error(f"Error writing {path}: {e}")
        if os.path.exists(temp_name):
            os.remove(temp_name)
        raise
    return path
