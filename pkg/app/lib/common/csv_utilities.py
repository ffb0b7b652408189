import logging
import os
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Union

import pandas as pd

from app.lib.common.env_config import Config


def write_records_csv(
    file_path: Union[str, Path],
    records: List[Dict[str, Any]],
    header: Optional[Dict[str, Any]] = None,
    columns: Optional[Sequence[str]] = None,
) -> Path:
    """
    Writes result rows to a CSV file preceded by a '#' header block.

    Every header entry becomes one "# key=value" line so a row can be traced
    back to the experiment id, config hash and seed that produced it.

    :param file_path: Target file.
    :param records: Rows as dictionaries.
    :param header: Metadata written above the table.
    :param columns: Column order; columns missing from every row are dropped,
                    extra columns are appended in sorted order.
    :return: Path of the written file.
    """
    logger = logging.getLogger("csv_writer")
    path = Path(file_path)
    os.makedirs(path.parent, exist_ok=True)

    frame = pd.DataFrame.from_records(records)
    if columns is not None:
        ordered = [c for c in columns if c in frame.columns]
        extra = sorted(c for c in frame.columns if c not in ordered)
        frame = frame.reindex(columns=ordered + extra)

    if frame.empty:
        logger.warning(f"No rows to write for {path.name}.")

    with open(path, mode="w", encoding="utf-8", newline="") as file:
        for key, value in (header or {}).items():
            file.write(f"# {key}={value}\n")
        frame.to_csv(file, index=False, float_format=Config.CSV_FLOAT_FORMAT)

    logger.info(f"Data successfully written to {path}. Total rows: {len(frame)}")
    return path


def read_records_csv(file_path: Union[str, Path]) -> pd.DataFrame:
    """
    Reads a CSV written by write_records_csv, skipping the header block.

    :param file_path: Source file.
    :return: The table as a DataFrame.
    """
    return pd.read_csv(file_path, comment="#")


def read_csv_header(file_path: Union[str, Path]) -> Dict[str, str]:
    """
    Returns the '# key=value' header block of a result file.

    :param file_path: Source file.
    :return: Header entries as strings.
    """
    header: Dict[str, str] = {}
    with open(file_path, mode="r", encoding="utf-8") as file:
        for line in file:
            if not line.startswith("#"):
                break
            key, _, value = line[1:].strip().partition("=")
            header[key.strip()] = value.strip()
    return header
