"""Common utilities for MIMO Detect."""

from app.lib.common.config_utilities import (
    config_hash,
    load_experiment_config,
    load_json_file,
    parse_experiment_config,
)
from app.lib.common.datetime_utilities import datetime_to_iso, utc_now
from app.lib.common.csv_utilities import read_records_csv, write_records_csv
from app.lib.common.file_operations import atomic_write_bytes, prepare_experiment_dir
from app.lib.common.logger_utilities import configure_logging

__all__ = [
    "config_hash",
    "load_experiment_config",
    "load_json_file",
    "parse_experiment_config",
    "datetime_to_iso",
    "utc_now",
    "read_records_csv",
    "write_records_csv",
    "atomic_write_bytes",
    "prepare_experiment_dir",
    "configure_logging",
]
