import hashlib
import json
import logging
import os
from pathlib import Path
from typing import Any, Dict, Union

from pydantic import BaseModel, ValidationError

from app.lib.common.exceptions import ConfigurationError
from app.lib.common.validation import ExperimentConfig


def load_json_file(config_path: Union[str, Path]) -> Dict[str, Any]:
    """
    Loads a JSON document from disk.

    :param config_path: Path to the JSON file.
    :return: Parsed document.
    :raises ConfigurationError: If the file is missing or not valid JSON.
    """
    if not os.path.exists(config_path):
        raise ConfigurationError(f"Configuration file not found: {config_path}")

    try:
        with open(config_path, "r", encoding="utf-8") as f:
            data = json.load(f)
    except json.JSONDecodeError as e:
        logging.error(f"Error decoding JSON from {config_path}: {e}")
        raise ConfigurationError(f"Invalid JSON format in {config_path}: {e}") from e

    if not isinstance(data, dict):
        raise ConfigurationError(f"Top level of {config_path} must be a JSON object")
    return data


def format_validation_error(error: ValidationError) -> str:
    """
    Flattens a pydantic error into one line naming every offending field.

    :param error: The pydantic ValidationError.
    :return: Messages of the form "field.path: reason" joined by "; ".
    """
    parts = []
    for detail in error.errors():
        location = ".".join(str(item) for item in detail.get("loc", ())) or "<root>"
        parts.append(f"{location}: {detail.get('msg', 'invalid value')}")
    return "; ".join(parts)


def parse_experiment_config(data: Dict[str, Any]) -> ExperimentConfig:
    """
    Validates a parsed document as an experiment config.

    :raises ConfigurationError: On any schema violation.
    """
    try:
        return ExperimentConfig(**data)
    except ValidationError as e:
        raise ConfigurationError(f"Invalid experiment config: {format_validation_error(e)}") from e


def load_experiment_config(config_path: Union[str, Path]) -> ExperimentConfig:
    """
    Loads and validates an experiment config file.

    :param config_path: Path to the JSON config.
    :return: Validated ExperimentConfig.
    """
    logging.debug(f"Loading experiment config from {config_path}")
    return parse_experiment_config(load_json_file(config_path))


def config_hash(config: Union[BaseModel, Dict[str, Any]]) -> str:
    """
    Canonical hash of a config: SHA-256 over sorted-key JSON, first 16 hex chars.

    :param config: A pydantic model or a plain dictionary.
    :return: Hex digest prefix.
    """
    if isinstance(config, BaseModel):
        payload = config.model_dump(mode="json")
    else:
        payload = config
    canonical = json.dumps(payload, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()[:16]
