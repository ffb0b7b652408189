import logging
import os
from pathlib import Path
from typing import List, Optional, Union

from app.lib.common.env_config import Config

# Loggers whose INFO output is mirrored to the console
CONSOLE_LOGGERS = ["main", "training", "evaluation"]

RUN_LOG_NAME = "run.log"

# Marks handlers installed here so a second configure_logging() replaces them
_HANDLER_TAG = "_mimodet_handler"


def get_log_level() -> str:
    """
    Retrieves the log level from the environment configuration, INFO by default.
    """
    return Config.LOG_LEVEL.upper()


def get_log_format() -> str:
    """
    Log line format; LOG_FORMAT overrides the default.
    """
    return os.getenv("LOG_FORMAT", "%(asctime)s - %(name)s - %(levelname)s - %(message)s")


def _tag(handler: logging.Handler) -> logging.Handler:
    setattr(handler, _HANDLER_TAG, True)
    return handler


def _remove_tagged(logger: logging.Logger) -> None:
    for handler in [h for h in logger.handlers if getattr(h, _HANDLER_TAG, False)]:
        logger.removeHandler(handler)
        handler.close()


def configure_file_handler(log_file: Union[str, Path], level: int, formatter: logging.Formatter) -> logging.Handler:
    """
    Creates a file handler appending to log_file.

    :param log_file: Path to the log file.
    :param level: Lowest level the handler records.
    :param formatter: Logging formatter instance.
    :return: Configured FileHandler.
    """
    handler = logging.FileHandler(log_file, mode="a", encoding="utf-8")
    handler.setLevel(level)
    handler.setFormatter(formatter)
    return _tag(handler)


def configure_stream_handler(level: int, formatter: logging.Formatter, console_loggers: List[str]) -> logging.Handler:
    """
    Mirrors the named loggers to the console.

    The loggers keep propagating to the root file handlers; the stream
    handler only adds console output for them.

    :param level: Lowest level shown on the console.
    :param formatter: Logging formatter instance.
    :param console_loggers: Names of the loggers to mirror.
    :return: The shared StreamHandler.
    """
    handler = _tag(logging.StreamHandler())
    handler.setLevel(level)
    handler.setFormatter(formatter)
    for name in console_loggers:
        logger = logging.getLogger(name)
        _remove_tagged(logger)
        logger.addHandler(handler)
    return handler


def configure_logging() -> None:
    """
    Sets up general, error and debug log files under Config.LOG_DIR and,
    unless disabled, console output for the CLI-facing loggers.

    Calling it again replaces the handlers of the previous call.
    """
    Config.ensure_directories()
    formatter = logging.Formatter(get_log_format())

    root = logging.getLogger()
    _remove_tagged(root)
    root.setLevel(get_log_level())
    root.addHandler(configure_file_handler(Config.get_log_file("general"), logging.INFO, formatter))
    root.addHandler(configure_file_handler(Config.get_log_file("error"), logging.ERROR, formatter))
    root.addHandler(configure_file_handler(Config.get_log_file("debug"), logging.DEBUG, formatter))

    if Config.LOG_TO_CONSOLE:
        configure_stream_handler(logging.INFO, formatter, CONSOLE_LOGGERS)
    else:
        for name in CONSOLE_LOGGERS:
            _remove_tagged(logging.getLogger(name))


def attach_run_log(experiment_dir: Union[str, Path]) -> logging.Handler:
    """
    Records INFO and above into <experiment_dir>/run.log for the duration of a run.

    :param experiment_dir: Directory of the running experiment.
    :return: The handler; pass it to detach_run_log when the run ends.
    """
    handler = logging.FileHandler(Path(experiment_dir) / RUN_LOG_NAME, mode="a", encoding="utf-8")
    handler.setLevel(logging.INFO)
    handler.setFormatter(logging.Formatter(get_log_format()))
    logging.getLogger().addHandler(handler)
    return handler


def detach_run_log(handler: Optional[logging.Handler]) -> None:
    if handler is None:
        return
    logging.getLogger().removeHandler(handler)
    handler.close()
