"""Logging configuration for pagrad CLI."""

import logging
import logging.config
import sys
import threading
from contextlib import contextmanager
from pathlib import Path
from typing import Any, Dict, Iterator

import numpy as np

from .config import get_settings

# fields bound for the duration of one pipeline run; shared by its worker threads
_run_fields: Dict[str, Any] = {}
_run_lock = threading.Lock()


@contextmanager
def bind_run(**fields: Any) -> Iterator[None]:
    """Attach ``fields`` (pipeline, seed, ...) to every record logged inside the block."""
    with _run_lock:
        previous = dict(_run_fields)
        _run_fields.update(fields)
    try:
        yield
    finally:
        with _run_lock:
            _run_fields.clear()
            _run_fields.update(previous)


def current_run() -> str:
    with _run_lock:
        return " ".join(f"{k}={_render(v)}" for k, v in _run_fields.items()) or "-"


class InfoAndBelowFilter(logging.Filter):
    """Filter that only allows INFO and DEBUG level messages through."""

    def filter(self, record: logging.LogRecord) -> bool:
        return record.levelno <= logging.INFO


class RunContextFilter(logging.Filter):
    """Stamp ``record.run`` with the bound run fields."""

    def filter(self, record: logging.LogRecord) -> bool:
        record.run = current_run()
        return True


def get_logging_config() -> Dict[str, Any]:
    """dictConfig for the ``pagrad_cli`` logger tree; the run log file is written only in debug mode."""
    settings = get_settings()

    log_level = "DEBUG" if settings.debug else "INFO"
    handlers = ["console_info", "console_error"]
    if settings.debug:
        handlers.append("run_file")

    config: Dict[str, Any] = {
        "version": 1,
        "disable_existing_loggers": False,
        "formatters": {
            "run": {
                "format": "%(asctime)s [%(run)s] %(name)s %(levelname)s %(threadName)s: %(message)s",
                "datefmt": "%Y-%m-%dT%H:%M:%S"
            },
            "console": {
                "format": "%(levelname)s: %(message)s"
            },
        },
        "filters": {
            "info_and_below": {
                "()": "pagrad_cli.logging_config.InfoAndBelowFilter"
            },
            "run_context": {
                "()": "pagrad_cli.logging_config.RunContextFilter"
            },
        },
        "handlers": {
            # stdout stays free for `report --format json`
            "console_info": {
                "class": "logging.StreamHandler",
                "level": log_level,
                "formatter": "console",
                "stream": sys.stderr,
                "filters": ["info_and_below"]
            },
            "console_error": {
                "class": "logging.StreamHandler",
                "level": "WARNING",
                "formatter": "console",
                "stream": sys.stderr
            },
            "run_file": {
                "class": "logging.handlers.RotatingFileHandler",
                "level": "DEBUG",
                "formatter": "run",
                "filters": ["run_context"],
                "filename": settings.log_file,
                "maxBytes": 10485760,  # 10MB
                "backupCount": 5,
                "delay": True
            }
        },
        "loggers": {
            "pagrad_cli": {
                "level": log_level,
                "handlers": handlers,
                "propagate": False
            },
        },
        "root": {
            "level": "WARNING",
            "handlers": ["console_error"]
        }
    }

    return config


def setup_logging() -> None:
    logging.config.dictConfig(get_logging_config())


def get_logger(name: str) -> logging.Logger:
    return logging.getLogger(f"pagrad_cli.{name}")


def _render(value: Any) -> str:
    """Compact text for numpy scalars and arrays, floats and paths."""
    if isinstance(value, np.ndarray):
        return f"array{list(value.shape)}:{value.dtype}"
    if isinstance(value, np.generic):
        value = value.item()
    if isinstance(value, float):
        return f"{value:.6g}"
    if isinstance(value, Path):
        return value.as_posix()
    return str(value)


class StructuredLogger:
    """Logger that appends ``key=value`` fields to each message."""

    def __init__(self, name: str):
        self.logger = get_logger(name)

    @staticmethod
    def _format(message: str, fields: Dict[str, Any]) -> str:
        extra_info = " | ".join(f"{k}={_render(v)}" for k, v in fields.items())
        return f"{message} | {extra_info}" if extra_info else message

    def info(self, message: str, **kwargs: Any) -> None:
        self.logger.info(self._format(message, kwargs))

    def warning(self, message: str, **kwargs: Any) -> None:
        self.logger.warning(self._format(message, kwargs))

    def error(self, message: str, exc_info: bool = False, **kwargs: Any) -> None:
        self.logger.error(self._format(message, kwargs), exc_info=exc_info)

    def debug(self, message: str, **kwargs: Any) -> None:
        # fields such as edge lists are only rendered when DEBUG is on
        if self.logger.isEnabledFor(logging.DEBUG):
            self.logger.debug(self._format(message, kwargs))
