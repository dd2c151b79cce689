#!/usr/bin/env python3
"""
📝 LOGGING SETUP
===============
Colorized console output plus a plain per-run log file.
"""

import logging
from pathlib import Path
from typing import Optional, Union

import colorlog

LOG_FORMAT = "%(asctime)s - %(name)s - %(levelname)s - %(message)s"
COLOR_FORMAT = "%(log_color)s" + LOG_FORMAT


def configure_logging(level: str = "INFO") -> None:
    """Console handler on the root logger; replaces earlier handlers"""
    handler = colorlog.StreamHandler()
    handler.setFormatter(colorlog.ColoredFormatter(
        COLOR_FORMAT,
        log_colors={
            "DEBUG": "cyan",
            "INFO": "green",
            "WARNING": "yellow",
            "ERROR": "red",
            "CRITICAL": "bold_red",
        },
    ))
    root = logging.getLogger()
    for existing in list(root.handlers):
        root.removeHandler(existing)
    root.addHandler(handler)
    root.setLevel(level.upper())


def attach_run_log(run_dir: Union[str, Path], level: Optional[str] = None) -> logging.Handler:
    """Adds run.log in `run_dir`; returns the handler so callers can detach it"""
    path = Path(run_dir) / "run.log"
    path.parent.mkdir(parents=True, exist_ok=True)
    handler = logging.FileHandler(path, encoding="utf-8")
    handler.setFormatter(logging.Formatter(LOG_FORMAT))
    if level:
        handler.setLevel(level.upper())
    logging.getLogger().addHandler(handler)
    return handler


def detach(handler: logging.Handler) -> None:
    logging.getLogger().removeHandler(handler)
    handler.close()
