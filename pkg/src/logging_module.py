"""This module provides logging setup and utility functions for logging messages at different levels.
Functions:
- setup_logging(log_file_name=None, log_dir="logs", verbose=False)
- log_info(message)
- log_error(message)
- log_warning(message)
"""

import logging
import os
from typing import Optional

from rich.logging import RichHandler

FILE_FORMAT = "%(asctime)s - %(name)s - %(levelname)s - %(message)s"


def setup_logging(
    log_file_name: Optional[str] = None, log_dir: str = "logs", verbose: bool = False
):
    """
    Setup logging configuration.

    Console output goes through rich; a plain-text file handler is added only
    when a file name is given.

    Parameters:
    - log_file_name: str or None
        The name of the log file. None disables file logging.
    - log_dir: str
        The directory to store the log file.
    - verbose: bool
        Log DEBUG messages as well.
    """
    handlers = [RichHandler(show_path=False, rich_tracebacks=False)]

    if log_file_name is not None:
        if not os.path.exists(log_dir):
            os.makedirs(log_dir)
        file_handler = logging.FileHandler(os.path.join(log_dir, log_file_name))
        file_handler.setFormatter(logging.Formatter(FILE_FORMAT))
        handlers.append(file_handler)

    logging.basicConfig(
        level=logging.DEBUG if verbose else logging.INFO,
        format="%(message)s",
        datefmt="[%X]",
        handlers=handlers,
        force=True,
    )


def log_info(message):
    """
    Log an info level message.

    Parameters:
    - message: str
        The message to log.
    """
    logging.getLogger("film").info(message)


def log_error(message):
    """
    Log an error level message.

    Parameters:
    - message: str
        The message to log.
    """
    logging.getLogger("film").error(message)


def log_warning(message):
    """
    Log a warning level message.

    Parameters:
    - message: str
        The message to log.
    """
    logging.getLogger("film").warning(message)
