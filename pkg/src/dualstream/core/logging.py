"""
Logging for DualStream.

Console output goes through the root logger, configured once by the CLI.
Training runs additionally get a plain per-epoch log:
- VERBOSE (level 9) sits below DEBUG and carries per-batch and per-pair detail
- get_logger() hands out loggers with a verbose() method
- run_log() routes the "train" logger into one run's train.log while it is open

Usage:
    from dualstream.core.logging import get_logger, run_log

    logger = get_logger()
    with run_log(run_dir / "train.log"):
        log_epoch("attention", "epoch 1: val_acc 0.5000")
"""

import logging
from collections.abc import Iterator
from contextlib import contextmanager
from pathlib import Path
from typing import Any

VERBOSE = 9
logging.addLevelName(VERBOSE, "VERBOSE")

TRAIN_LOGGER_ID = "train"

DATE_FMT = "%Y-%m-%d %H:%M:%S"
LOG_FMT = "%(asctime)s - %(name)s - %(levelname)s - %(message)s"
EPOCH_LOG_FMT = "%(asctime)s - %(run)s: %(message)s"


class VerboseLogger(logging.Logger):
    def verbose(self: logging.Logger, message: str, *args: Any, **kwargs: Any) -> None:
        """Log a message with severity 'VERBOSE' (below DEBUG)."""
        if self.isEnabledFor(VERBOSE):
            self._log(VERBOSE, message, args, **kwargs)


def setup_logging(verbosity_level: int = 0, quiet: bool = False) -> None:
    """
    Configure console logging from the CLI flags.

    Args:
        verbosity_level: Count of -v flags: 0 INFO, 1 DEBUG, 2+ VERBOSE.
        quiet: Only errors (wins over verbosity_level).
    """
    if quiet:
        level = logging.ERROR
    elif verbosity_level >= 2:
        level = VERBOSE
    elif verbosity_level == 1:
        level = logging.DEBUG
    else:
        level = logging.INFO

    logging.setLoggerClass(VerboseLogger)
    logging.basicConfig(level=level, format=LOG_FMT, datefmt=DATE_FMT)
    logging.getLogger().setLevel(level)

    train_logger = get_train_logger()
    train_logger.setLevel(logging.INFO)
    train_logger.propagate = False


def get_logger(name: str | None = None) -> VerboseLogger:
    """
    Logger for the calling module (or `name`), always a VerboseLogger.

    Loggers created before setup_logging() are plain Loggers and get their
    class swapped.
    """
    if name is None:
        import inspect

        frame = inspect.stack()[1]
        module = inspect.getmodule(frame[0])
        name = module.__name__ if module else "__main__"

    logger = logging.getLogger(name)
    if not isinstance(logger, VerboseLogger):
        logger.__class__ = VerboseLogger
    return logger  # type: ignore


def get_train_logger() -> logging.Logger:
    return logging.getLogger(TRAIN_LOGGER_ID)


@contextmanager
def run_log(path: Path | str) -> Iterator[Path]:
    """
    Append epoch lines to `path` until the block exits.

    Sequential runs each see only their own lines: the handler is detached
    and closed on exit. The train logger never propagates to the console.

    Raises:
        OSError: If the log file cannot be opened.
    """
    log_path = Path(path)
    log_path.parent.mkdir(parents=True, exist_ok=True)
    handler = logging.FileHandler(str(log_path), encoding="utf-8", mode="a")
    handler.setFormatter(logging.Formatter(EPOCH_LOG_FMT, datefmt=DATE_FMT))
    train_logger = get_train_logger()
    train_logger.setLevel(logging.INFO)
    train_logger.propagate = False
    train_logger.addHandler(handler)
    try:
        yield log_path
    finally:
        train_logger.removeHandler(handler)
        handler.close()


def log_epoch(run_id: str, message: str) -> None:
    """One line in the open run log; dropped when no run log is open."""
    train_logger = get_train_logger()
    if train_logger.handlers:
        train_logger.info(message, extra={"run": run_id})
