"""
Core package - Shared infrastructure.

This package provides:
- Logging: Console levels (with VERBOSE) and the per-run epoch log
- Utils: The base error type, seed derivation, atomic writes and hashing
- Schema: Dataclass configuration sections read from plain mappings

The layered Config lives in dualstream.core.config and is imported from
there, since it depends on the domain packages.
"""

from .logging import (
    TRAIN_LOGGER_ID,
    VERBOSE,
    get_logger,
    get_train_logger,
    log_epoch,
    run_log,
    setup_logging,
)
from .schema import ConfigError, dataclass_from_dict, dataclass_to_dict, normalize_key
from .utils import (
    DualStreamError,
    atomic_write,
    derive_seed,
    make_rng,
    sha256_file,
    sha256_tree,
)

__all__ = [
    "VERBOSE",
    "TRAIN_LOGGER_ID",
    "setup_logging",
    "run_log",
    "get_logger",
    "get_train_logger",
    "log_epoch",
    "ConfigError",
    "normalize_key",
    "dataclass_from_dict",
    "dataclass_to_dict",
    "DualStreamError",
    "derive_seed",
    "make_rng",
    "atomic_write",
    "sha256_file",
    "sha256_tree",
]
