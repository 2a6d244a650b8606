"""
Utility functions for DualStream.

This module provides the shared error base class, deterministic seed
derivation, the counter-based random generator used for splits, augmentation
and synthetic data, and atomic file writes.
"""

import hashlib
import os
import tempfile
from collections.abc import Callable
from pathlib import Path
from typing import IO

import numpy as np

from dualstream.core.logging import get_logger

logger = get_logger()


class DualStreamError(Exception):
    """Base class for every error raised by the pipeline."""

    pass


def derive_seed(root_seed: int, *keys: object) -> int:
    """
    Derive a 64-bit seed from a root seed and any number of keys.

    The derivation hashes the textual form of its inputs, so a clip's seed
    depends only on (root seed, clip id) and never on processing order or
    worker count.

    Args:
        root_seed: The experiment-level seed.
        *keys: Additional identifiers (clip id, epoch, call counter, ...).

    Returns:
        A non-negative integer below 2**63.

    Example:
        >>> derive_seed(42, "clip_0001") == derive_seed(42, "clip_0001")
        True
    """
    text = ":".join([str(root_seed), *[str(k) for k in keys]])
    digest = hashlib.sha256(text.encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "little") & ((1 << 63) - 1)


def make_rng(root_seed: int, *keys: object) -> np.random.Generator:
    """
    Create a counter-based (Philox) generator for the given seed and keys.

    Args:
        root_seed: The experiment-level seed.
        *keys: Additional identifiers mixed into the seed.

    Returns:
        A numpy Generator backed by the Philox bit generator.
    """
    return np.random.Generator(np.random.Philox(key=derive_seed(root_seed, *keys)))


def atomic_write(path: Path | str, writer: Callable[[IO[bytes]], None]) -> None:
    """
    Write a file atomically: write to a temporary sibling, then rename.

    Readers never observe a partially written file, and concurrent writers of
    the same path leave exactly one complete file behind.

    Args:
        path: Destination path.
        writer: Callable receiving the open binary temp file.
    """
    target = Path(path)
    target.parent.mkdir(parents=True, exist_ok=True)

    fd, tmp_name = tempfile.mkstemp(prefix=f".{target.name}.", suffix=".tmp", dir=target.parent)
    try:
        with os.fdopen(fd, "wb") as f:
            writer(f)
        os.replace(tmp_name, target)
    except BaseException:
        if os.path.exists(tmp_name):
            os.unlink(tmp_name)
        raise


def sha256_file(path: Path | str) -> str:
    """Return the hex SHA-256 digest of a file's contents."""
    digest = hashlib.sha256()
    with open(path, "rb") as f:
        for chunk in iter(lambda: f.read(1 << 20), b""):
            digest.update(chunk)
    return digest.hexdigest()


def sha256_tree(root: Path | str, pattern: str = "*") -> dict[str, str]:
    """
    Hash every file under a directory.

    Args:
        root: Directory to walk.
        pattern: Glob applied recursively (default: every file).

    Returns:
        Mapping of POSIX relative path to hex digest, sorted by path.
    """
    root_path = Path(root)
    return {
        p.relative_to(root_path).as_posix(): sha256_file(p)
        for p in sorted(root_path.rglob(pattern))
        if p.is_file()
    }
