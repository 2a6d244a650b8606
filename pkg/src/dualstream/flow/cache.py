"""
Binary flow cache: one NPY v1.0 file per clip at ``<cache_root>/<clip_id>.npy``.

Files hold the uncentred stack as unsigned bytes, shape (20, S, S). Writes go
through a temporary sibling and a rename, so concurrent extractors never leave a
partial file behind.

``<cache_root>/flow_params.json`` records the Farneback parameters, frame count
and size the files were built with; a cache whose record differs is stale.
"""

import json
from dataclasses import asdict
from pathlib import Path
from typing import Any

import numpy as np

from dualstream.core.logging import get_logger
from dualstream.core.utils import atomic_write
from dualstream.flow.farneback import FarnebackParams, FlowError
from dualstream.flow.stack import FLOW_CHANNELS, AlreadyCentered, FlowStack

logger = get_logger()

CACHE_SUFFIX = ".npy"
PARAMS_FILENAME = "flow_params.json"


class CorruptCache(FlowError):
    """Raised when a cache file is truncated or holds the wrong shape or dtype."""

    pass


class StaleCache(FlowError):
    """Raised when cached flow was built with other settings and recomputing is off."""

    pass


def cache_path(cache_root: Path | str, clip_id: str) -> Path:
    return Path(cache_root) / f"{clip_id}{CACHE_SUFFIX}"


def cache_write(stack: FlowStack, path: Path | str) -> Path:
    """
    Persist an uncentred stack as uint8.

    Args:
        stack: The stack to store; values are rounded half-up to bytes.
        path: Destination file.

    Returns:
        The written path.

    Raises:
        AlreadyCentered: If the stack has been centred.
    """
    if stack.centered:
        raise AlreadyCentered("The cache stores uncentred stacks only")
    data = np.ascontiguousarray(stack.quantized().channels.astype(np.uint8))
    target = Path(path)
    atomic_write(target, lambda f: np.save(f, data, allow_pickle=False))
    logger.verbose(f"Cached flow stack {data.shape} at {target}")
    return target


def cache_read(path: Path | str, size: int | None = None) -> FlowStack:
    """
    Load an uncentred stack from the cache.

    Args:
        path: Cache file.
        size: Expected spatial side S; any square size is accepted when None.

    Returns:
        The stack as float32 values in [0, 255].

    Raises:
        FileNotFoundError: If the file does not exist (callers fall back to computing).
        CorruptCache: On truncation, a wrong dtype or a wrong shape.
    """
    source = Path(path)
    if not source.is_file():
        raise FileNotFoundError(f"No cached flow at {source}")
    try:
        data = np.load(source, allow_pickle=False)
    except (ValueError, EOFError, OSError) as e:
        raise CorruptCache(f"Cannot read flow cache {source}: {e}") from e

    if data.dtype != np.uint8:
        raise CorruptCache(f"Flow cache {source} has dtype {data.dtype}, expected uint8")
    expected_side = size if size is not None else (data.shape[1] if data.ndim == 3 else -1)
    expected = (FLOW_CHANNELS, expected_side, expected_side)
    if data.shape != expected:
        raise CorruptCache(f"Flow cache {source} has shape {data.shape}, expected {expected}")
    return FlowStack(channels=data.astype(np.float32), centered=False)


def cache_is_valid(path: Path | str, size: int | None = None) -> bool:
    """True when the file exists and passes every cache_read check."""
    try:
        cache_read(path, size)
    except (FileNotFoundError, CorruptCache):
        return False
    return True


def cache_signature(params: FarnebackParams, num_frames: int, size: int) -> dict[str, Any]:
    """Settings that determine the bytes of every cached stack."""
    return {"farneback": asdict(params), "num_frames": num_frames, "size": size}


def write_cache_signature(cache_root: Path | str, signature: dict[str, Any]) -> Path:
    path = Path(cache_root) / PARAMS_FILENAME
    payload = json.dumps(signature, indent=2, sort_keys=True).encode("utf-8")
    atomic_write(path, lambda f: f.write(payload + b"\n"))
    return path


def read_cache_signature(cache_root: Path | str) -> dict[str, Any] | None:
    """
    The settings recorded for a cache directory.

    Returns:
        The recorded signature, or None when nothing has been recorded.

    Raises:
        CorruptCache: If the record exists but is not a JSON object.
    """
    path = Path(cache_root) / PARAMS_FILENAME
    if not path.is_file():
        return None
    try:
        with open(path, encoding="utf-8") as f:
            data = json.load(f)
    except (ValueError, OSError) as e:
        raise CorruptCache(f"Cannot read flow cache settings {path}: {e}") from e
    if not isinstance(data, dict):
        raise CorruptCache(f"Flow cache settings {path} must hold a JSON object")
    return data
