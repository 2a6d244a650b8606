"""
Parameter checkpoints.

A checkpoint is a zip archive holding ``index.json`` plus one raw
little-endian blob per tensor::

    index.json          {"format": ..., "version": 1, "metadata": {...},
                         "tensors": {name: {"shape": [...], "dtype": "float32",
                                            "file": "tensors/00000.bin"}}}
    tensors/00000.bin   raw values, row-major

Entries are stored uncompressed with a fixed timestamp, so saving the same
state twice yields identical bytes. Externally exported weights can be
imported by writing the same layout.
"""

import io
import json
import zipfile
from collections.abc import Mapping
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np
import torch
from torch import nn

from dualstream.core.logging import get_logger
from dualstream.core.utils import atomic_write
from dualstream.tensor.ops import TensorError

logger = get_logger()

CHECKPOINT_FORMAT = "dualstream-checkpoint"
CHECKPOINT_VERSION = 1
INDEX_NAME = "index.json"
_ZIP_DATE = (1980, 1, 1, 0, 0, 0)

_DTYPES: dict[str, tuple[torch.dtype, np.dtype[Any]]] = {
    "float32": (torch.float32, np.dtype("<f4")),
    "float64": (torch.float64, np.dtype("<f8")),
    "int64": (torch.int64, np.dtype("<i8")),
    "int32": (torch.int32, np.dtype("<i4")),
    "uint8": (torch.uint8, np.dtype("u1")),
    "bool": (torch.bool, np.dtype("?")),
}
_NAMES = {torch_dtype: name for name, (torch_dtype, _) in _DTYPES.items()}


class CheckpointError(TensorError):
    """Raised for unreadable archives, unknown dtypes and size mismatches."""

    pass


@dataclass
class Checkpoint:
    """Named tensors plus free-form JSON metadata."""

    tensors: dict[str, torch.Tensor] = field(default_factory=dict)
    metadata: dict[str, Any] = field(default_factory=dict)


def _entry(name: str) -> zipfile.ZipInfo:
    info = zipfile.ZipInfo(name, date_time=_ZIP_DATE)
    info.compress_type = zipfile.ZIP_STORED
    info.external_attr = 0o644 << 16
    return info


def save_checkpoint(
    tensors: Mapping[str, torch.Tensor],
    path: Path | str,
    metadata: Mapping[str, Any] | None = None,
) -> Path:
    """
    Write named tensors to a checkpoint archive.

    Args:
        tensors: Name to tensor mapping (e.g. a module state_dict).
        path: Destination .zip path.
        metadata: JSON-serialisable extras (config, epoch, ...).

    Returns:
        The written path.

    Raises:
        CheckpointError: If a tensor has an unsupported dtype.
    """
    index: dict[str, Any] = {
        "format": CHECKPOINT_FORMAT,
        "version": CHECKPOINT_VERSION,
        "metadata": dict(metadata or {}),
        "tensors": {},
    }
    blobs: list[tuple[str, bytes]] = []
    for i, (name, tensor) in enumerate(tensors.items()):
        if tensor.dtype not in _NAMES:
            raise CheckpointError(f"Tensor '{name}' has unsupported dtype {tensor.dtype}")
        dtype_name = _NAMES[tensor.dtype]
        array = tensor.detach().cpu().contiguous().numpy()
        array = array.astype(_DTYPES[dtype_name][1], copy=False)
        file_name = f"tensors/{i:05d}.bin"
        index["tensors"][name] = {
            "shape": list(tensor.shape),
            "dtype": dtype_name,
            "file": file_name,
        }
        blobs.append((file_name, array.tobytes(order="C")))

    buffer = io.BytesIO()
    with zipfile.ZipFile(buffer, "w") as archive:
        archive.writestr(_entry(INDEX_NAME), json.dumps(index, indent=2, sort_keys=True))
        for file_name, blob in blobs:
            archive.writestr(_entry(file_name), blob)

    target = Path(path)
    atomic_write(target, lambda f: f.write(buffer.getvalue()))
    logger.debug(f"Saved checkpoint with {len(blobs)} tensors to {target}")
    return target


def load_checkpoint(path: Path | str) -> Checkpoint:
    """
    Read a checkpoint archive.

    Raises:
        CheckpointError: If the archive or its index is malformed.
    """
    source = Path(path)
    try:
        with zipfile.ZipFile(source) as archive:
            index = json.loads(archive.read(INDEX_NAME))
            if index.get("format") != CHECKPOINT_FORMAT:
                raise CheckpointError(f"{source} is not a {CHECKPOINT_FORMAT} archive")
            tensors: dict[str, torch.Tensor] = {}
            for name, entry in index["tensors"].items():
                dtype_name = entry["dtype"]
                if dtype_name not in _DTYPES:
                    raise CheckpointError(f"Tensor '{name}' has unknown dtype '{dtype_name}'")
                torch_dtype, np_dtype = _DTYPES[dtype_name]
                shape = tuple(int(s) for s in entry["shape"])
                raw = archive.read(entry["file"])
                expected = int(np.prod(shape, dtype=np.int64)) * np_dtype.itemsize
                if len(raw) != expected:
                    raise CheckpointError(
                        f"Tensor '{name}' holds {len(raw)} bytes, "
                        f"expected {expected} for shape {shape}"
                    )
                array = np.frombuffer(raw, dtype=np_dtype).reshape(shape)
                native = array.astype(np_dtype.newbyteorder("="))
                tensors[name] = torch.from_numpy(native).to(torch_dtype)
    except (zipfile.BadZipFile, KeyError, json.JSONDecodeError) as e:
        raise CheckpointError(f"Cannot read checkpoint {source}: {e}") from e
    return Checkpoint(tensors=tensors, metadata=dict(index.get("metadata", {})))


def load_into(
    module: nn.Module,
    checkpoint: Checkpoint,
    prefix: str = "",
    strict: bool = True,
) -> list[str]:
    """
    Copy checkpoint tensors into a module's state.

    Args:
        module: Target module.
        checkpoint: Loaded checkpoint.
        prefix: Only tensors whose name starts with this prefix are used, with
            the prefix stripped (e.g. "rgb_encoder." to import one backbone).
        strict: Require every module entry to be present.

    Returns:
        Names of module entries that were not found in the checkpoint.

    Raises:
        CheckpointError: On shape mismatches, or on missing entries when strict.
    """
    state = {
        name[len(prefix):]: tensor
        for name, tensor in checkpoint.tensors.items()
        if name.startswith(prefix)
    }
    own = module.state_dict()
    missing = [name for name in own if name not in state]
    if strict and missing:
        raise CheckpointError(f"Checkpoint lacks {len(missing)} entries, e.g. {missing[:3]}")
    for name, tensor in state.items():
        if name in own and own[name].shape != tensor.shape:
            raise CheckpointError(
                f"Shape mismatch for '{name}': checkpoint {tuple(tensor.shape)}, "
                f"module {tuple(own[name].shape)}"
            )
    module.load_state_dict({k: v for k, v in state.items() if k in own}, strict=False)
    return missing
