"""
Shape checks and thin wrappers around torch primitives.

Layers come from ``torch.nn``; the helpers here only turn shape problems into
``ShapeMismatch`` errors that name the offending shapes.
"""

import os
from collections.abc import Sequence

import torch

from dualstream.core.utils import DualStreamError

ENV_DEBUG = "DUALSTREAM_DEBUG"


class TensorError(DualStreamError):
    """Base class for tensor-level errors."""

    pass


class ShapeMismatch(TensorError):
    """Raised when operand shapes are incompatible."""

    pass


class NonFiniteTensor(TensorError):
    """Raised in debug mode when a forward pass produces NaN or Inf."""

    pass


def debug_enabled() -> bool:
    return os.environ.get(ENV_DEBUG, "").strip().lower() in ("1", "true", "yes", "on")


def expect_features(x: torch.Tensor, features: int, what: str) -> None:
    """Require a (..., features) tensor."""
    if x.ndim < 1 or x.shape[-1] != features:
        raise ShapeMismatch(
            f"{what} expects trailing dimension {features}, got shape {tuple(x.shape)}"
        )


def expect_shape(x: torch.Tensor, shape: Sequence[int | None], what: str) -> None:
    """Require an exact shape; None entries match any size."""
    if x.ndim != len(shape) or any(
        s is not None and s != d for s, d in zip(shape, x.shape, strict=True)
    ):
        wanted = tuple("*" if s is None else s for s in shape)
        raise ShapeMismatch(f"{what} expects shape {wanted}, got {tuple(x.shape)}")


def expect_same_shape(a: torch.Tensor, b: torch.Tensor, what: str) -> None:
    if a.shape != b.shape:
        raise ShapeMismatch(f"{what}: shapes {tuple(a.shape)} and {tuple(b.shape)} differ")


def matmul(a: torch.Tensor, b: torch.Tensor) -> torch.Tensor:
    if a.ndim < 1 or b.ndim < 1 or a.shape[-1] != (b.shape[-2] if b.ndim > 1 else b.shape[0]):
        raise ShapeMismatch(f"matmul: cannot multiply {tuple(a.shape)} by {tuple(b.shape)}")
    return torch.matmul(a, b)


def concat(tensors: Sequence[torch.Tensor], dim: int = -1) -> torch.Tensor:
    try:
        return torch.cat(list(tensors), dim=dim)
    except RuntimeError as e:
        shapes = ", ".join(str(tuple(t.shape)) for t in tensors)
        raise ShapeMismatch(f"concat along dim {dim} failed for shapes {shapes}") from e


def check_finite(x: torch.Tensor, what: str) -> torch.Tensor:
    """Raise NonFiniteTensor when debug checks are on and x holds NaN/Inf."""
    if debug_enabled() and not bool(torch.isfinite(x).all()):
        raise NonFiniteTensor(f"{what} produced non-finite values (shape {tuple(x.shape)})")
    return x
