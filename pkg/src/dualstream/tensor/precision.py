"""Floating-point precision switch: float32 for training, float64 for gradient checks."""

from collections.abc import Iterator
from contextlib import contextmanager

import torch

DEFAULT_DTYPE = torch.float32
CHECK_DTYPE = torch.float64


@contextmanager
def default_dtype(dtype: torch.dtype) -> Iterator[torch.dtype]:
    """Temporarily change torch's default floating dtype."""
    previous = torch.get_default_dtype()
    torch.set_default_dtype(dtype)
    try:
        yield dtype
    finally:
        torch.set_default_dtype(previous)


@contextmanager
def float64_mode() -> Iterator[torch.dtype]:
    """Build and run modules in 64-bit precision inside this block."""
    with default_dtype(CHECK_DTYPE) as dtype:
        yield dtype
