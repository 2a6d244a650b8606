"""
Tensor package - Numerics helpers on top of torch.

This package provides:
- ShapeMismatch and shape-check helpers for layer inputs
- backward / gradcheck: Reverse-mode gradients and the finite-difference check
- float64_mode: The 64-bit switch used for verification
- save_checkpoint / load_checkpoint: Zip + JSON-index parameter archives
- SeededDropout: Reproducible inverted dropout
"""

from .autograd import GradcheckReport, NoGraph, backward, gradcheck, gradcheck_module, zero_grad
from .checkpoint import (
    Checkpoint,
    CheckpointError,
    load_checkpoint,
    load_into,
    save_checkpoint,
)
from .ops import (
    NonFiniteTensor,
    ShapeMismatch,
    TensorError,
    check_finite,
    concat,
    expect_features,
    expect_same_shape,
    expect_shape,
    matmul,
)
from .precision import CHECK_DTYPE, DEFAULT_DTYPE, default_dtype, float64_mode
from .rng import SeededDropout, seed_dropouts

__all__ = [
    "TensorError",
    "ShapeMismatch",
    "NonFiniteTensor",
    "NoGraph",
    "expect_features",
    "expect_shape",
    "expect_same_shape",
    "matmul",
    "concat",
    "check_finite",
    "backward",
    "zero_grad",
    "gradcheck",
    "gradcheck_module",
    "GradcheckReport",
    "DEFAULT_DTYPE",
    "CHECK_DTYPE",
    "default_dtype",
    "float64_mode",
    "Checkpoint",
    "CheckpointError",
    "save_checkpoint",
    "load_checkpoint",
    "load_into",
    "SeededDropout",
    "seed_dropouts",
]
