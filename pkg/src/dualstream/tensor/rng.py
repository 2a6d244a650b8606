"""Seeded dropout: each training call draws its mask from a fresh generator."""

import torch
from torch import nn

from dualstream.core.utils import derive_seed


class SeededDropout(nn.Module):
    """
    Inverted dropout whose masks are a pure function of (seed, call counter).

    In eval mode the module is the identity. In training mode the n-th call
    uses a generator seeded with derive_seed(seed, n), so two runs that start
    from the same seed see the same masks.
    """

    def __init__(self, p: float, seed: int = 0) -> None:
        super().__init__()
        if not 0.0 <= p < 1.0:
            raise ValueError(f"Dropout probability must lie in [0, 1), got {p}")
        self.p = p
        self.seed = seed
        self.calls = 0

    def reseed(self, seed: int) -> None:
        self.seed = seed
        self.calls = 0

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        if not self.training or self.p == 0.0:
            return x
        generator = torch.Generator(device="cpu").manual_seed(derive_seed(self.seed, self.calls))
        self.calls += 1
        keep = torch.rand(x.shape, generator=generator, dtype=torch.float64) >= self.p
        return x * keep.to(device=x.device, dtype=x.dtype) / (1.0 - self.p)

    def extra_repr(self) -> str:
        return f"p={self.p}, seed={self.seed}"


def seed_dropouts(module: nn.Module, seed: int) -> None:
    """Give every SeededDropout in a module tree its own seed derived from its name."""
    for name, child in module.named_modules():
        if isinstance(child, SeededDropout):
            child.reseed(derive_seed(seed, "dropout", name))
