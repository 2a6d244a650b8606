"""Projection of the motion feature into the shared fusion space."""

import torch
from torch import nn

from dualstream.tensor import SeededDropout, expect_features

PROJECTION_DROPOUT = 0.1


class Projection(nn.Module):
    """Dropout(ReLU(W_p f + b_p)); dropout is active only in training mode."""

    def __init__(
        self, in_dim: int, out_dim: int, dropout: float = PROJECTION_DROPOUT, seed: int = 0
    ) -> None:
        super().__init__()
        self.in_dim = in_dim
        self.out_dim = out_dim
        self.linear = nn.Linear(in_dim, out_dim)
        self.dropout = SeededDropout(dropout, seed)

    def forward(self, features: torch.Tensor) -> torch.Tensor:
        expect_features(features, self.in_dim, "projection")
        return self.dropout(torch.relu(self.linear(features)))
