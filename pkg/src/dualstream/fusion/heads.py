"""
The five fusion heads.

Every head maps (h_rgb, h_flow), both (B, d), to a (B, C) output. Late fusion
returns class probabilities; the other four return unnormalised logits.
"""

from enum import Enum

import torch
from torch import nn

from dualstream.core.utils import DualStreamError
from dualstream.tensor import SeededDropout, expect_same_shape, expect_shape

CONCAT_DROPOUT = 0.3
ATTENTION_HEADS = 4


class HeadsMismatch(DualStreamError):
    """Raised when the feature width is not divisible by the attention head count."""

    pass


class FusionKind(str, Enum):
    LATE = "late"
    CONCAT = "concat"
    ATTENTION = "attention"
    WEIGHTED = "weighted"
    GATED = "gated"


class FusionHead(nn.Module):
    """Common interface: forward(h_rgb, h_flow) -> (B, C)."""

    kind: FusionKind
    outputs_probabilities = False

    def __init__(self, dim: int, num_classes: int) -> None:
        super().__init__()
        if dim < 1 or num_classes < 1:
            raise ValueError(
                f"Fusion head needs positive dim and num_classes, got {dim}, {num_classes}"
            )
        self.dim = dim
        self.num_classes = num_classes

    def check_inputs(self, h_rgb: torch.Tensor, h_flow: torch.Tensor) -> None:
        expect_shape(h_rgb, (None, self.dim), f"{self.kind.value} fusion (RGB)")
        expect_shape(h_flow, (None, self.dim), f"{self.kind.value} fusion (flow)")
        expect_same_shape(h_rgb, h_flow, f"{self.kind.value} fusion")

    def alphas(self) -> tuple[float, float] | None:
        """Learned stream weights (alpha_rgb, alpha_flow), when the head has them."""
        return None

    def fuse(self, h_rgb: torch.Tensor, h_flow: torch.Tensor) -> torch.Tensor:
        raise NotImplementedError

    def forward(self, h_rgb: torch.Tensor, h_flow: torch.Tensor) -> torch.Tensor:
        self.check_inputs(h_rgb, h_flow)
        return self.fuse(h_rgb, h_flow)


class LateFusion(FusionHead):
    """Average of the two per-stream softmax distributions."""

    kind = FusionKind.LATE
    outputs_probabilities = True

    def __init__(self, dim: int, num_classes: int) -> None:
        super().__init__(dim, num_classes)
        self.rgb_classifier = nn.Linear(dim, num_classes)
        self.flow_classifier = nn.Linear(dim, num_classes)

    def stream_logits(
        self, h_rgb: torch.Tensor, h_flow: torch.Tensor
    ) -> tuple[torch.Tensor, torch.Tensor]:
        return self.rgb_classifier(h_rgb), self.flow_classifier(h_flow)

    def fuse(self, h_rgb: torch.Tensor, h_flow: torch.Tensor) -> torch.Tensor:
        z_rgb, z_flow = self.stream_logits(h_rgb, h_flow)
        return 0.5 * (torch.softmax(z_rgb, dim=-1) + torch.softmax(z_flow, dim=-1))


class ConcatFusion(FusionHead):
    """Two-layer MLP over [h_rgb; h_flow] with dropout after the hidden ReLU."""

    kind = FusionKind.CONCAT

    def __init__(
        self, dim: int, num_classes: int, dropout: float = CONCAT_DROPOUT, seed: int = 0
    ) -> None:
        super().__init__(dim, num_classes)
        self.hidden = nn.Linear(2 * dim, dim)
        self.dropout = SeededDropout(dropout, seed)
        self.classifier = nn.Linear(dim, num_classes)

    def fuse(self, h_rgb: torch.Tensor, h_flow: torch.Tensor) -> torch.Tensor:
        hidden = torch.relu(self.hidden(torch.cat([h_rgb, h_flow], dim=-1)))
        return self.classifier(self.dropout(hidden))


class AttentionFusion(FusionHead):
    """RGB queries flow: LayerNorm(h_rgb + MHA(h_rgb, h_flow, h_flow)), then a linear classifier."""

    kind = FusionKind.ATTENTION

    def __init__(self, dim: int, num_classes: int, heads: int = ATTENTION_HEADS) -> None:
        super().__init__(dim, num_classes)
        if dim % heads:
            raise HeadsMismatch(f"Feature width {dim} is not divisible by {heads} attention heads")
        self.heads = heads
        self.attention = nn.MultiheadAttention(dim, heads, bias=True, batch_first=True)
        self.norm = nn.LayerNorm(dim)
        self.classifier = nn.Linear(dim, num_classes)

    def attend(
        self, h_rgb: torch.Tensor, h_flow: torch.Tensor
    ) -> tuple[torch.Tensor, torch.Tensor]:
        """Attention output (B, d) and per-head weights (B, heads, 1, 1)."""
        query = h_rgb.unsqueeze(1)
        key = h_flow.unsqueeze(1)
        output, weights = self.attention(
            query, key, key, need_weights=True, average_attn_weights=False
        )
        return output.squeeze(1), weights

    def cross_features(self, h_rgb: torch.Tensor, h_flow: torch.Tensor) -> torch.Tensor:
        attended, _ = self.attend(h_rgb, h_flow)
        return self.norm(h_rgb + attended)

    def fuse(self, h_rgb: torch.Tensor, h_flow: torch.Tensor) -> torch.Tensor:
        return self.classifier(self.cross_features(h_rgb, h_flow))


class WeightedFusion(FusionHead):
    """Convex combination softmax([w1, w2]) of the two streams, then a linear classifier."""

    kind = FusionKind.WEIGHTED

    def __init__(self, dim: int, num_classes: int) -> None:
        super().__init__(dim, num_classes)
        self.stream_weights = nn.Parameter(torch.zeros(2))
        self.classifier = nn.Linear(dim, num_classes)

    def alpha(self) -> torch.Tensor:
        return torch.softmax(self.stream_weights, dim=0)

    def alphas(self) -> tuple[float, float]:
        a = self.alpha().detach()
        return float(a[0]), float(a[1])

    def fuse(self, h_rgb: torch.Tensor, h_flow: torch.Tensor) -> torch.Tensor:
        a = self.alpha()
        return self.classifier(a[0] * h_rgb + a[1] * h_flow)


class GatedFusion(FusionHead):
    """Per-dimension gate g = sigmoid(W_g [h_rgb; h_flow] + b_g) blending the streams."""

    kind = FusionKind.GATED

    def __init__(self, dim: int, num_classes: int) -> None:
        super().__init__(dim, num_classes)
        self.gate = nn.Linear(2 * dim, dim)
        self.classifier = nn.Linear(dim, num_classes)

    def gate_values(self, h_rgb: torch.Tensor, h_flow: torch.Tensor) -> torch.Tensor:
        return torch.sigmoid(self.gate(torch.cat([h_rgb, h_flow], dim=-1)))

    def blend(self, h_rgb: torch.Tensor, h_flow: torch.Tensor) -> torch.Tensor:
        g = self.gate_values(h_rgb, h_flow)
        return g * h_rgb + (1 - g) * h_flow

    def fuse(self, h_rgb: torch.Tensor, h_flow: torch.Tensor) -> torch.Tensor:
        return self.classifier(self.blend(h_rgb, h_flow))


def build_head(
    kind: FusionKind | str,
    dim: int,
    num_classes: int,
    seed: int = 0,
    attention_heads: int = ATTENTION_HEADS,
) -> FusionHead:
    """Instantiate a fusion head by kind."""
    kind = FusionKind(kind)
    if kind is FusionKind.LATE:
        return LateFusion(dim, num_classes)
    if kind is FusionKind.CONCAT:
        return ConcatFusion(dim, num_classes, seed=seed)
    if kind is FusionKind.ATTENTION:
        return AttentionFusion(dim, num_classes, heads=attention_heads)
    if kind is FusionKind.WEIGHTED:
        return WeightedFusion(dim, num_classes)
    return GatedFusion(dim, num_classes)
