"""
Full classifiers: the dual-stream model and the single-stream baselines.

All models share one call signature, ``model(rgb, flow) -> (B, C)``, so the
training loop and evaluation treat them alike. ``rgb`` is a batch of
normalised middle frames (B, 3, S, S) and ``flow`` a batch of centred flow
stacks (B, 20, S, S).
"""

from enum import Enum

import torch
import torch.nn.functional as F
from torch import nn

from dualstream.encoders import MobileNetV2Config, MobileNetV2Encoder, ViTConfig, ViTEncoder
from dualstream.fusion.heads import ATTENTION_HEADS, FusionHead, FusionKind, build_head
from dualstream.fusion.projection import PROJECTION_DROPOUT, Projection
from dualstream.tensor import seed_dropouts

PROBABILITY_FLOOR = 1e-12


class ModelKind(str, Enum):
    """The seven experiment configurations of a comparison suite."""

    RGB_ONLY = "rgb_only"
    FLOW_ONLY = "flow_only"
    LATE = "late"
    CONCAT = "concat"
    ATTENTION = "attention"
    WEIGHTED = "weighted"
    GATED = "gated"

    @property
    def is_fusion(self) -> bool:
        return self not in (ModelKind.RGB_ONLY, ModelKind.FLOW_ONLY)


SUITE_KINDS: tuple[ModelKind, ...] = tuple(ModelKind)


class Classifier(nn.Module):
    """Shared behaviour: loss, class scores and optional learned stream weights."""

    outputs_probabilities = False

    def loss(self, outputs: torch.Tensor, labels: torch.Tensor) -> torch.Tensor:
        """Categorical cross-entropy; late fusion takes the log of its averaged probabilities."""
        if self.outputs_probabilities:
            return F.nll_loss(torch.log(outputs.clamp_min(PROBABILITY_FLOOR)), labels)
        return F.cross_entropy(outputs, labels)

    def scores(self, outputs: torch.Tensor) -> torch.Tensor:
        """Per-class probabilities for reporting."""
        return outputs if self.outputs_probabilities else torch.softmax(outputs, dim=-1)

    def alphas(self) -> tuple[float, float] | None:
        return None

    def backbone_parameters(self, stream: str) -> list[nn.Parameter]:
        return []


class DualStreamModel(Classifier):
    """ViT over the middle frame, MobileNetV2 and a projection over the flow, then fusion."""

    def __init__(
        self,
        vit: ViTConfig,
        mobilenet: MobileNetV2Config,
        kind: FusionKind | str,
        num_classes: int,
        projection_dropout: float = PROJECTION_DROPOUT,
        attention_heads: int = ATTENTION_HEADS,
        seed: int = 0,
    ) -> None:
        super().__init__()
        self.rgb_encoder = ViTEncoder(vit)
        self.flow_encoder = MobileNetV2Encoder(mobilenet)
        dim = self.rgb_encoder.output_dim
        self.projection = Projection(self.flow_encoder.output_dim, dim, projection_dropout)
        self.head: FusionHead = build_head(kind, dim, num_classes, attention_heads=attention_heads)
        self.outputs_probabilities = self.head.outputs_probabilities
        seed_dropouts(self, seed)

    @property
    def kind(self) -> FusionKind:
        return self.head.kind

    def stream_features(
        self, rgb: torch.Tensor, flow: torch.Tensor
    ) -> tuple[torch.Tensor, torch.Tensor]:
        return self.rgb_encoder(rgb), self.projection(self.flow_encoder(flow))

    def forward(self, rgb: torch.Tensor, flow: torch.Tensor) -> torch.Tensor:
        h_rgb, h_flow = self.stream_features(rgb, flow)
        return self.head(h_rgb, h_flow)

    def alphas(self) -> tuple[float, float] | None:
        return self.head.alphas()

    def backbone_parameters(self, stream: str) -> list[nn.Parameter]:
        encoder = self.rgb_encoder if stream == "rgb" else self.flow_encoder
        return list(encoder.parameters())


class SingleStreamModel(Classifier):
    """One encoder plus a linear classifier; the other input is ignored."""

    def __init__(
        self,
        stream: str,
        num_classes: int,
        vit: ViTConfig | None = None,
        mobilenet: MobileNetV2Config | None = None,
    ) -> None:
        super().__init__()
        if stream not in ("rgb", "flow"):
            raise ValueError(f"Unknown stream '{stream}', expected 'rgb' or 'flow'")
        self.stream = stream
        self.encoder: nn.Module
        if stream == "rgb":
            self.encoder = ViTEncoder(vit or ViTConfig())
        else:
            self.encoder = MobileNetV2Encoder(mobilenet or MobileNetV2Config())
        self.classifier = nn.Linear(self.encoder.output_dim, num_classes)  # type: ignore[arg-type]

    def forward(self, rgb: torch.Tensor, flow: torch.Tensor) -> torch.Tensor:
        return self.classifier(self.encoder(rgb if self.stream == "rgb" else flow))

    def backbone_parameters(self, stream: str) -> list[nn.Parameter]:
        return list(self.encoder.parameters()) if stream == self.stream else []


def build_model(
    kind: ModelKind | str,
    num_classes: int,
    vit: ViTConfig,
    mobilenet: MobileNetV2Config,
    projection_dropout: float = PROJECTION_DROPOUT,
    attention_heads: int = ATTENTION_HEADS,
    seed: int = 0,
) -> Classifier:
    """
    Build one suite configuration with deterministic initial weights.

    Args:
        kind: rgb_only, flow_only or one of the five fusion kinds.
        num_classes: C.
        vit: Appearance encoder config.
        mobilenet: Motion encoder config.
        projection_dropout: Dropout after the projection ReLU.
        attention_heads: Heads of the cross-attention fusion.
        seed: Seeds weight initialisation and dropout masks.
    """
    kind = ModelKind(kind)
    with torch.random.fork_rng(devices=[]):
        torch.manual_seed(seed)
        if kind is ModelKind.RGB_ONLY:
            return SingleStreamModel("rgb", num_classes, vit=vit)
        if kind is ModelKind.FLOW_ONLY:
            return SingleStreamModel("flow", num_classes, mobilenet=mobilenet)
        return DualStreamModel(
            vit,
            mobilenet,
            FusionKind(kind.value),
            num_classes,
            projection_dropout=projection_dropout,
            attention_heads=attention_heads,
            seed=seed,
        )
