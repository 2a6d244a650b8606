"""Optimisation hyper-parameters."""

from dataclasses import dataclass
from typing import Any

from dualstream.core.schema import dataclass_from_dict


@dataclass
class TrainConfig:
    """
    Training settings.

    Backbone runs use ``lr`` / ``max_epochs``; the flow-only baseline trains
    from scratch and uses ``flow_only_lr`` / ``flow_only_max_epochs``.
    """

    lr: float = 1e-4
    flow_only_lr: float = 5e-4
    weight_decay: float = 1e-4
    batch_size: int = 8
    max_epochs: int = 10
    flow_only_max_epochs: int = 50
    patience: int = 5
    min_delta: float = 1e-4
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    seed: int = 42
    num_workers: int = 0
    deterministic: bool = False
    freeze_rgb_backbone: bool = False

    def __post_init__(self) -> None:
        positive = (
            "lr",
            "flow_only_lr",
            "batch_size",
            "max_epochs",
            "flow_only_max_epochs",
            "patience",
            "eps",
        )
        for name in positive:
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive, got {getattr(self, name)}")
        if self.weight_decay < 0 or self.min_delta < 0:
            raise ValueError("weight_decay and min_delta must be non-negative")
        if self.patience >= self.max_epochs:
            raise ValueError(
                f"patience ({self.patience}) must be below max_epochs ({self.max_epochs})"
            )
        if not (0.0 <= self.beta1 < 1.0 and 0.0 <= self.beta2 < 1.0):
            raise ValueError("AdamW betas must lie in [0, 1)")
        if self.num_workers < 0:
            raise ValueError(f"num_workers must be non-negative, got {self.num_workers}")

    @property
    def loader_workers(self) -> int:
        return 0 if self.deterministic else self.num_workers

    def for_stream(self, flow_only: bool) -> tuple[float, int]:
        """(learning rate, epoch budget) for a run."""
        if flow_only:
            return self.flow_only_lr, self.flow_only_max_epochs
        return self.lr, self.max_epochs

    @classmethod
    def from_dict(cls, data: dict[str, Any] | None) -> "TrainConfig":
        return dataclass_from_dict(cls, data, "train")
