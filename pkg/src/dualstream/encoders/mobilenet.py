"""Inverted-residual convolutional motion encoder with a configurable input stem."""

import torch
from torch import nn

from dualstream.encoders.config import ConfigMismatch, MobileNetV2Config
from dualstream.tensor import check_finite


def conv_bn(
    cin: int,
    cout: int,
    kernel: int,
    stride: int = 1,
    groups: int = 1,
    activation: bool = True,
    momentum: float = 0.1,
    eps: float = 1e-5,
) -> nn.Sequential:
    layers: list[nn.Module] = [
        nn.Conv2d(cin, cout, kernel, stride, (kernel - 1) // 2, groups=groups, bias=False),
        nn.BatchNorm2d(cout, eps=eps, momentum=momentum),
    ]
    if activation:
        layers.append(nn.ReLU6())
    return nn.Sequential(*layers)


class InvertedResidual(nn.Module):
    """Expand 1x1 -> depthwise 3x3 -> linear 1x1 bottleneck, identity shortcut when shapes match."""

    def __init__(
        self,
        cin: int,
        cout: int,
        stride: int,
        expansion: int,
        momentum: float = 0.1,
        eps: float = 1e-5,
    ) -> None:
        super().__init__()
        hidden = int(round(cin * expansion))
        self.use_residual = stride == 1 and cin == cout
        layers: list[nn.Module] = []
        if expansion != 1:
            layers.append(conv_bn(cin, hidden, 1, momentum=momentum, eps=eps))
        layers.append(conv_bn(hidden, hidden, 3, stride, groups=hidden, momentum=momentum, eps=eps))
        layers.append(conv_bn(hidden, cout, 1, activation=False, momentum=momentum, eps=eps))
        self.branch = nn.Sequential(*layers)

    @property
    def project(self) -> nn.Conv2d:
        """The final 1x1 projection convolution of the branch."""
        return self.branch[-1][0]  # type: ignore[return-value]

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        if self.use_residual:
            return x + self.branch(x)
        return self.branch(x)


class MobileNetV2Encoder(nn.Module):
    """Motion encoder: stem, inverted-residual stages, 1x1 head conv and global average pooling."""

    def __init__(self, cfg: MobileNetV2Config) -> None:
        super().__init__()
        self.cfg = cfg
        m, eps = cfg.bn_momentum, cfg.bn_eps
        channels = cfg.stem_width
        layers: list[nn.Module] = [
            conv_bn(cfg.in_channels, channels, 3, stride=2, momentum=m, eps=eps)
        ]
        for t, c, n, s in cfg.stages:
            out = cfg.channels(c)
            for i in range(n):
                layers.append(InvertedResidual(channels, out, s if i == 0 else 1, t, m, eps))
                channels = out
        layers.append(conv_bn(channels, cfg.final_dim, 1, momentum=m, eps=eps))
        self.features = nn.Sequential(*layers)
        self.pool = nn.AdaptiveAvgPool2d(1)
        self.reset_parameters()

    @property
    def output_dim(self) -> int:
        return self.cfg.final_dim

    def blocks(self) -> list[InvertedResidual]:
        return [m for m in self.features if isinstance(m, InvertedResidual)]

    def reset_parameters(self) -> None:
        for module in self.modules():
            if isinstance(module, nn.Conv2d):
                nn.init.kaiming_normal_(module.weight, mode="fan_out")
            elif isinstance(module, nn.BatchNorm2d):
                nn.init.ones_(module.weight)
                nn.init.zeros_(module.bias)

    def forward(self, stack: torch.Tensor) -> torch.Tensor:
        cfg = self.cfg
        expected = (cfg.in_channels, cfg.input_size, cfg.input_size)
        if stack.ndim != 4 or tuple(stack.shape[1:]) != expected:
            raise ConfigMismatch(
                f"MobileNetV2 expects (B, {cfg.in_channels}, {cfg.input_size}, {cfg.input_size}) "
                f"input, got {tuple(stack.shape)}"
            )
        features = self.pool(self.features(stack)).flatten(1)
        return check_finite(features, "MobileNetV2 encoder")
