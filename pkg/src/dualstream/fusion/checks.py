"""
Finite-difference verification of the trainable components.

Each check builds a small float64 instance in eval mode (dropout off, batch
norm on running statistics) and compares autograd gradients of every
parameter and input against central differences.
"""

from collections.abc import Callable

import torch
from torch import nn

from dualstream.core.logging import get_logger
from dualstream.encoders.mobilenet import InvertedResidual
from dualstream.encoders.vit import TransformerBlock
from dualstream.fusion.heads import ATTENTION_HEADS, FusionKind, build_head
from dualstream.fusion.projection import Projection
from dualstream.tensor import GradcheckReport, float64_mode, gradcheck_module

logger = get_logger()

CHECK_DIM = 8
CHECK_CLASSES = 3
CHECK_BATCH = 4


def _input(generator: torch.Generator, *shape: int) -> torch.Tensor:
    return torch.randn(*shape, generator=generator, dtype=torch.float64).requires_grad_(True)


def _check(
    module: nn.Module,
    inputs: list[torch.Tensor],
    forward: Callable[..., torch.Tensor],
    tol: float,
    seed: int,
) -> GradcheckReport:
    module.double().eval()
    return gradcheck_module(
        module, lambda: forward(*inputs), extra_inputs=inputs, tol=tol, seed=seed
    )


def component_checks(seed: int = 0) -> dict[str, Callable[[float], GradcheckReport]]:
    """Named zero-setup checks; each takes the tolerance and returns its report."""

    def head(kind: FusionKind) -> Callable[[float], GradcheckReport]:
        def run(tol: float) -> GradcheckReport:
            generator = torch.Generator().manual_seed(seed)
            torch.manual_seed(seed)
            module = build_head(kind, CHECK_DIM, CHECK_CLASSES, attention_heads=ATTENTION_HEADS)
            inputs = [_input(generator, CHECK_BATCH, CHECK_DIM) for _ in range(2)]
            return _check(module, inputs, module, tol, seed)

        return run

    def projection(tol: float) -> GradcheckReport:
        generator = torch.Generator().manual_seed(seed)
        torch.manual_seed(seed)
        module = Projection(12, CHECK_DIM)
        return _check(module, [_input(generator, CHECK_BATCH, 12)], module, tol, seed)

    def transformer_block(tol: float) -> GradcheckReport:
        generator = torch.Generator().manual_seed(seed)
        torch.manual_seed(seed)
        module = TransformerBlock(CHECK_DIM, heads=2, mlp_hidden=16)
        return _check(module, [_input(generator, 2, 5, CHECK_DIM)], module, tol, seed)

    def inverted_residual(tol: float) -> GradcheckReport:
        generator = torch.Generator().manual_seed(seed)
        torch.manual_seed(seed)
        module = InvertedResidual(4, 4, stride=1, expansion=6)
        return _check(module, [_input(generator, 2, 4, 6, 6)], module, tol, seed)

    checks: dict[str, Callable[[float], GradcheckReport]] = {
        f"head/{kind.value}": head(kind) for kind in FusionKind
    }
    checks["projection"] = projection
    checks["transformer_block"] = transformer_block
    checks["inverted_residual"] = inverted_residual
    return checks


def run_gradchecks(tol: float = 1e-4, seed: int = 0) -> dict[str, GradcheckReport]:
    """
    Run every component check in 64-bit precision.

    Args:
        tol: Maximum accepted relative error.
        seed: Seed for instances, projections and sampled coordinates.

    Returns:
        Component name -> report, in a fixed order.
    """
    reports: dict[str, GradcheckReport] = {}
    with float64_mode():
        for name, check in component_checks(seed).items():
            reports[name] = check(tol)
            logger.info(f"gradcheck {name}: {reports[name]}")
    return reports
