"""
Reverse-mode differentiation helpers and the finite-difference gradient check.

Gradients come from torch autograd. ``backward`` adds the NoGraph contract on
top of ``Tensor.backward``; ``gradcheck`` compares analytic gradients with
central differences and reports the largest relative error.
"""

from collections.abc import Callable, Sequence
from dataclasses import dataclass

import torch
from torch import nn

from dualstream.core.logging import get_logger
from dualstream.tensor.ops import ShapeMismatch, TensorError, matmul

logger = get_logger()

# Denominator floor for relative errors on near-zero gradients
REL_ERROR_FLOOR = 1e-3


class NoGraph(TensorError):
    """Raised when backward is called on a tensor that was not recorded."""

    pass


def backward(loss: torch.Tensor, retain_graph: bool = False) -> None:
    """
    Accumulate d(loss)/d(parameter) into every contributing parameter's .grad.

    Raises:
        NoGraph: If loss does not carry an autograd graph.
        ShapeMismatch: If loss is not a scalar.
    """
    if loss.numel() != 1:
        raise ShapeMismatch(f"backward expects a scalar loss, got shape {tuple(loss.shape)}")
    if not loss.requires_grad or loss.grad_fn is None:
        raise NoGraph("Loss was not produced by recorded operations on trainable tensors")
    loss.backward(retain_graph=retain_graph)


def zero_grad(module: nn.Module) -> None:
    for param in module.parameters():
        param.grad = None


@dataclass(frozen=True)
class GradcheckReport:
    """Outcome of a finite-difference check."""

    passed: bool
    max_rel_error: float
    checked: int
    worst: str = ""

    def __str__(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return (
            f"{status} max_rel_error={self.max_rel_error:.3e} "
            f"over {self.checked} coordinates {self.worst}"
        ).rstrip()


def _reduce(output: torch.Tensor, projection: torch.Tensor | None) -> torch.Tensor:
    if projection is None:
        return output.reshape(())
    return matmul(output.reshape(-1), projection.reshape(-1))


def gradcheck(
    f: Callable[..., torch.Tensor],
    inputs: Sequence[torch.Tensor],
    eps: float = 1e-5,
    tol: float = 1e-4,
    max_coords: int | None = 64,
    seed: int = 0,
    names: Sequence[str] | None = None,
) -> GradcheckReport:
    """
    Compare autograd gradients with central finite differences.

    Non-scalar outputs are reduced with a fixed random projection so every
    output entry contributes. Coordinates are perturbed in place, so ``inputs``
    may be module parameters that ``f`` reads implicitly.

    Args:
        f: Deterministic function of the inputs (dropout disabled).
        inputs: float64 tensors with requires_grad=True.
        eps: Finite-difference step.
        tol: Maximum accepted relative error.
        max_coords: Coordinates sampled per tensor (all when None or larger).
        seed: Seed for the output projection and coordinate sampling.
        names: Labels for the inputs used in the report.

    Returns:
        A GradcheckReport; the check never raises on mismatch.
    """
    for t in inputs:
        if t.dtype != torch.float64:
            raise TensorError(f"gradcheck requires float64 tensors, got {t.dtype}")
        if not t.requires_grad:
            raise TensorError("gradcheck inputs must have requires_grad=True")
    labels = list(names) if names is not None else [f"input{i}" for i in range(len(inputs))]
    generator = torch.Generator().manual_seed(seed)

    output = f(*inputs)
    projection = None
    if output.numel() != 1:
        projection = torch.randn(output.shape, generator=generator, dtype=torch.float64)
    analytic = torch.autograd.grad(_reduce(output, projection), list(inputs), allow_unused=True)

    worst_error = 0.0
    worst = ""
    checked = 0
    with torch.no_grad():
        for label, tensor, grad in zip(labels, inputs, analytic, strict=True):
            if grad is None:
                grad_flat = torch.zeros(tensor.numel(), dtype=torch.float64)
            else:
                grad_flat = grad.reshape(-1)
            flat = tensor.detach().view(-1)
            count = flat.numel()
            if max_coords is None or max_coords >= count:
                coords = range(count)
            else:
                coords = torch.randperm(count, generator=generator)[:max_coords].tolist()
            for k in coords:
                original = flat[k].item()
                flat[k] = original + eps
                plus = _reduce(f(*inputs), projection).item()
                flat[k] = original - eps
                minus = _reduce(f(*inputs), projection).item()
                flat[k] = original
                numeric = (plus - minus) / (2 * eps)
                a = grad_flat[k].item()
                error = abs(a - numeric) / max(abs(a), abs(numeric), REL_ERROR_FLOOR)
                checked += 1
                if error > worst_error:
                    worst_error = error
                    worst = f"at {label}[{k}] (analytic {a:.6e}, numeric {numeric:.6e})"

    report = GradcheckReport(
        passed=worst_error < tol, max_rel_error=worst_error, checked=checked, worst=worst
    )
    logger.debug(f"gradcheck: {report}")
    return report


def gradcheck_module(
    module: nn.Module,
    f: Callable[[], torch.Tensor],
    extra_inputs: Sequence[torch.Tensor] = (),
    **kwargs: object,
) -> GradcheckReport:
    """
    Gradient-check every trainable parameter of a module plus optional inputs.

    Args:
        module: A float64 module in eval mode.
        f: Zero-argument closure running the forward pass.
        extra_inputs: Input tensors (requires_grad=True) to check as well.
        **kwargs: Forwarded to gradcheck.
    """
    named = [(n, p) for n, p in module.named_parameters() if p.requires_grad]
    tensors = [p for _, p in named] + list(extra_inputs)
    labels = [n for n, _ in named] + [f"input{i}" for i in range(len(extra_inputs))]
    return gradcheck(lambda *_: f(), tensors, names=labels, **kwargs)  # type: ignore[arg-type]
