"""
Self-contained SVG figures: confusion heatmap, training curves and grouped
top-K bars. Rendering uses the Agg backend with a fixed SVG hash salt and no
date metadata, so identical inputs give identical files.
"""

from collections.abc import Sequence
from pathlib import Path
from typing import TYPE_CHECKING

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
from matplotlib.patches import Rectangle  # noqa: E402

from dualstream.metrics.scores import DEFAULT_TOP_K, ConfusionMatrix  # noqa: E402

if TYPE_CHECKING:
    from dualstream.metrics.report import RunReport

HATCHES = ("", "//", "\\\\", "xx", "..", "++", "oo", "--")
SVG_METADATA = {"Date": None}

plt.rcParams["svg.hashsalt"] = "dualstream"


def _save(fig: plt.Figure, path: Path | str) -> Path:
    target = Path(path)
    target.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(target, format="svg", metadata=SVG_METADATA)
    plt.close(fig)
    return target


def plot_confusion(
    matrix: ConfusionMatrix,
    path: Path | str,
    class_names: Sequence[str] = (),
    title: str = "",
) -> Path:
    """Row-normalised heatmap; each cell is a rectangle with gid ``cell-<true>-<pred>``."""
    normalized = matrix.normalized
    size = matrix.num_classes
    names = list(class_names) or [str(i) for i in range(size)]
    cmap = plt.get_cmap("Blues")
    fig, ax = plt.subplots(figsize=(1.0 + 0.5 * size, 1.0 + 0.5 * size))
    for true in range(size):
        for pred in range(size):
            value = float(normalized[true, pred])
            cell = Rectangle(
                (pred, true), 1, 1, facecolor=cmap(value), edgecolor="white", linewidth=0.5
            )
            cell.set_gid(f"cell-{true}-{pred}")
            ax.add_patch(cell)
            if size <= 12:
                color = "white" if value > 0.5 else "black"
                ax.text(
                    pred + 0.5,
                    true + 0.5,
                    f"{value:.2f}",
                    ha="center",
                    va="center",
                    fontsize=7,
                    color=color,
                )
    ax.set_xlim(0, size)
    ax.set_ylim(size, 0)
    ax.set_xticks([i + 0.5 for i in range(size)], names, rotation=90, fontsize=7)
    ax.set_yticks([i + 0.5 for i in range(size)], names, fontsize=7)
    ax.set_xlabel("predicted")
    ax.set_ylabel("true")
    ax.set_aspect("equal")
    if title:
        ax.set_title(title)
    fig.tight_layout()
    return _save(fig, path)


def plot_curves(reports: Sequence["RunReport"], path: Path | str) -> Path:
    """Validation accuracy and training loss per epoch, one line per configuration."""
    fig, (acc_ax, loss_ax) = plt.subplots(1, 2, figsize=(10, 4))
    for report in reports:
        epochs = [h["epoch"] for h in report.history]
        val_acc = [h["val_acc"] for h in report.history]
        train_loss = [h["train_loss"] for h in report.history]
        acc_ax.plot(epochs, val_acc, marker="o", label=report.config_id)
        loss_ax.plot(epochs, train_loss, marker="o", label=report.config_id)
    acc_ax.set_xlabel("epoch")
    acc_ax.set_ylabel("validation accuracy")
    loss_ax.set_xlabel("epoch")
    loss_ax.set_ylabel("training loss")
    acc_ax.legend(fontsize=7)
    fig.tight_layout()
    return _save(fig, path)


def plot_top_k(
    reports: Sequence["RunReport"],
    path: Path | str,
    ks: Sequence[int] = DEFAULT_TOP_K,
) -> Path:
    """Grouped bars: one group per K, one hatched bar per configuration."""
    width = 0.8 / max(len(reports), 1)
    fig, ax = plt.subplots(figsize=(2.0 + 1.2 * len(ks), 4))
    for i, report in enumerate(reports):
        offsets = [k_index + (i - (len(reports) - 1) / 2) * width for k_index in range(len(ks))]
        heights = [100.0 * report.top_k.get(k, 0.0) for k in ks]
        ax.bar(
            offsets,
            heights,
            width,
            label=report.config_id,
            hatch=HATCHES[i % len(HATCHES)],
            edgecolor="black",
            linewidth=0.5,
        )
    ax.set_xticks(range(len(ks)), [f"top-{k}" for k in ks])
    ax.set_ylabel("accuracy (%)")
    ax.set_ylim(0, 100)
    ax.legend(fontsize=7, ncol=2)
    fig.tight_layout()
    return _save(fig, path)
