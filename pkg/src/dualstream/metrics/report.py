"""
Run reports and their on-disk forms.

A RunReport holds every number for one configuration. It serialises to JSON
with full fidelity (no timestamps, sorted keys) so identical runs give
byte-identical files; suites of reports render to a CSV comparison table with
the best value per column marked by ``*``.
"""

import csv
import io
import json
from collections.abc import Sequence
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np

from dualstream.core.logging import get_logger
from dualstream.core.utils import DualStreamError, atomic_write
from dualstream.metrics.plots import plot_confusion, plot_curves, plot_top_k
from dualstream.metrics.scores import (
    DEFAULT_TOP_K,
    ConfusionMatrix,
    accuracy,
    confusion,
    macro_f1,
    predictions_from_scores,
    top_k_report,
)

logger = get_logger()

REPORT_FILENAME = "report.json"
TABLE_FILENAME = "report.csv"
SCORES_FILENAME = "scores.npy"
LABELS_FILENAME = "labels.npy"
BEST_MARK = "*"


class ReportError(DualStreamError):
    """Raised when a report cannot be written or read back."""

    pass


@dataclass
class RunReport:
    """Every reported number of one configuration."""

    config_id: str
    test_accuracy: float
    val_accuracy: float
    macro_f1: float
    top_k: dict[int, float]
    confusion: ConfusionMatrix
    weights: tuple[float, float] | None = None
    epochs_run: int = 0
    early_stopped: bool = False
    best_epoch: int = 0
    history: list[dict[str, float]] = field(default_factory=list)
    class_names: list[str] = field(default_factory=list)

    def to_dict(self) -> dict[str, Any]:
        return {
            "config_id": self.config_id,
            "test_accuracy": self.test_accuracy,
            "val_accuracy": self.val_accuracy,
            "macro_f1": self.macro_f1,
            "top_k": {str(k): v for k, v in sorted(self.top_k.items())},
            "confusion": self.confusion.to_dict(),
            "weights": (
                None
                if self.weights is None
                else {"alpha_rgb": self.weights[0], "alpha_flow": self.weights[1]}
            ),
            "epochs_run": self.epochs_run,
            "early_stopped": self.early_stopped,
            "best_epoch": self.best_epoch,
            "history": [dict(h) for h in self.history],
            "class_names": list(self.class_names),
        }

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "RunReport":
        try:
            weights = data.get("weights")
            return cls(
                config_id=str(data["config_id"]),
                test_accuracy=float(data["test_accuracy"]),
                val_accuracy=float(data["val_accuracy"]),
                macro_f1=float(data["macro_f1"]),
                top_k={int(k): float(v) for k, v in data["top_k"].items()},
                confusion=ConfusionMatrix.from_dict(data["confusion"]),
                weights=(
                    None
                    if weights is None
                    else (float(weights["alpha_rgb"]), float(weights["alpha_flow"]))
                ),
                epochs_run=int(data.get("epochs_run", 0)),
                early_stopped=bool(data.get("early_stopped", False)),
                best_epoch=int(data.get("best_epoch", 0)),
                history=list(data.get("history", [])),
                class_names=list(data.get("class_names", [])),
            )
        except (KeyError, TypeError, ValueError) as e:
            raise ReportError(f"Malformed run report: {e}") from e

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"


def evaluate_scores(
    config_id: str,
    scores: np.ndarray,
    labels: np.ndarray,
    num_classes: int,
    val_accuracy: float = 0.0,
    ks: Sequence[int] = DEFAULT_TOP_K,
    **extra: Any,
) -> RunReport:
    """
    Compute a RunReport's metrics from a test-set score dump.

    Args:
        config_id: Configuration name.
        scores: (N, C) probabilities.
        labels: N true labels.
        num_classes: C.
        val_accuracy: Best validation accuracy from training.
        ks: Top-K values to report.
        **extra: Further RunReport fields (weights, history, ...).
    """
    predictions = predictions_from_scores(scores) if len(labels) else np.zeros(0, dtype=np.int64)
    top_k = top_k_report(scores, labels, ks) if len(labels) else {k: 0.0 for k in ks}
    return RunReport(
        config_id=config_id,
        test_accuracy=accuracy(predictions, labels),
        val_accuracy=val_accuracy,
        macro_f1=macro_f1(predictions, labels, num_classes),
        top_k=top_k,
        confusion=confusion(predictions, labels, num_classes),
        **extra,
    )


def _write_text(path: Path, text: str) -> None:
    atomic_write(path, lambda f: f.write(text.encode("utf-8")))


def save_scores(out_dir: Path | str, scores: np.ndarray, labels: np.ndarray) -> None:
    """Persist the per-sample scores (float32 N x C) and labels (int64 N) as NPY files."""
    out = Path(out_dir)
    atomic_write(out / SCORES_FILENAME, lambda f: np.save(f, np.asarray(scores, dtype=np.float32)))
    atomic_write(out / LABELS_FILENAME, lambda f: np.save(f, np.asarray(labels, dtype=np.int64)))


def load_scores(out_dir: Path | str) -> tuple[np.ndarray, np.ndarray]:
    out = Path(out_dir)
    try:
        return np.load(out / SCORES_FILENAME), np.load(out / LABELS_FILENAME)
    except (OSError, ValueError) as e:
        raise ReportError(f"Cannot read score dump in {out}: {e}") from e


def save_report(report: RunReport, path: Path | str) -> Path:
    target = Path(path)
    _write_text(target, report.to_json())
    return target


def load_report(path: Path | str) -> RunReport:
    try:
        with open(path, encoding="utf-8") as f:
            return RunReport.from_dict(json.load(f))
    except (OSError, json.JSONDecodeError) as e:
        raise ReportError(f"Cannot read report {path}: {e}") from e


def _percent(value: float) -> str:
    return f"{100.0 * value:.2f}"


def table_rows(reports: Sequence[RunReport], ks: Sequence[int] = DEFAULT_TOP_K) -> list[list[str]]:
    """
    Header plus one row per report, best value per metric column marked.

    Accuracies, macro-F1 and top-K are percentages with two decimals; the
    alpha columns are empty for configurations without learned stream weights.
    """
    header = [
        "config",
        "val_acc",
        "test_acc",
        "macro_f1",
        *[f"top{k}" for k in ks],
        "alpha_rgb",
        "alpha_flow",
        "epochs_run",
        "early_stopped",
    ]
    metric_values = [
        [r.val_accuracy, r.test_accuracy, r.macro_f1, *[r.top_k.get(k, 0.0) for k in ks]]
        for r in reports
    ]
    best = [max(column) for column in zip(*metric_values, strict=True)] if reports else []
    rows = [header]
    for report, values in zip(reports, metric_values, strict=True):
        cells = [
            _percent(v) + (BEST_MARK if _percent(v) == _percent(b) else "")
            for v, b in zip(values, best, strict=True)
        ]
        alpha = ["", ""] if report.weights is None else [f"{w:.4f}" for w in report.weights]
        stopped = str(report.early_stopped).lower()
        rows.append([report.config_id, *cells, *alpha, str(report.epochs_run), stopped])
    return rows


def table_csv(reports: Sequence[RunReport], ks: Sequence[int] = DEFAULT_TOP_K) -> str:
    buffer = io.StringIO()
    csv.writer(buffer, lineterminator="\n").writerows(table_rows(reports, ks))
    return buffer.getvalue()


def emit_report(
    report: RunReport,
    out_dir: Path | str,
    formats: Sequence[str] = ("json", "csv", "svg"),
    scores: tuple[np.ndarray, np.ndarray] | None = None,
) -> list[Path]:
    """
    Write one run's report files.

    Args:
        report: The report.
        out_dir: Destination directory.
        formats: Any of json (report.json), csv (report.csv), svg (confusion.svg, curves.svg).
        scores: Optional (scores, labels) dump written next to the report.

    Returns:
        The paths written.

    Raises:
        ReportError: If a file cannot be written.
    """
    out = Path(out_dir)
    written: list[Path] = []
    try:
        out.mkdir(parents=True, exist_ok=True)
        if "json" in formats:
            written.append(save_report(report, out / REPORT_FILENAME))
        if "csv" in formats:
            _write_text(out / TABLE_FILENAME, table_csv([report]))
            written.append(out / TABLE_FILENAME)
        if "svg" in formats:
            written.append(
                plot_confusion(
                    report.confusion, out / "confusion.svg", report.class_names, report.config_id
                )
            )
            if report.history:
                written.append(plot_curves([report], out / "curves.svg"))
        if scores is not None:
            save_scores(out, *scores)
            written.extend([out / SCORES_FILENAME, out / LABELS_FILENAME])
    except OSError as e:
        raise ReportError(f"Failed to write report for '{report.config_id}' to {out}: {e}") from e
    logger.debug(f"Wrote {len(written)} report file(s) for {report.config_id} to {out}")
    return written


@dataclass
class SuiteReport:
    """All run reports of one comparison suite over one dataset."""

    dataset: str
    runs: list[RunReport]
    class_names: list[str] = field(default_factory=list)

    def by_config(self) -> dict[str, RunReport]:
        return {r.config_id: r for r in self.runs}

    def to_dict(self) -> dict[str, Any]:
        return {
            "dataset": self.dataset,
            "class_names": list(self.class_names),
            "runs": [r.to_dict() for r in self.runs],
        }

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "SuiteReport":
        try:
            return cls(
                dataset=str(data.get("dataset", "")),
                runs=[RunReport.from_dict(r) for r in data["runs"]],
                class_names=list(data.get("class_names", [])),
            )
        except (KeyError, TypeError) as e:
            raise ReportError(f"Malformed suite report: {e}") from e

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"


def emit_suite(
    suite: SuiteReport, out_dir: Path | str, ks: Sequence[int] = DEFAULT_TOP_K
) -> list[Path]:
    """Write report.json, report.csv, curves.svg and topk.svg for a suite."""
    out = Path(out_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
        _write_text(out / REPORT_FILENAME, suite.to_json())
        _write_text(out / TABLE_FILENAME, table_csv(suite.runs, ks))
        written = [out / REPORT_FILENAME, out / TABLE_FILENAME]
        fusion_runs = [
            r for r in suite.runs if r.history and r.config_id not in ("rgb_only", "flow_only")
        ]
        if fusion_runs:
            written.append(plot_curves(fusion_runs, out / "curves.svg"))
        written.append(plot_top_k(suite.runs, out / "topk.svg", ks))
    except OSError as e:
        raise ReportError(f"Failed to write suite report to {out}: {e}") from e
    logger.info(f"Suite report for '{suite.dataset}' written to {out}")
    return written


def load_suite_report(path: Path | str) -> SuiteReport:
    """Read a suite report.json (a directory containing one is accepted)."""
    source = Path(path)
    if source.is_dir():
        source = source / REPORT_FILENAME
    try:
        with open(source, encoding="utf-8") as f:
            return SuiteReport.from_dict(json.load(f))
    except (OSError, json.JSONDecodeError) as e:
        raise ReportError(f"Cannot read suite report {source}: {e}") from e


def cross_dataset_rows(suites: Sequence[SuiteReport]) -> list[list[str]]:
    """
    Test accuracy per configuration side by side across datasets, followed by
    the weighted-fusion alpha rows.
    """
    header = ["config", *[s.dataset or f"dataset{i + 1}" for i, s in enumerate(suites)]]
    configs: list[str] = []
    for suite in suites:
        configs.extend(r.config_id for r in suite.runs if r.config_id not in configs)
    lookup = [s.by_config() for s in suites]
    rows = [header]
    for config in configs:
        cells = [_percent(m[config].test_accuracy) if config in m else "" for m in lookup]
        rows.append([config, *cells])
    for label, index in (("alpha_rgb", 0), ("alpha_flow", 1)):
        cells = []
        for m in lookup:
            weighted = m.get("weighted")
            if weighted is None or weighted.weights is None:
                cells.append("")
            else:
                cells.append(f"{weighted.weights[index]:.4f}")
        rows.append([f"weighted {label}", *cells])
    return rows


def write_cross_dataset_table(suites: Sequence[SuiteReport], path: Path | str) -> Path:
    buffer = io.StringIO()
    csv.writer(buffer, lineterminator="\n").writerows(cross_dataset_rows(suites))
    target = Path(path)
    try:
        _write_text(target, buffer.getvalue())
    except OSError as e:
        raise ReportError(f"Failed to write comparison table {target}: {e}") from e
    return target
