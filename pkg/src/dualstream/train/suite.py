"""
Experiment orchestration.

A suite trains the seven configurations (two single-stream baselines and the
five fusion heads) on one shared split with one shared seed, so only the
model differs between runs. Each run gets its own directory with
checkpoint.zip, history.csv, train.log, the score dump and its report; the
suite directory gets the combined report.json, report.csv and plots.
"""

from collections.abc import Sequence
from dataclasses import asdict
from pathlib import Path
from typing import TYPE_CHECKING

import torch

from dualstream.core.logging import get_logger, run_log
from dualstream.encoders import MobileNetV2Config, ViTConfig, count_parameters
from dualstream.fusion import SUITE_KINDS, Classifier, ModelKind, build_model
from dualstream.metrics import RunReport, SuiteReport, emit_report, emit_suite, evaluate_scores
from dualstream.tensor import CheckpointError, load_checkpoint, load_into
from dualstream.train.dataset import ClipDataset, build_split_datasets
from dualstream.train.loop import predict, train_model
from dualstream.train.split import load_or_create_split
from dualstream.videoio import MANIFEST_FILENAME, DatasetManifest, scan_layout

if TYPE_CHECKING:
    from dualstream.core.config import Config

logger = get_logger()

TRAIN_LOG_FILENAME = "train.log"


def configure_determinism(enabled: bool) -> None:
    """Single-threaded, deterministic kernels for bit-reproducible runs."""
    if enabled:
        torch.use_deterministic_algorithms(True, warn_only=True)
        torch.set_num_threads(1)


def load_manifest(dataset_root: Path | str) -> DatasetManifest:
    """manifest.json when present, otherwise a scan of the class/clip layout."""
    root = Path(dataset_root)
    if (root / MANIFEST_FILENAME).is_file():
        return DatasetManifest.load(root)
    return scan_layout(root)


def prepare_data(config: "Config") -> tuple[DatasetManifest, dict[str, ClipDataset]]:
    """The persisted split and one dataset per split."""
    manifest = load_manifest(config.dataset.root)
    split = load_or_create_split(
        manifest,
        config.dataset.split_path,
        config.dataset.fractions,
        config.dataset.split_seed,
    )
    return split, build_split_datasets(split, config.dataset_settings())


def make_model(config: "Config", kind: ModelKind | str, num_classes: int) -> Classifier:
    """Build a configuration's model and import external weights when configured."""
    model = build_model(
        kind,
        num_classes,
        config.model.vit,
        config.model.mobilenet,
        projection_dropout=config.model.projection_dropout,
        attention_heads=config.model.attention_heads,
        seed=config.train.seed,
    )
    encoders: tuple[tuple[str, str, ViTConfig | MobileNetV2Config], ...] = (
        ("rgb", "ViT", config.model.vit),
        ("flow", "MobileNetV2", config.model.mobilenet),
    )
    backbones = [
        f"{name} {count_parameters(cfg):,}"
        for stream, name, cfg in encoders
        if model.backbone_parameters(stream)
    ]
    total = sum(p.numel() for p in model.parameters())
    logger.info(
        f"[{ModelKind(kind).value}] {total:,} parameters; backbones: {', '.join(backbones)}"
    )
    if config.model.init_checkpoint:
        missing = load_into(model, load_checkpoint(config.model.init_checkpoint), strict=False)
        logger.info(
            f"Imported weights from {config.model.init_checkpoint} "
            f"({len(missing)} parameter(s) kept at initialisation)"
        )
    return model


def run_experiment(
    config: "Config",
    kind: ModelKind | str,
    manifest: DatasetManifest,
    datasets: dict[str, ClipDataset],
    output_dir: Path | str,
    progress: bool = False,
) -> RunReport:
    """
    Train and evaluate one configuration.

    Args:
        config: Resolved configuration.
        kind: Which of the seven configurations to run.
        manifest: Split manifest (class names and count).
        datasets: Train/val/test datasets.
        output_dir: Run directory.
        progress: Show per-epoch progress bars.

    Returns:
        The run report (also written to output_dir).
    """
    kind = ModelKind(kind)
    out = Path(output_dir)
    num_classes = manifest.num_classes
    lr, max_epochs = config.train.for_stream(kind is ModelKind.FLOW_ONLY)
    model = make_model(config, kind, num_classes)
    with run_log(out / TRAIN_LOG_FILENAME):
        result = train_model(
            model,
            datasets["train"],
            datasets["val"],
            config.train,
            lr=lr,
            max_epochs=max_epochs,
            output_dir=out,
            run_id=kind.value,
            metadata={
                "kind": kind.value,
                "num_classes": num_classes,
                "classes": list(manifest.classes),
            },
            progress=progress,
        )
    scores, labels = predict(model, datasets["test"], config.train.batch_size)
    report = evaluate_scores(
        kind.value,
        scores,
        labels,
        num_classes,
        val_accuracy=result.best_val_acc,
        ks=config.report.top_k,
        weights=model.alphas(),
        epochs_run=result.epochs_run,
        early_stopped=result.early_stopped,
        best_epoch=result.best_epoch,
        history=[asdict(h) for h in result.history],
        class_names=list(manifest.classes),
    )
    emit_report(report, out, config.report.formats, scores=(scores, labels))
    logger.info(
        f"[{kind.value}] test accuracy {report.test_accuracy:.4f}, macro-F1 {report.macro_f1:.4f}, "
        f"best epoch {report.best_epoch}/{report.epochs_run}"
    )
    return report


def run_experiment_suite(
    config: "Config",
    kinds: Sequence[ModelKind | str] = SUITE_KINDS,
    output_dir: Path | str | None = None,
    progress: bool = False,
) -> SuiteReport:
    """
    Run every configuration on one shared split and write the suite report.

    Args:
        config: Resolved configuration.
        kinds: Configurations to run, in report order.
        output_dir: Suite directory (config.output_dir when None).
        progress: Show per-epoch progress bars.

    Returns:
        The suite report with one RunReport per configuration.
    """
    configure_determinism(config.train.deterministic)
    out = Path(output_dir or config.output_dir)
    manifest, datasets = prepare_data(config)
    logger.info(f"Running {len(kinds)} configuration(s) on {config.dataset.root}")
    runs = [
        run_experiment(config, kind, manifest, datasets, out / ModelKind(kind).value, progress)
        for kind in kinds
    ]
    suite = SuiteReport(
        dataset=Path(config.dataset.root).name, runs=runs, class_names=list(manifest.classes)
    )
    emit_suite(suite, out, config.report.top_k)
    return suite


def evaluate_checkpoint(
    config: "Config",
    checkpoint_path: Path | str,
    split: str = "test",
    output_dir: Path | str | None = None,
) -> RunReport:
    """
    Score a saved checkpoint on one split.

    The configuration kind and class count come from the checkpoint metadata
    when present, so a checkpoint evaluates with the model it was trained as.
    """
    configure_determinism(config.train.deterministic)
    checkpoint = load_checkpoint(checkpoint_path)
    manifest, datasets = prepare_data(config)
    if split not in datasets:
        raise ValueError(f"Unknown split '{split}', expected one of {sorted(datasets)}")
    kind = ModelKind(checkpoint.metadata.get("kind", config.model.kind))
    num_classes = int(checkpoint.metadata.get("num_classes", manifest.num_classes))
    if num_classes != manifest.num_classes:
        raise CheckpointError(
            f"Checkpoint was trained on {num_classes} classes, dataset has {manifest.num_classes}"
        )
    model = build_model(
        kind,
        num_classes,
        config.model.vit,
        config.model.mobilenet,
        projection_dropout=config.model.projection_dropout,
        attention_heads=config.model.attention_heads,
        seed=config.train.seed,
    )
    load_into(model, checkpoint)
    scores, labels = predict(model, datasets[split], config.train.batch_size)
    report = evaluate_scores(
        kind.value,
        scores,
        labels,
        num_classes,
        val_accuracy=float(checkpoint.metadata.get("val_acc", 0.0)),
        ks=config.report.top_k,
        weights=model.alphas(),
        best_epoch=int(checkpoint.metadata.get("epoch", 0)),
        class_names=list(manifest.classes),
    )
    if output_dir is not None:
        emit_report(report, output_dir, config.report.formats, scores=(scores, labels))
    return report
