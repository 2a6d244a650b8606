"""
Train package - Splitting, augmentation, optimisation and experiment suites.

This package provides:
- stratified_split / load_or_create_split: The persisted train/val/test split
- augment_rgb: Flip, affine jitter and ImageNet normalisation of the middle frame
- ClipDataset: (rgb, flow, label) samples backed by the flow cache
- train_model: AdamW + cosine annealing + early stopping
- run_experiment_suite: The seven-configuration comparison
"""

from .augment import (
    IMAGENET_MEAN,
    IMAGENET_STD,
    AugmentParams,
    AugmentPolicy,
    apply_augmentation,
    augment_rgb,
    draw_augmentation,
    normalize_rgb,
)
from .config import TrainConfig
from .dataset import ClipDataset, DatasetSettings, build_split_datasets
from .loop import (
    DivergedLoss,
    EarlyStopping,
    EpochBatchSampler,
    EpochRecord,
    TrainResult,
    accuracy_of,
    cosine_factor,
    cosine_lr,
    make_optimizer,
    predict,
    train_model,
)
from .split import (
    DEFAULT_FRACTIONS,
    PROVENANCE_KEY,
    SPLIT_FILENAME,
    ClassTooSmall,
    load_or_create_split,
    split_counts,
    split_provenance,
    stratified_split,
)
from .suite import (
    configure_determinism,
    evaluate_checkpoint,
    load_manifest,
    make_model,
    prepare_data,
    run_experiment,
    run_experiment_suite,
)

__all__ = [
    "TrainConfig",
    "DEFAULT_FRACTIONS",
    "SPLIT_FILENAME",
    "PROVENANCE_KEY",
    "ClassTooSmall",
    "split_counts",
    "split_provenance",
    "stratified_split",
    "load_or_create_split",
    "IMAGENET_MEAN",
    "IMAGENET_STD",
    "AugmentPolicy",
    "AugmentParams",
    "draw_augmentation",
    "apply_augmentation",
    "normalize_rgb",
    "augment_rgb",
    "DatasetSettings",
    "ClipDataset",
    "build_split_datasets",
    "DivergedLoss",
    "EarlyStopping",
    "EpochBatchSampler",
    "EpochRecord",
    "TrainResult",
    "accuracy_of",
    "cosine_factor",
    "cosine_lr",
    "make_optimizer",
    "predict",
    "train_model",
    "configure_determinism",
    "load_manifest",
    "prepare_data",
    "make_model",
    "run_experiment",
    "run_experiment_suite",
    "evaluate_checkpoint",
]
