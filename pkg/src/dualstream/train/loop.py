"""
The optimisation loop: AdamW, per-epoch cosine annealing and early stopping
on validation accuracy. The best-validation weights are restored at the end
and, when an output directory is given, saved as ``checkpoint.zip`` next to a
``history.csv`` epoch log.
"""

import copy
import csv
import math
from collections.abc import Iterator
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any

import numpy as np
import torch
from torch.utils.data import DataLoader, Sampler
from tqdm import tqdm

from dualstream.core.logging import get_logger, log_epoch
from dualstream.core.utils import DualStreamError, derive_seed
from dualstream.fusion import Classifier
from dualstream.tensor import backward, save_checkpoint, zero_grad
from dualstream.train.config import TrainConfig
from dualstream.train.dataset import ClipDataset

logger = get_logger()

HISTORY_FIELDS = ("epoch", "train_loss", "train_acc", "val_acc", "lr")
CHECKPOINT_FILENAME = "checkpoint.zip"
HISTORY_FILENAME = "history.csv"


class DivergedLoss(DualStreamError):
    """Raised when the training loss becomes NaN or infinite."""

    pass


def cosine_factor(epoch: int, t_max: int) -> float:
    """½(1 + cos(π t / T_max)), clamped to t in [0, T_max]."""
    t = min(max(epoch, 0), t_max)
    return 0.5 * (1.0 + math.cos(math.pi * t / t_max))


def cosine_lr(base_lr: float, epoch: int, t_max: int) -> float:
    return base_lr * cosine_factor(epoch, t_max)


class EarlyStopping:
    """
    Stop when validation accuracy has not improved by more than min_delta for
    `patience` consecutive epochs. Ties keep the earliest best epoch.
    """

    def __init__(self, patience: int, min_delta: float = 1e-4) -> None:
        self.patience = patience
        self.min_delta = min_delta
        self.best_value = -math.inf
        self.best_epoch = 0
        self.stale_epochs = 0

    def update(self, epoch: int, value: float) -> bool:
        """Record an epoch's metric; returns True when it is the new best."""
        if value > self.best_value + self.min_delta:
            self.best_value = value
            self.best_epoch = epoch
            self.stale_epochs = 0
            return True
        self.stale_epochs += 1
        return False

    @property
    def should_stop(self) -> bool:
        return self.stale_epochs >= self.patience


class EpochBatchSampler(Sampler[list[int]]):
    """
    Shuffled batches that keep the last incomplete batch. A trailing batch of
    a single sample is merged into the previous batch (batch-norm needs two).
    """

    def __init__(self, size: int, batch_size: int, seed: int, shuffle: bool = True) -> None:
        self.size = size
        self.batch_size = batch_size
        self.seed = seed
        self.shuffle = shuffle
        self.epoch = 0

    def set_epoch(self, epoch: int) -> None:
        self.epoch = epoch

    def batches(self) -> list[list[int]]:
        if self.shuffle:
            generator = torch.Generator().manual_seed(derive_seed(self.seed, "shuffle", self.epoch))
            order = torch.randperm(self.size, generator=generator).tolist()
        else:
            order = list(range(self.size))
        batches = [order[i : i + self.batch_size] for i in range(0, self.size, self.batch_size)]
        if len(batches) > 1 and len(batches[-1]) == 1:
            batches[-2].extend(batches.pop())
        return batches

    def __iter__(self) -> Iterator[list[int]]:
        return iter(self.batches())

    def __len__(self) -> int:
        return len(self.batches())


@dataclass
class EpochRecord:
    epoch: int
    train_loss: float
    train_acc: float
    val_acc: float
    lr: float


@dataclass
class TrainResult:
    """Outcome of one training run; the model holds the best-validation weights."""

    model: Classifier
    history: list[EpochRecord] = field(default_factory=list)
    best_epoch: int = 0
    best_val_acc: float = 0.0
    epochs_run: int = 0
    early_stopped: bool = False
    checkpoint_path: Path | None = None


def make_optimizer(
    params: list[torch.nn.Parameter], cfg: TrainConfig, lr: float
) -> torch.optim.AdamW:
    """AdamW with decoupled weight decay: a zero gradient step scales weights by 1 - lr * wd."""
    return torch.optim.AdamW(
        params, lr=lr, betas=(cfg.beta1, cfg.beta2), eps=cfg.eps, weight_decay=cfg.weight_decay
    )


def make_loader(
    dataset: ClipDataset, batch_size: int, seed: int, shuffle: bool, workers: int
) -> DataLoader[Any]:
    sampler = EpochBatchSampler(len(dataset), batch_size, seed, shuffle=shuffle)
    return DataLoader(dataset, batch_sampler=sampler, num_workers=workers)


@torch.no_grad()
def predict(
    model: Classifier, dataset: ClipDataset, batch_size: int = 8, workers: int = 0
) -> tuple[np.ndarray, np.ndarray]:
    """
    Class scores and labels for every sample, in dataset order.

    Returns:
        (scores float32 N x C, labels int64 N); scores are probabilities.
    """
    model.eval()
    scores: list[np.ndarray] = []
    labels: list[np.ndarray] = []
    for rgb, flow, label in make_loader(dataset, batch_size, 0, shuffle=False, workers=workers):
        scores.append(model.scores(model(rgb, flow)).float().numpy())
        labels.append(label.numpy().astype(np.int64))
    if not scores:
        return np.zeros((0, 0), dtype=np.float32), np.zeros(0, dtype=np.int64)
    return np.concatenate(scores), np.concatenate(labels)


def accuracy_of(
    model: Classifier, dataset: ClipDataset, batch_size: int, workers: int = 0
) -> float:
    if len(dataset) == 0:
        return 0.0
    scores, labels = predict(model, dataset, batch_size, workers)
    return float(np.mean(np.argmax(scores, axis=1) == labels))


def write_history(history: list[EpochRecord], path: Path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as f:
        writer = csv.DictWriter(f, fieldnames=HISTORY_FIELDS)
        writer.writeheader()
        for record in history:
            writer.writerow(asdict(record))


def _freeze(model: Classifier, stream: str) -> None:
    frozen = model.backbone_parameters(stream)
    for param in frozen:
        param.requires_grad = False
    if frozen:
        logger.info(f"Froze {sum(p.numel() for p in frozen)} {stream} backbone parameters")


def train_model(
    model: Classifier,
    train_set: ClipDataset,
    val_set: ClipDataset,
    cfg: TrainConfig,
    lr: float | None = None,
    max_epochs: int | None = None,
    output_dir: Path | str | None = None,
    run_id: str = "run",
    metadata: dict[str, Any] | None = None,
    progress: bool = False,
) -> TrainResult:
    """
    Train a classifier with AdamW, cosine annealing and early stopping.

    Args:
        model: Model to train in place.
        train_set: Training dataset (augmentation on).
        val_set: Validation dataset.
        cfg: Training settings.
        lr: Base learning rate (cfg.lr when None).
        max_epochs: Epoch budget and cosine T_max (cfg.max_epochs when None).
        output_dir: Where checkpoint.zip and history.csv go; nothing is written when None.
        run_id: Label used in log lines.
        metadata: Extra JSON metadata stored in the checkpoint.
        progress: Show a per-epoch tqdm bar.

    Returns:
        TrainResult with the best-validation weights loaded into the model.

    Raises:
        DivergedLoss: If a batch loss is NaN or infinite.
    """
    base_lr = cfg.lr if lr is None else lr
    epochs = cfg.max_epochs if max_epochs is None else max_epochs
    torch.manual_seed(derive_seed(cfg.seed, "train", run_id))
    if cfg.freeze_rgb_backbone:
        _freeze(model, "rgb")

    optimizer = make_optimizer([p for p in model.parameters() if p.requires_grad], cfg, base_lr)
    scheduler = torch.optim.lr_scheduler.LambdaLR(optimizer, lambda e: cosine_factor(e, epochs))
    loader = make_loader(
        train_set, cfg.batch_size, cfg.seed, shuffle=True, workers=cfg.loader_workers
    )
    stopper = EarlyStopping(cfg.patience, cfg.min_delta)
    out = Path(output_dir) if output_dir is not None else None
    if out is not None:
        out.mkdir(parents=True, exist_ok=True)

    result = TrainResult(model=model)
    best_state = copy.deepcopy(model.state_dict())
    logger.info(
        f"[{run_id}] training {len(train_set)} clips for up to {epochs} epochs at lr {base_lr:g}"
    )

    for epoch in range(1, epochs + 1):
        train_set.set_epoch(epoch)
        loader.batch_sampler.set_epoch(epoch)  # type: ignore[union-attr]
        current_lr = optimizer.param_groups[0]["lr"]
        model.train()
        total_loss, correct, seen = 0.0, 0, 0
        batches = tqdm(loader, desc=f"{run_id} {epoch}", disable=not progress)
        for step, (rgb, flow, labels) in enumerate(batches):
            outputs = model(rgb, flow)
            loss = model.loss(outputs, labels)
            if not torch.isfinite(loss):
                raise DivergedLoss(
                    f"[{run_id}] loss became {loss.item()} at epoch {epoch}, batch {step} "
                    f"(lr {current_lr:g})"
                )
            zero_grad(model)
            backward(loss)
            optimizer.step()
            total_loss += loss.item() * labels.shape[0]
            correct += int((outputs.argmax(dim=1) == labels).sum())
            seen += labels.shape[0]
            logger.verbose(f"[{run_id}] epoch {epoch} batch {step}: loss {loss.item():.4f}")
        scheduler.step()

        val_acc = accuracy_of(model, val_set, cfg.batch_size, cfg.loader_workers)
        record = EpochRecord(
            epoch, total_loss / max(seen, 1), correct / max(seen, 1), val_acc, current_lr
        )
        result.history.append(record)
        message = (
            f"epoch {epoch}: loss {record.train_loss:.4f} train_acc {record.train_acc:.4f} "
            f"val_acc {val_acc:.4f} lr {current_lr:.3e}"
        )
        logger.info(f"[{run_id}] {message}")
        log_epoch(run_id, message)

        if stopper.update(epoch, val_acc):
            best_state = copy.deepcopy(model.state_dict())
            if out is not None:
                result.checkpoint_path = save_checkpoint(
                    best_state,
                    out / CHECKPOINT_FILENAME,
                    metadata={
                        **(metadata or {}),
                        "epoch": epoch,
                        "val_acc": val_acc,
                        "run_id": run_id,
                    },
                )
        if out is not None:
            write_history(result.history, out / HISTORY_FILENAME)
        if stopper.should_stop:
            result.early_stopped = epoch < epochs
            logger.info(
                f"[{run_id}] early stop after epoch {epoch}; best epoch {stopper.best_epoch}"
            )
            break

    model.load_state_dict(best_state)
    result.best_epoch = stopper.best_epoch
    result.best_val_acc = max(stopper.best_value, 0.0)
    result.epochs_run = len(result.history)
    return result
