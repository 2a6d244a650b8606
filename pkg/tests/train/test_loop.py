"""Tests for the training loop pieces."""

import csv
import math

import pytest
import torch
from torch.utils.data import Dataset

from dualstream.encoders import MobileNetV2Config, ViTConfig
from dualstream.fusion import Classifier, build_model
from dualstream.tensor import load_checkpoint
from dualstream.train import (
    DivergedLoss,
    EarlyStopping,
    EpochBatchSampler,
    TrainConfig,
    accuracy_of,
    cosine_factor,
    cosine_lr,
    make_optimizer,
    predict,
    train_model,
)
from tests.conftest import TINY_MODEL


class RandomClips(Dataset):
    """Fixed random (rgb, flow, label) samples with the ClipDataset epoch hook."""

    def __init__(self, size: int, classes: int = 3, seed: int = 0, fill: float | None = None):
        generator = torch.Generator().manual_seed(seed)
        self.rgb = torch.randn(size, 3, 32, 32, generator=generator)
        self.flow = torch.randn(size, 20, 32, 32, generator=generator) * 40
        if fill is not None:
            self.rgb.fill_(fill)
        self.labels = torch.arange(size) % classes
        self.epoch = 0

    def set_epoch(self, epoch: int) -> None:
        self.epoch = epoch

    def __len__(self) -> int:
        return len(self.labels)

    def __getitem__(self, index: int):
        return self.rgb[index], self.flow[index], int(self.labels[index])


def tiny_model(kind: str = "concat", seed: int = 0):
    vit = ViTConfig(**TINY_MODEL["vit"])
    mobilenet = MobileNetV2Config(**TINY_MODEL["mobilenet"])
    return build_model(kind, 3, vit, mobilenet, attention_heads=2, seed=seed)


class TestCosine:
    """Tests for the cosine schedule."""

    def test_endpoints(self):
        """Test the factor at 0, T_max/2 and T_max."""
        assert cosine_factor(0, 10) == pytest.approx(1.0)
        assert cosine_factor(5, 10) == pytest.approx(0.5)
        assert cosine_factor(10, 10) == pytest.approx(0.0, abs=1e-12)

    def test_clamped(self):
        """Test that epochs beyond T_max stay at the minimum."""
        assert cosine_lr(1e-3, 15, 10) == pytest.approx(0.0, abs=1e-15)

    def test_monotone(self):
        """Test that the learning rate never increases."""
        values = [cosine_lr(1e-4, t, 20) for t in range(21)]
        assert all(a >= b for a, b in zip(values, values[1:]))
        assert values[10] == pytest.approx(0.5e-4 * (1 + math.cos(math.pi / 2)))


class TestEarlyStopping:
    """Tests for EarlyStopping."""

    def test_flat_trace(self):
        """Test that a flat metric stops after patience epochs and keeps the first best."""
        stopper = EarlyStopping(patience=5)
        stopped_at = None
        for epoch, value in enumerate([0.5] * 10, start=1):
            stopper.update(epoch, value)
            if stopper.should_stop:
                stopped_at = epoch
                break
        assert stopped_at == 6
        assert stopper.best_epoch == 1

    def test_improvement_resets(self):
        """Test that an improvement resets the stale counter."""
        stopper = EarlyStopping(patience=2)
        for epoch, value in enumerate([0.2, 0.2, 0.4, 0.4], start=1):
            stopper.update(epoch, value)
        assert stopper.best_epoch == 3
        assert not stopper.should_stop

    def test_min_delta(self):
        """Test that gains below min_delta do not count."""
        stopper = EarlyStopping(patience=1, min_delta=0.01)
        stopper.update(1, 0.5)
        assert not stopper.update(2, 0.505)
        assert stopper.should_stop


class TestEpochBatchSampler:
    """Tests for EpochBatchSampler."""

    def test_covers_every_index(self):
        """Test that an epoch visits each sample exactly once."""
        sampler = EpochBatchSampler(10, 4, seed=0)
        flat = [i for batch in sampler for i in batch]
        assert sorted(flat) == list(range(10))
        assert [len(b) for b in sampler] == [4, 4, 2]

    def test_singleton_merged(self):
        """Test that a trailing single-sample batch joins the previous batch."""
        assert [len(b) for b in EpochBatchSampler(9, 4, seed=0)] == [4, 5]
        assert [len(b) for b in EpochBatchSampler(1, 4, seed=0)] == [1]

    def test_epoch_shuffle(self):
        """Test that the order depends on epoch and seed only."""
        a = EpochBatchSampler(20, 5, seed=3)
        b = EpochBatchSampler(20, 5, seed=3)
        a.set_epoch(2)
        b.set_epoch(2)
        assert a.batches() == b.batches()
        b.set_epoch(3)
        assert a.batches() != b.batches()

    def test_no_shuffle(self):
        """Test sequential order for evaluation."""
        assert EpochBatchSampler(5, 2, seed=0, shuffle=False).batches() == [[0, 1], [2, 3, 4]]


class TestTrainConfig:
    """Tests for TrainConfig validation."""

    def test_patience_below_epochs(self):
        """Test that patience must be smaller than the epoch budget."""
        with pytest.raises(ValueError, match="patience"):
            TrainConfig(max_epochs=3, patience=3)

    def test_stream_settings(self):
        """Test the flow-only learning rate and epoch budget."""
        cfg = TrainConfig()
        assert cfg.for_stream(False) == (1e-4, 10)
        assert cfg.for_stream(True) == (5e-4, 50)

    def test_deterministic_loader(self):
        """Test that deterministic runs load in-process."""
        assert TrainConfig(num_workers=4, deterministic=True).loader_workers == 0


class TestTrainModel:
    """Tests for train_model."""

    def config(self, **kwargs) -> TrainConfig:
        values = {"lr": 1e-3, "batch_size": 4, "max_epochs": 3, "patience": 2, "seed": 1}
        return TrainConfig(**{**values, **kwargs})

    def test_smoke(self, tmp_path):
        """Test a short run writes a checkpoint and history and restores the best epoch."""
        model = tiny_model()
        result = train_model(
            model,
            RandomClips(9),
            RandomClips(6, seed=1),
            self.config(),
            output_dir=tmp_path,
            run_id="concat",
            metadata={"kind": "concat"},
        )
        assert 1 <= result.epochs_run <= 3
        assert 1 <= result.best_epoch <= result.epochs_run
        assert [r.epoch for r in result.history] == list(range(1, result.epochs_run + 1))
        assert result.history[0].lr == pytest.approx(1e-3)
        checkpoint = load_checkpoint(result.checkpoint_path)
        assert checkpoint.metadata["kind"] == "concat"
        assert checkpoint.metadata["epoch"] == result.best_epoch
        for name, tensor in model.state_dict().items():
            torch.testing.assert_close(checkpoint.tensors[name], tensor)
        with open(tmp_path / "history.csv", newline="") as f:
            rows = list(csv.DictReader(f))
        assert len(rows) == result.epochs_run

    def test_reproducible(self):
        """Test that two runs from the same seeds end with identical weights."""
        states = []
        for _ in range(2):
            model = tiny_model(seed=2)
            config = self.config(max_epochs=2, patience=1)
            train_model(model, RandomClips(8), RandomClips(4, seed=1), config)
            states.append(model.state_dict())
        for name in states[0]:
            torch.testing.assert_close(states[0][name], states[1][name], rtol=0, atol=0)

    def test_frozen_backbone(self):
        """Test that a frozen RGB backbone does not move."""
        model = tiny_model()
        before = [p.detach().clone() for p in model.backbone_parameters("rgb")]
        train_model(
            model,
            RandomClips(8),
            RandomClips(4, seed=1),
            self.config(max_epochs=2, patience=1, freeze_rgb_backbone=True),
        )
        for old, new in zip(before, model.backbone_parameters("rgb")):
            assert torch.equal(old, new)

    def test_diverged_loss(self):
        """Test that a non-finite loss aborts the run."""
        with pytest.raises(DivergedLoss, match="epoch 1"):
            broken = RandomClips(4, fill=float("nan"))
            train_model(tiny_model(), broken, RandomClips(2), self.config())

    def test_predict(self):
        """Test prediction order and probability rows."""
        model = tiny_model("late")
        scores, labels = predict(model, RandomClips(5), batch_size=2)
        assert scores.shape == (5, 3)
        assert labels.tolist() == [0, 1, 2, 0, 1]
        assert scores.sum(axis=1) == pytest.approx([1.0] * 5, abs=1e-5)


class TestOptimizer:
    """Tests for the AdamW factory."""

    def step_with_zero_gradient(self, weight_decay: float, lr: float = 0.1) -> torch.Tensor:
        param = torch.nn.Parameter(torch.tensor([1.0, -2.0, 0.5], dtype=torch.float64))
        cfg = TrainConfig(lr=lr, weight_decay=weight_decay)
        optimizer = make_optimizer([param], cfg, lr)
        param.grad = torch.zeros_like(param)
        optimizer.step()
        return param.detach()

    def test_zero_gradient_without_decay(self):
        """Test that a zero gradient and no weight decay leave parameters unchanged."""
        torch.testing.assert_close(
            self.step_with_zero_gradient(0.0),
            torch.tensor([1.0, -2.0, 0.5], dtype=torch.float64),
            rtol=0,
            atol=0,
        )

    def test_decay_is_decoupled(self):
        """Test that a zero gradient step scales parameters by 1 - lr * wd."""
        scale = 1 - 0.1 * 0.05
        torch.testing.assert_close(
            self.step_with_zero_gradient(0.05),
            torch.tensor([1.0, -2.0, 0.5], dtype=torch.float64) * scale,
        )


class SeparableClips(Dataset):
    """Clips whose mean RGB colour encodes the label, with mild noise."""

    def __init__(self, size: int, classes: int = 3, seed: int = 0):
        generator = torch.Generator().manual_seed(seed)
        self.labels = torch.arange(size) % classes
        colours = torch.nn.functional.one_hot(self.labels, 3).float() * 2.0 - 1.0
        noise = torch.randn(size, 3, 8, 8, generator=generator) * 0.3
        self.rgb = colours[:, :, None, None] + noise
        self.flow = torch.zeros(size, 20, 8, 8)

    def set_epoch(self, epoch: int) -> None:
        pass

    def __len__(self) -> int:
        return len(self.labels)

    def __getitem__(self, index: int):
        return self.rgb[index], self.flow[index], int(self.labels[index])


class MeanColourClassifier(Classifier):
    """Linear classifier over the per-channel mean of the RGB input."""

    def __init__(self, classes: int = 3) -> None:
        super().__init__()
        self.linear = torch.nn.Linear(3, classes)

    def forward(self, rgb: torch.Tensor, flow: torch.Tensor) -> torch.Tensor:
        return self.linear(rgb.mean(dim=(2, 3)))


class TestSeparableData:
    """train_model on a linearly separable toy problem."""

    def test_reaches_full_accuracy(self):
        """Test that training fits a separable dataset to at least 99% accuracy."""
        torch.manual_seed(0)
        model = MeanColourClassifier()
        cfg = TrainConfig(lr=0.05, batch_size=8, max_epochs=30, patience=29, seed=3)
        train_set, val_set = SeparableClips(60), SeparableClips(30, seed=1)
        result = train_model(model, train_set, val_set, cfg)
        assert result.best_val_acc >= 0.99
        assert accuracy_of(model, train_set, 8) >= 0.99
