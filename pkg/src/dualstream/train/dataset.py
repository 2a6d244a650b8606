"""
Torch dataset over manifest clips.

Each item is (rgb, flow, label): the augmented/normalised middle frame as
float32 (3, S, S), the centred flow stack as float32 (20, S, S) and the class
index. Flow comes from the cache; a missing cache file is computed on the fly
and quantised exactly as the cache would store it.
"""

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import torch
from torch.utils.data import Dataset

from dualstream.core.logging import get_logger
from dualstream.core.utils import make_rng
from dualstream.flow import (
    FarnebackParams,
    FlowStack,
    StaleCache,
    build_flow_stack,
    cache_path,
    cache_read,
    cache_signature,
    center_stack,
    read_cache_signature,
    read_excluded,
)
from dualstream.train.augment import AugmentPolicy, augment_rgb
from dualstream.videoio import ClipRecord, DatasetManifest, SampledClip, ingest_clip, sample_uniform

logger = get_logger()


@dataclass
class DatasetSettings:
    """Where clips live and how they are turned into model inputs."""

    dataset_root: Path
    cache_root: Path
    num_frames: int = 16
    size: int = 224
    params: FarnebackParams = field(default_factory=FarnebackParams)
    policy: AugmentPolicy = field(default_factory=AugmentPolicy)
    fallback: bool = True
    seed: int = 42


def cache_is_current(settings: DatasetSettings) -> bool:
    """False when the cache records other flow settings than these; unrecorded caches are used."""
    recorded = read_cache_signature(settings.cache_root)
    if recorded is None:
        return True
    if recorded == cache_signature(settings.params, settings.num_frames, settings.size):
        return True
    logger.warning(
        f"Flow cache {settings.cache_root} was built with other settings; "
        "computing flow on the fly (rerun extract-flow to refresh it)"
    )
    return False


class ClipDataset(Dataset[tuple[torch.Tensor, torch.Tensor, int]]):
    """Dataset of (rgb, flow, label) for one split."""

    def __init__(
        self,
        records: list[ClipRecord],
        settings: DatasetSettings,
        training: bool = False,
        keep_in_memory: bool = True,
    ) -> None:
        self.records = list(records)
        self.settings = settings
        self.training = training
        self.keep_in_memory = keep_in_memory
        self.epoch = 0
        self.cache_current = cache_is_current(settings)
        self._raw: dict[int, tuple[np.ndarray, np.ndarray]] = {}

    def __len__(self) -> int:
        return len(self.records)

    @property
    def labels(self) -> list[int]:
        return [r.class_index for r in self.records]

    def set_epoch(self, epoch: int) -> None:
        """Augmentation draws depend on (seed, epoch, clip id), never on loading order."""
        self.epoch = epoch

    def _load_flow(self, record: ClipRecord, sampled: SampledClip) -> np.ndarray:
        settings = self.settings
        path = cache_path(settings.cache_root, record.id)
        if not self.cache_current:
            if not settings.fallback:
                raise StaleCache(f"Flow cache {settings.cache_root} was built with other settings")
        else:
            try:
                return cache_read(path, settings.size).channels
            except FileNotFoundError:
                if not settings.fallback:
                    raise
            logger.debug(f"No cached flow for {record.id}; computing on the fly")
        return build_flow_stack(sampled, settings.params).quantized().channels

    def load_raw(self, index: int) -> tuple[np.ndarray, np.ndarray]:
        """Un-augmented middle frame (uint8 S x S x 3) and uncentred flow (float32 20 x S x S)."""
        if index in self._raw:
            return self._raw[index]
        record = self.records[index]
        settings = self.settings
        frame_dir = record.frame_dir(settings.dataset_root)
        clip = ingest_clip(frame_dir, record.class_index, clip_id=record.id)
        sampled = sample_uniform(clip, settings.num_frames, settings.size)
        item = (sampled.middle_frame, self._load_flow(record, sampled))
        if self.keep_in_memory:
            self._raw[index] = item
        return item

    def __getitem__(self, index: int) -> tuple[torch.Tensor, torch.Tensor, int]:
        record = self.records[index]
        frame, flow = self.load_raw(index)
        rng: np.random.Generator | None = None
        if self.training:
            rng = make_rng(self.settings.seed, "augment", self.epoch, record.id)
        rgb = augment_rgb(frame, self.settings.policy, rng, self.training)
        centred = center_stack(FlowStack(channels=flow.copy())).channels
        flow_tensor = torch.from_numpy(np.ascontiguousarray(centred))
        return torch.from_numpy(rgb), flow_tensor, record.class_index


def build_split_datasets(
    manifest: DatasetManifest,
    settings: DatasetSettings,
) -> dict[str, ClipDataset]:
    """
    One dataset per split, leaving out clips listed in the cache's excluded.json.

    Args:
        manifest: Manifest with split assignments.
        settings: Shared dataset settings.
    """
    excluded = read_excluded(settings.cache_root)
    if excluded:
        logger.warning(f"Excluding {len(excluded)} clip(s) that failed flow extraction")
        manifest = manifest.without(set(excluded))
    return {
        split: ClipDataset(manifest.by_split(split), settings, training=(split == "train"))
        for split in ("train", "val", "test")
    }
