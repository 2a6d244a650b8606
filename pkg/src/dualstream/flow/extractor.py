"""
Parallel flow-cache population.

Every clip in a manifest is ingested, sampled, turned into a flow stack and
written to ``<cache_root>/<clip_id>.npy``. Valid cache files are skipped,
corrupt ones are recomputed, and everything is recomputed when
``flow_params.json`` records other settings. Clips that cannot be processed
are recorded in ``<cache_root>/excluded.json`` so the dataset layer leaves
them out.
"""

import json
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Any

import cv2
from tqdm import tqdm

from dualstream.core.logging import get_logger
from dualstream.core.utils import DualStreamError, atomic_write
from dualstream.flow.cache import (
    CACHE_SUFFIX,
    CorruptCache,
    cache_is_valid,
    cache_path,
    cache_signature,
    cache_write,
    read_cache_signature,
    write_cache_signature,
)
from dualstream.flow.farneback import FarnebackParams
from dualstream.flow.stack import build_flow_stack
from dualstream.videoio import ClipRecord, DatasetManifest, ingest_clip, sample_uniform

logger = get_logger()

EXCLUDED_FILENAME = "excluded.json"


class ClipStatus(Enum):
    COMPUTED = "computed"
    SKIPPED = "skipped"
    FAILED = "failed"


@dataclass(frozen=True)
class ClipOutcome:
    clip_id: str
    status: ClipStatus
    error: str | None = None


@dataclass
class ExtractionSummary:
    """Counts of computed, skipped and failed clips, plus the failure reasons."""

    computed: int = 0
    skipped: int = 0
    failed: dict[str, str] = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return not self.failed

    def add(self, outcome: ClipOutcome) -> None:
        if outcome.status is ClipStatus.COMPUTED:
            self.computed += 1
        elif outcome.status is ClipStatus.SKIPPED:
            self.skipped += 1
        else:
            self.failed[outcome.clip_id] = outcome.error or "unknown error"

    def to_dict(self) -> dict[str, Any]:
        return {
            "computed": self.computed,
            "skipped": self.skipped,
            "failed": len(self.failed),
            "failed_clips": dict(sorted(self.failed.items())),
        }


@dataclass(frozen=True)
class ExtractionJob:
    """Everything a worker needs to process one clip (picklable)."""

    record: ClipRecord
    dataset_root: Path
    cache_root: Path
    params: FarnebackParams
    num_frames: int
    size: int
    recompute: bool = False


def extract_clip(job: ExtractionJob) -> ClipOutcome:
    """Compute and cache one clip's flow stack unless a valid, current cache file exists."""
    record = job.record
    target = cache_path(job.cache_root, record.id)
    if not job.recompute and cache_is_valid(target, job.size):
        return ClipOutcome(record.id, ClipStatus.SKIPPED)
    if target.exists() and not job.recompute:
        logger.warning(f"Replacing corrupt flow cache {target}")

    try:
        frame_dir = record.frame_dir(job.dataset_root)
        clip = ingest_clip(frame_dir, record.class_index, clip_id=record.id)
        sampled = sample_uniform(clip, job.num_frames, job.size)
        cache_write(build_flow_stack(sampled, job.params), target)
    except (DualStreamError, OSError) as e:
        logger.debug(f"Flow extraction failed for {record.id}: {e}")
        return ClipOutcome(record.id, ClipStatus.FAILED, f"{type(e).__name__}: {e}")
    return ClipOutcome(record.id, ClipStatus.COMPUTED)


def _init_worker() -> None:
    cv2.setNumThreads(1)


def extract_flows(
    manifest: DatasetManifest,
    dataset_root: Path | str,
    cache_root: Path | str,
    params: FarnebackParams | None = None,
    num_frames: int = 16,
    size: int = 224,
    workers: int = 1,
    progress: bool = True,
) -> ExtractionSummary:
    """
    Populate the flow cache for every clip in the manifest.

    Results do not depend on the worker count: each clip is processed
    independently and written atomically.

    Args:
        manifest: Clips to process.
        dataset_root: Root of the frame-directory layout.
        cache_root: Output directory for NPY files.
        params: Farneback parameters.
        num_frames: Frames sampled per clip.
        size: Spatial side S of the cached stacks.
        workers: Number of worker processes (1 runs in-process).
        progress: Show a tqdm progress bar.

    Returns:
        The extraction summary; failed clips are also written to excluded.json.
    """
    params = params or FarnebackParams()
    root = Path(cache_root)
    root.mkdir(parents=True, exist_ok=True)
    signature = cache_signature(params, num_frames, size)
    try:
        recorded = read_cache_signature(root)
    except CorruptCache as e:
        logger.warning(str(e))
        recorded = None
    recompute = recorded != signature
    if recompute and any(root.glob(f"*{CACHE_SUFFIX}")):
        logger.warning(f"Flow cache {root} was built with other settings; recomputing every clip")
    jobs = [
        ExtractionJob(record, Path(dataset_root), root, params, num_frames, size, recompute)
        for record in manifest.clips
    ]
    logger.info(f"Extracting flow for {len(jobs)} clips with {workers} worker(s) into {root}")

    summary = ExtractionSummary()
    bar = tqdm(total=len(jobs), desc="flow", unit="clip", disable=not progress)
    try:
        if workers <= 1:
            for job in jobs:
                summary.add(extract_clip(job))
                bar.update(1)
        else:
            with ProcessPoolExecutor(max_workers=workers, initializer=_init_worker) as pool:
                for outcome in pool.map(extract_clip, jobs, chunksize=1):
                    summary.add(outcome)
                    bar.update(1)
    finally:
        bar.close()

    write_cache_signature(root, signature)
    write_excluded(root, summary.failed)
    for clip_id, reason in sorted(summary.failed.items()):
        logger.warning(f"Excluded clip {clip_id}: {reason}")
    logger.info(
        f"Flow extraction finished: {summary.computed} computed, "
        f"{summary.skipped} skipped, {len(summary.failed)} failed"
    )
    return summary


def write_excluded(cache_root: Path, failed: dict[str, str]) -> Path:
    """Record failed clips; an empty mapping clears a previous exclusion list."""
    path = cache_root / EXCLUDED_FILENAME
    payload = json.dumps(dict(sorted(failed.items())), indent=2).encode("utf-8")
    atomic_write(path, lambda f: f.write(payload + b"\n"))
    return path


def read_excluded(cache_root: Path | str) -> dict[str, str]:
    """Clips excluded by the last extraction run (empty when none were recorded)."""
    path = Path(cache_root) / EXCLUDED_FILENAME
    if not path.is_file():
        return {}
    with open(path, encoding="utf-8") as f:
        data = json.load(f)
    return {str(k): str(v) for k, v in data.items()}
