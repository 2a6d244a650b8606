"""
Stratified train/val/test split.

Within each class the clips (ordered by id) are shuffled with a Philox
generator keyed on (seed, class name) and cut into contiguous train, val and
test runs. Per-class counts use largest-remainder rounding of n * fraction;
remainder ties go to the earlier split. The persisted manifest, not the
generator, is what makes a split reproducible elsewhere.
"""

import json
from collections.abc import Sequence
from fractions import Fraction
from pathlib import Path
from typing import Any

from dualstream.core.logging import get_logger
from dualstream.core.utils import DualStreamError, make_rng
from dualstream.videoio import SPLITS, DatasetManifest

logger = get_logger()

DEFAULT_FRACTIONS = (0.7, 0.1, 0.2)
SPLIT_FILENAME = "split.json"
PROVENANCE_KEY = "provenance"


class ClassTooSmall(DualStreamError):
    """Raised when a class has fewer clips than there are splits."""

    pass


def split_counts(n: int, fractions: Sequence[float]) -> list[int]:
    """
    Largest-remainder apportionment of n items.

    Example:
        >>> split_counts(9, (0.7, 0.1, 0.2))
        [6, 1, 2]
    """
    exact = [Fraction(str(f)) for f in fractions]
    total = sum(exact)
    quotas = [n * f / total for f in exact]
    counts = [int(q) for q in quotas]
    order = sorted(range(len(quotas)), key=lambda i: (-(quotas[i] - counts[i]), i))
    for i in order[: n - sum(counts)]:
        counts[i] += 1
    return counts


def stratified_split(
    manifest: DatasetManifest,
    fractions: Sequence[float] = DEFAULT_FRACTIONS,
    seed: int = 42,
) -> DatasetManifest:
    """
    Assign every clip to train, val or test, stratified by class.

    Args:
        manifest: Clips to split (existing assignments are ignored).
        fractions: Train/val/test fractions.
        seed: Split seed.

    Returns:
        A copy of the manifest with every clip's split set.

    Raises:
        ClassTooSmall: If a class has fewer than 3 clips.
        ValueError: If fractions are malformed.
    """
    if len(fractions) != len(SPLITS) or any(f < 0 for f in fractions):
        raise ValueError(f"Expected {len(SPLITS)} non-negative fractions, got {list(fractions)}")
    if abs(sum(fractions) - 1.0) > 1e-9:
        raise ValueError(f"Split fractions must sum to 1, got {sum(fractions)}")

    assignment: dict[str, str] = {}
    for class_index, clips in sorted(manifest.by_class().items()):
        class_name = manifest.classes[class_index]
        if len(clips) < len(SPLITS):
            raise ClassTooSmall(
                f"Class '{class_name}' has {len(clips)} clip(s); "
                f"at least {len(SPLITS)} are required"
            )
        ordered = sorted(clips, key=lambda c: c.id)
        permutation = make_rng(seed, "split", class_name).permutation(len(ordered))
        start = 0
        for split, count in zip(SPLITS, split_counts(len(ordered), fractions), strict=True):
            for position in permutation[start : start + count]:
                assignment[ordered[int(position)].id] = split
            start += count
        logger.debug(f"Split class '{class_name}': {split_counts(len(ordered), fractions)}")

    result = manifest.with_splits(assignment)
    sizes = ", ".join(f"{s}={len(result.by_split(s))}" for s in SPLITS)
    logger.info(f"Split {len(result.clips)} clips: {sizes}")
    return result


def load_or_create_split(
    manifest: DatasetManifest,
    path: Path | str,
    fractions: Sequence[float] = DEFAULT_FRACTIONS,
    seed: int = 42,
) -> DatasetManifest:
    """
    Reuse a persisted split when it was made from this manifest with these
    settings, otherwise create and persist a new one.

    A split file without a provenance record (hand-written, for instance) is
    reused as is. One whose record names another seed, other fractions or
    another manifest is regenerated with a warning.
    """
    split_path = Path(path)
    provenance = split_provenance(manifest, fractions, seed)
    if split_path.is_file():
        with open(split_path, encoding="utf-8") as f:
            data = json.load(f)
        recorded = data.get(PROVENANCE_KEY)
        if recorded is None or recorded == provenance:
            logger.info(f"Using persisted split {split_path}")
            return DatasetManifest.from_dict(data)
        logger.warning(
            f"Persisted split {split_path} was made with other settings ({recorded}); "
            f"regenerating with seed {seed}"
        )
    result = stratified_split(manifest, fractions, seed)
    result.save(split_path, extra={PROVENANCE_KEY: provenance})
    return result


def split_provenance(
    manifest: DatasetManifest, fractions: Sequence[float], seed: int
) -> dict[str, Any]:
    return {
        "seed": seed,
        "fractions": [float(f) for f in fractions],
        "manifest_sha256": manifest.digest(),
    }
