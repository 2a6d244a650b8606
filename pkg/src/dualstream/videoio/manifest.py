"""
Dataset manifest: the list of clips, their classes and split assignments.

On-disk layout handled here::

    <root>/<class_name>/<clip_id>/frame_%05d.png
    <root>/manifest.json

The manifest JSON is ``{"classes": [...], "clips": [{id, class_name,
class_index, split}, ...]}``. ``split`` is null until a split has been
assigned.
"""

import hashlib
import json
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any

from dualstream.core.logging import get_logger
from dualstream.core.utils import atomic_write
from dualstream.videoio.clip import list_frame_files

logger = get_logger()

MANIFEST_FILENAME = "manifest.json"
SPLITS = ("train", "val", "test")


@dataclass(frozen=True)
class ClipRecord:
    """One manifest entry."""

    id: str
    class_name: str
    class_index: int
    split: str | None = None

    def frame_dir(self, root: Path) -> Path:
        return Path(root) / self.class_name / self.id

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "ClipRecord":
        """Create a ClipRecord from a manifest entry.

        Raises:
            ValueError: If required fields are missing or the split is unknown.
        """
        if not isinstance(data, dict):
            raise ValueError("Manifest entry must be a dictionary")
        try:
            record = cls(
                id=str(data["id"]),
                class_name=str(data["class_name"]),
                class_index=int(data["class_index"]),
                split=data.get("split"),
            )
        except KeyError as e:
            raise ValueError(f"Manifest entry missing field {e}") from e
        if record.split is not None and record.split not in SPLITS:
            raise ValueError(f"Clip '{record.id}' has unknown split '{record.split}'")
        return record

    def to_dict(self) -> dict[str, Any]:
        return {
            "id": self.id,
            "class_name": self.class_name,
            "class_index": self.class_index,
            "split": self.split,
        }


@dataclass
class DatasetManifest:
    """All clips of a dataset plus the ordered class-name list."""

    classes: list[str] = field(default_factory=list)
    clips: list[ClipRecord] = field(default_factory=list)

    @property
    def num_classes(self) -> int:
        return len(self.classes)

    def by_split(self, split: str) -> list[ClipRecord]:
        return [c for c in self.clips if c.split == split]

    def by_class(self) -> dict[int, list[ClipRecord]]:
        groups: dict[int, list[ClipRecord]] = {i: [] for i in range(self.num_classes)}
        for clip in self.clips:
            groups.setdefault(clip.class_index, []).append(clip)
        return groups

    def without(self, clip_ids: set[str]) -> "DatasetManifest":
        """Return a copy with the given clips removed (the excluded-clip protocol)."""
        return DatasetManifest(
            classes=list(self.classes),
            clips=[c for c in self.clips if c.id not in clip_ids],
        )

    def with_splits(self, assignment: dict[str, str]) -> "DatasetManifest":
        return DatasetManifest(
            classes=list(self.classes),
            clips=[replace(c, split=assignment.get(c.id, c.split)) for c in self.clips],
        )

    def to_dict(self) -> dict[str, Any]:
        return {"classes": list(self.classes), "clips": [c.to_dict() for c in self.clips]}

    def digest(self) -> str:
        """SHA-256 over the class list and clip identities; split assignments are ignored."""
        content = {
            "classes": list(self.classes),
            "clips": sorted((c.id, c.class_name, c.class_index) for c in self.clips),
        }
        return hashlib.sha256(json.dumps(content, sort_keys=True).encode("utf-8")).hexdigest()

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "DatasetManifest":
        clips = [ClipRecord.from_dict(item) for item in data.get("clips", [])]
        classes = list(data.get("classes") or [])
        if not classes:
            names = {c.class_index: c.class_name for c in clips}
            classes = [names[i] for i in sorted(names)]
        for clip in clips:
            if not 0 <= clip.class_index < len(classes):
                raise ValueError(
                    f"Clip '{clip.id}' has class_index {clip.class_index} "
                    f"outside [0, {len(classes)})"
                )
        return cls(classes=classes, clips=clips)

    @classmethod
    def load(cls, path: Path | str) -> "DatasetManifest":
        manifest_path = Path(path)
        if manifest_path.is_dir():
            manifest_path = manifest_path / MANIFEST_FILENAME
        with open(manifest_path, encoding="utf-8") as f:
            return cls.from_dict(json.load(f))

    def save(self, path: Path | str, extra: dict[str, Any] | None = None) -> Path:
        """Write the manifest JSON; `extra` keys are stored alongside and ignored on load."""
        manifest_path = Path(path)
        if manifest_path.is_dir():
            manifest_path = manifest_path / MANIFEST_FILENAME
        data = {**self.to_dict(), **(extra or {})}
        payload = json.dumps(data, indent=2, sort_keys=False).encode("utf-8")
        atomic_write(manifest_path, lambda f: f.write(payload + b"\n"))
        logger.debug(f"Wrote manifest with {len(self.clips)} clips to {manifest_path}")
        return manifest_path


def scan_layout(root: Path | str) -> DatasetManifest:
    """
    Build a manifest by scanning <root>/<class_name>/<clip_id>/ directories.

    Class indices follow the sorted class-directory names; clips without any
    frame files are skipped.

    Args:
        root: Dataset root.

    Returns:
        A manifest with no split assignment.
    """
    root_path = Path(root)
    class_dirs = sorted(p for p in root_path.iterdir() if p.is_dir())
    classes = [p.name for p in class_dirs]
    clips: list[ClipRecord] = []
    for index, class_dir in enumerate(class_dirs):
        for clip_dir in sorted(p for p in class_dir.iterdir() if p.is_dir()):
            if not list_frame_files(clip_dir):
                logger.debug(f"Skipping {clip_dir}: no frame files")
                continue
            clips.append(ClipRecord(id=clip_dir.name, class_name=class_dir.name, class_index=index))
    logger.info(f"Scanned {root_path}: {len(clips)} clips in {len(classes)} classes")
    return DatasetManifest(classes=classes, clips=clips)
