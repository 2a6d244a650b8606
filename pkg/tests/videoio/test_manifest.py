"""Tests for dataset manifests."""

import numpy as np
import pytest

from dualstream.videoio import MANIFEST_FILENAME, ClipRecord, DatasetManifest, scan_layout
from tests.conftest import write_clip


def frames(count: int = 2) -> list[np.ndarray]:
    return [np.full((8, 8, 3), i * 10, dtype=np.uint8) for i in range(count)]


class TestClipRecord:
    """Tests for ClipRecord parsing."""

    def test_from_dict(self):
        """Test parsing a manifest entry."""
        record = ClipRecord.from_dict(
            {"id": "v1", "class_name": "jump", "class_index": 2, "split": "val"}
        )
        assert record == ClipRecord("v1", "jump", 2, "val")

    def test_missing_field(self):
        """Test that missing fields are reported by name."""
        with pytest.raises(ValueError, match="class_index"):
            ClipRecord.from_dict({"id": "v1", "class_name": "jump"})

    def test_unknown_split(self):
        """Test that only train/val/test are accepted."""
        with pytest.raises(ValueError, match="unknown split"):
            ClipRecord.from_dict({"id": "v1", "class_name": "a", "class_index": 0, "split": "dev"})


class TestDatasetManifest:
    """Tests for DatasetManifest."""

    def make(self) -> DatasetManifest:
        return DatasetManifest(
            classes=["a", "b"],
            clips=[
                ClipRecord("a1", "a", 0, "train"),
                ClipRecord("a2", "a", 0, "test"),
                ClipRecord("b1", "b", 1, "train"),
            ],
        )

    def test_save_and_load(self, tmp_path):
        """Test that a saved manifest loads back equal from its directory."""
        manifest = self.make()
        path = manifest.save(tmp_path)
        assert path.name == MANIFEST_FILENAME
        assert DatasetManifest.load(tmp_path) == manifest

    def test_grouping(self):
        """Test split and class grouping."""
        manifest = self.make()
        assert [c.id for c in manifest.by_split("train")] == ["a1", "b1"]
        assert {k: len(v) for k, v in manifest.by_class().items()} == {0: 2, 1: 1}
        assert manifest.num_classes == 2

    def test_without_and_with_splits(self):
        """Test removing excluded clips and assigning splits."""
        manifest = self.make().without({"a2"}).with_splits({"b1": "val"})
        assert [c.id for c in manifest.clips] == ["a1", "b1"]
        assert manifest.clips[1].split == "val"
        assert manifest.classes == ["a", "b"]

    def test_classes_inferred(self):
        """Test that the class list is rebuilt from the clips when absent."""
        manifest = DatasetManifest.from_dict(
            {"clips": [{"id": "x", "class_name": "run", "class_index": 1},
                       {"id": "y", "class_name": "walk", "class_index": 0}]}
        )
        assert manifest.classes == ["walk", "run"]

    def test_class_index_out_of_range(self):
        """Test that class indices must fall inside the class list."""
        with pytest.raises(ValueError, match="outside"):
            DatasetManifest.from_dict(
                {"classes": ["a"], "clips": [{"id": "x", "class_name": "a", "class_index": 1}]}
            )


class TestScanLayout:
    """Tests for scan_layout."""

    def test_sorted_classes_and_clips(self, tmp_path):
        """Test that classes follow sorted directory names and empty clips are skipped."""
        write_clip(tmp_path / "walk" / "w2", frames())
        write_clip(tmp_path / "walk" / "w1", frames())
        write_clip(tmp_path / "jump" / "j1", frames())
        (tmp_path / "jump" / "empty").mkdir()
        manifest = scan_layout(tmp_path)
        assert manifest.classes == ["jump", "walk"]
        assert [(c.id, c.class_index) for c in manifest.clips] == [("j1", 0), ("w1", 1), ("w2", 1)]
        assert all(c.split is None for c in manifest.clips)
