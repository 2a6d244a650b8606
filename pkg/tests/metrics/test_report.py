"""Tests for run and suite reports."""

import csv
import io

import numpy as np
import pytest

from dualstream.metrics import (
    BEST_MARK,
    ReportError,
    RunReport,
    SuiteReport,
    cross_dataset_rows,
    emit_report,
    emit_suite,
    evaluate_scores,
    load_report,
    load_scores,
    load_suite_report,
    table_csv,
    write_cross_dataset_table,
)


def make_report(config_id: str, correct: int, weights=None, seed: int = 0) -> RunReport:
    """Six test samples over three classes with the first `correct` predicted right."""
    labels = np.array([0, 1, 2, 0, 1, 2])
    scores = np.full((6, 3), 0.1, dtype=np.float32)
    for i, label in enumerate(labels):
        predicted = label if i < correct else (label + 1) % 3
        scores[i, predicted] = 0.8
    return evaluate_scores(
        config_id,
        scores,
        labels,
        3,
        val_accuracy=0.5 + 0.05 * seed,
        weights=weights,
        epochs_run=4,
        early_stopped=True,
        best_epoch=2,
        history=[
            {"epoch": e, "train_loss": 1.0 / e, "train_acc": 0.5, "val_acc": 0.5, "lr": 1e-4}
            for e in (1, 2)
        ],
        class_names=["a", "b", "c"],
    )


class TestRunReport:
    """Tests for RunReport."""

    def test_evaluate_scores(self):
        """Test the metrics computed from a score dump."""
        report = make_report("concat", correct=4)
        assert report.test_accuracy == pytest.approx(4 / 6)
        assert report.top_k[1] == report.test_accuracy
        assert report.top_k[5] == 1.0
        assert report.confusion.total == 6

    def test_json_round_trip(self, tmp_path):
        """Test that JSON reads back to an identical report."""
        report = make_report("weighted", correct=5, weights=(0.6, 0.4))
        emit_report(report, tmp_path, formats=("json",))
        assert load_report(tmp_path / "report.json") == report

    def test_json_deterministic(self):
        """Test that equal reports serialise to identical text."""
        assert make_report("late", 3).to_json() == make_report("late", 3).to_json()

    def test_malformed(self, tmp_path):
        """Test that a report missing fields raises ReportError."""
        path = tmp_path / "report.json"
        path.write_text('{"config_id": "x"}')
        with pytest.raises(ReportError):
            load_report(path)

    def test_emit_all_formats(self, tmp_path):
        """Test report files, the score dump and the heatmap cells."""
        report = make_report("gated", correct=6)
        scores = np.eye(3, dtype=np.float32)[[0, 1, 2]]
        written = emit_report(report, tmp_path, scores=(scores, np.arange(3)))
        names = {p.name for p in written}
        expected = {
            "report.json",
            "report.csv",
            "confusion.svg",
            "curves.svg",
            "scores.npy",
            "labels.npy",
        }
        assert expected <= names
        svg = (tmp_path / "confusion.svg").read_text()
        assert svg.count('id="cell-') == 9
        loaded_scores, loaded_labels = load_scores(tmp_path)
        np.testing.assert_array_equal(loaded_scores, scores)
        assert loaded_labels.dtype == np.int64

    def test_svg_reproducible(self, tmp_path):
        """Test that identical reports give byte-identical figures."""
        report = make_report("gated", correct=3)
        emit_report(report, tmp_path / "a", formats=("svg",))
        emit_report(report, tmp_path / "b", formats=("svg",))
        first = (tmp_path / "a" / "confusion.svg").read_bytes()
        assert first == (tmp_path / "b" / "confusion.svg").read_bytes()


class TestTables:
    """Tests for CSV tables."""

    def test_rows_and_best_marks(self):
        """Test one row per configuration, percentages and best-value marks."""
        reports = [
            make_report("rgb_only", 3),
            make_report("concat", 5, seed=1),
            make_report("weighted", 4, weights=(0.7, 0.3)),
        ]
        rows = list(csv.reader(io.StringIO(table_csv(reports))))
        assert len(rows) == 1 + len(reports)
        header = rows[0]
        assert header[:4] == ["config", "val_acc", "test_acc", "macro_f1"]
        by_config = {row[0]: dict(zip(header, row)) for row in rows[1:]}
        assert by_config["concat"]["test_acc"] == "83.33" + BEST_MARK
        assert by_config["rgb_only"]["test_acc"] == "50.00"
        assert by_config["weighted"]["alpha_rgb"] == "0.7000"
        assert by_config["rgb_only"]["alpha_rgb"] == ""
        assert by_config["concat"]["early_stopped"] == "true"


class TestSuiteReport:
    """Tests for suites and cross-dataset tables."""

    def suite(self, name: str, offset: int = 0) -> SuiteReport:
        return SuiteReport(
            dataset=name,
            runs=[
                make_report("rgb_only", 2 + offset),
                make_report("weighted", 4 + offset, weights=(0.55, 0.45)),
            ],
            class_names=["a", "b", "c"],
        )

    def test_emit_and_load(self, tmp_path):
        """Test suite files and the JSON round trip."""
        suite = self.suite("mixed")
        written = {p.name for p in emit_suite(suite, tmp_path)}
        assert {"report.json", "report.csv", "curves.svg", "topk.svg"} <= written
        assert load_suite_report(tmp_path) == suite

    def test_cross_dataset(self, tmp_path):
        """Test accuracy columns per dataset and the alpha rows."""
        suites = [self.suite("motion"), self.suite("appearance", offset=1)]
        rows = cross_dataset_rows(suites)
        assert rows[0] == ["config", "motion", "appearance"]
        assert rows[1] == ["rgb_only", "33.33", "50.00"]
        assert rows[-2] == ["weighted alpha_rgb", "0.5500", "0.5500"]
        path = write_cross_dataset_table(suites, tmp_path / "comparison.csv")
        assert path.read_text().splitlines()[0] == "config,motion,appearance"

    def test_missing_suite(self, tmp_path):
        """Test that a missing suite report raises ReportError."""
        with pytest.raises(ReportError):
            load_suite_report(tmp_path)
