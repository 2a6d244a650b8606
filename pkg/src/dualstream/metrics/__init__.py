"""
Metrics package - Evaluation metrics and report emission.

This package provides:
- top_k_accuracy / macro_f1 / confusion: Metrics over per-sample score dumps
- RunReport / SuiteReport: JSON-faithful reports of one run and of a suite
- emit_report / emit_suite: JSON, CSV and SVG outputs
- write_cross_dataset_table: Side-by-side comparison of several suites
"""

from .plots import plot_confusion, plot_curves, plot_top_k
from .report import (
    BEST_MARK,
    REPORT_FILENAME,
    TABLE_FILENAME,
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
    save_report,
    save_scores,
    table_csv,
    table_rows,
    write_cross_dataset_table,
)
from .scores import (
    DEFAULT_TOP_K,
    ConfusionMatrix,
    KOutOfRange,
    accuracy,
    confusion,
    macro_f1,
    predictions_from_scores,
    ranked_classes,
    top_k_accuracy,
    top_k_report,
)

__all__ = [
    "DEFAULT_TOP_K",
    "KOutOfRange",
    "ConfusionMatrix",
    "accuracy",
    "confusion",
    "macro_f1",
    "predictions_from_scores",
    "ranked_classes",
    "top_k_accuracy",
    "top_k_report",
    "ReportError",
    "RunReport",
    "SuiteReport",
    "BEST_MARK",
    "REPORT_FILENAME",
    "TABLE_FILENAME",
    "evaluate_scores",
    "emit_report",
    "emit_suite",
    "save_report",
    "load_report",
    "save_scores",
    "load_scores",
    "load_suite_report",
    "table_rows",
    "table_csv",
    "cross_dataset_rows",
    "write_cross_dataset_table",
    "plot_confusion",
    "plot_curves",
    "plot_top_k",
]
