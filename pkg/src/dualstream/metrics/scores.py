"""
Classification metrics over per-sample score matrices.

Ties in argmax and top-K ranking go to the lower class index.
"""

from collections.abc import Iterable, Sequence
from dataclasses import dataclass
from typing import Any

import numpy as np
from sklearn.metrics import confusion_matrix, f1_score

from dualstream.core.utils import DualStreamError

DEFAULT_TOP_K = (1, 2, 3, 5)


class KOutOfRange(DualStreamError):
    """Raised when a top-K request asks for K outside 1..C."""

    pass


def _check_scores(scores: np.ndarray, labels: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    scores = np.asarray(scores)
    labels = np.asarray(labels, dtype=np.int64)
    if scores.ndim != 2:
        raise ValueError(f"Expected a (N, C) score matrix, got shape {scores.shape}")
    if labels.shape != (scores.shape[0],):
        raise ValueError(f"Expected {scores.shape[0]} labels, got shape {labels.shape}")
    return scores, labels


def _check_pair(predictions: np.ndarray, labels: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    predictions = np.asarray(predictions)
    labels = np.asarray(labels)
    if predictions.shape != labels.shape:
        raise ValueError(
            f"predictions {predictions.shape} and labels {labels.shape} differ in shape"
        )
    return predictions, labels


def ranked_classes(scores: np.ndarray) -> np.ndarray:
    """Class indices per sample, highest score first, lower index first on ties."""
    return np.argsort(-np.asarray(scores), axis=1, kind="stable")


def predictions_from_scores(scores: np.ndarray) -> np.ndarray:
    return np.asarray(np.argmax(scores, axis=1), dtype=np.int64)


def top_k_accuracy(
    scores: np.ndarray, labels: np.ndarray, ks: Iterable[int] = DEFAULT_TOP_K
) -> dict[int, float]:
    """
    Fraction of samples whose true class is among the K highest scores, per K.

    Args:
        scores: (N, C) score matrix.
        labels: N true class indices.
        ks: The K values.

    Returns:
        Map K -> accuracy.

    Raises:
        KOutOfRange: If any K is below 1 or above C.

    Example:
        >>> top_k_accuracy(np.array([[0.1, 0.9]]), np.array([0]), ks=(1, 2))
        {1: 0.0, 2: 1.0}
    """
    scores, labels = _check_scores(scores, labels)
    num_classes = scores.shape[1]
    ks = list(ks)
    for k in ks:
        if not 1 <= k <= num_classes:
            raise KOutOfRange(f"K={k} is outside 1..{num_classes}")
    if scores.shape[0] == 0:
        return {k: 0.0 for k in ks}
    ranks = ranked_classes(scores)
    position = np.argmax(ranks == labels[:, None], axis=1)
    return {k: float(np.mean(position < k)) for k in ks}


def top_k_report(
    scores: np.ndarray, labels: np.ndarray, ks: Sequence[int] = DEFAULT_TOP_K
) -> dict[int, float]:
    """Like top_k_accuracy, but K > C is reported as 1.0 instead of raising."""
    scores, labels = _check_scores(scores, labels)
    num_classes = scores.shape[1]
    result = top_k_accuracy(scores, labels, [k for k in ks if k <= num_classes])
    for k in ks:
        if k > num_classes:
            result[k] = 1.0
    return {k: result[k] for k in ks}


def accuracy(predictions: np.ndarray, labels: np.ndarray) -> float:
    predictions, labels = _check_pair(predictions, labels)
    return float(np.mean(predictions == labels)) if labels.size else 0.0


def macro_f1(predictions: np.ndarray, labels: np.ndarray, num_classes: int) -> float:
    """
    Unweighted mean of per-class F1 over all C classes.

    A class with no true and no predicted samples contributes 0 and still
    counts in the mean.
    """
    predictions, labels = _check_pair(predictions, labels)
    if labels.size == 0:
        return 0.0
    return float(
        f1_score(
            labels,
            predictions,
            labels=list(range(num_classes)),
            average="macro",
            zero_division=0,
        )
    )


@dataclass
class ConfusionMatrix:
    """Counts with rows = true class and columns = predicted class."""

    counts: np.ndarray

    @property
    def num_classes(self) -> int:
        return int(self.counts.shape[0])

    @property
    def total(self) -> int:
        return int(self.counts.sum())

    @property
    def normalized(self) -> np.ndarray:
        """Row-normalised view; rows of absent classes stay all-zero."""
        rows = self.counts.sum(axis=1, keepdims=True).astype(np.float64)
        out = np.zeros(self.counts.shape, dtype=np.float64)
        return np.divide(self.counts, rows, out=out, where=rows > 0)

    @property
    def accuracy(self) -> float:
        return float(np.trace(self.counts) / self.total) if self.total else 0.0

    def to_dict(self) -> dict[str, Any]:
        return {"counts": self.counts.astype(int).tolist()}

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "ConfusionMatrix":
        return cls(counts=np.asarray(data["counts"], dtype=np.int64))

    def __eq__(self, other: object) -> bool:
        return isinstance(other, ConfusionMatrix) and np.array_equal(self.counts, other.counts)


def confusion(predictions: np.ndarray, labels: np.ndarray, num_classes: int) -> ConfusionMatrix:
    predictions, labels = _check_pair(predictions, labels)
    if labels.size == 0:
        return ConfusionMatrix(np.zeros((num_classes, num_classes), dtype=np.int64))
    counts = confusion_matrix(labels, predictions, labels=list(range(num_classes)))
    return ConfusionMatrix(counts.astype(np.int64))
