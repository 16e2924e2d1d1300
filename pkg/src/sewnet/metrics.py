"""Evaluation metrics over a confusion matrix.

All arithmetic is plain Python floats over integer counts, in class-index
order, so results are bit-for-bit reproducible and independently
recomputable: balanced accuracy is the unweighted mean of per-class
recalls (classes with no true samples are excluded), weighted F1 is the
support-weighted mean of per-class F1 scores.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import EmptyMatrix


def confusion_matrix(y_true, y_pred, num_classes: int) -> list[list[int]]:
    """Count matrix [num_classes][num_classes]; rows true, columns predicted."""
    matrix = [[0] * num_classes for _ in range(num_classes)]
    y_true = np.asarray(y_true).reshape(-1)
    y_pred = np.asarray(y_pred).reshape(-1)
    if y_true.shape != y_pred.shape:
        raise EmptyMatrix(f"length mismatch: {y_true.shape} vs {y_pred.shape}")
    for t, p in zip(y_true.tolist(), y_pred.tolist()):
        if not (0 <= t < num_classes and 0 <= p < num_classes):
            raise EmptyMatrix(f"label pair ({t}, {p}) outside [0, {num_classes})")
        matrix[t][p] += 1
    return matrix


def _as_counts(confusion) -> list[list[int]]:
    matrix = [[int(v) for v in row] for row in confusion]
    n = len(matrix)
    if n == 0 or any(len(row) != n for row in matrix):
        raise EmptyMatrix("confusion matrix must be square and non-empty")
    if any(v < 0 for row in matrix for v in row):
        raise EmptyMatrix("confusion matrix counts must be non-negative")
    if sum(v for row in matrix for v in row) == 0:
        raise EmptyMatrix("confusion matrix has no samples")
    return matrix


def balanced_accuracy(confusion) -> float:
    """Mean per-class recall over classes that actually occur."""
    matrix = _as_counts(confusion)
    total = 0.0
    seen = 0
    for c, row in enumerate(matrix):
        support = sum(row)
        if support == 0:
            continue
        total += row[c] / support
        seen += 1
    return total / seen


def weighted_f1(confusion) -> float:
    """Support-weighted mean of per-class F1 scores."""
    matrix = _as_counts(confusion)
    n = len(matrix)
    col_sums = [sum(matrix[r][c] for r in range(n)) for c in range(n)]
    total_support = 0
    acc = 0.0
    for c, row in enumerate(matrix):
        support = sum(row)
        total_support += support
        tp = row[c]
        precision = tp / col_sums[c] if col_sums[c] > 0 else 0.0
        recall = tp / support if support > 0 else 0.0
        f1 = 2.0 * precision * recall / (precision + recall) if precision + recall > 0 else 0.0
        acc += f1 * support
    return acc / total_support


def accuracy(confusion) -> float:
    matrix = _as_counts(confusion)
    correct = sum(matrix[c][c] for c in range(len(matrix)))
    total = sum(v for row in matrix for v in row)
    return correct / total


@dataclass(frozen=True)
class ClassReport:
    label: str
    precision: float
    recall: float
    f1: float
    support: int


@dataclass(frozen=True)
class EvalReport:
    balanced_accuracy: float
    weighted_f1: float
    accuracy: float
    per_class: list[ClassReport]
    confusion: list[list[int]]
    num_samples: int

    def to_dict(self) -> dict:
        return {
            "balanced_accuracy": self.balanced_accuracy,
            "weighted_f1": self.weighted_f1,
            "accuracy": self.accuracy,
            "num_samples": self.num_samples,
            "confusion": self.confusion,
            "per_class": [
                {
                    "label": c.label,
                    "precision": c.precision,
                    "recall": c.recall,
                    "f1": c.f1,
                    "support": c.support,
                }
                for c in self.per_class
            ],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "EvalReport":
        return cls(
            balanced_accuracy=data["balanced_accuracy"],
            weighted_f1=data["weighted_f1"],
            accuracy=data["accuracy"],
            per_class=[ClassReport(**c) for c in data["per_class"]],
            confusion=[list(row) for row in data["confusion"]],
            num_samples=data["num_samples"],
        )


def evaluate_predictions(y_true, y_pred, class_names: list[str]) -> EvalReport:
    """Full report from label vectors; class indexes follow class_names."""
    matrix = confusion_matrix(y_true, y_pred, len(class_names))
    n = len(matrix)
    col_sums = [sum(matrix[r][c] for r in range(n)) for c in range(n)]
    per_class = []
    for c, row in enumerate(matrix):
        support = sum(row)
        tp = row[c]
        precision = tp / col_sums[c] if col_sums[c] > 0 else 0.0
        recall = tp / support if support > 0 else 0.0
        f1 = 2.0 * precision * recall / (precision + recall) if precision + recall > 0 else 0.0
        per_class.append(ClassReport(class_names[c], precision, recall, f1, support))
    return EvalReport(
        balanced_accuracy=balanced_accuracy(matrix),
        weighted_f1=weighted_f1(matrix),
        accuracy=accuracy(matrix),
        per_class=per_class,
        confusion=matrix,
        num_samples=sum(sum(row) for row in matrix),
    )
