"""Model averaging and the evaluation metrics suite.

Member probability vectors are combined by an unweighted elementwise mean and
decided by argmax (lowest index on ties). Evaluation reports carry the
confusion matrix (rows = gold, columns = predicted), per-class precision /
recall / F1, accuracy, and the support-weighted macro F1. All functions are
pure and parallel-safe.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import ShapeMismatchError


def average_probabilities(members: Sequence[np.ndarray]) -> np.ndarray:
    """Unweighted elementwise mean of member probability vectors."""
    if not 1 <= len(members) <= 3:
        raise ValueError(f"expected 1..3 member vectors, got {len(members)}")
    first = np.asarray(members[0], dtype=np.float64)
    stacked = []
    for m in members:
        m = np.asarray(m, dtype=np.float64)
        if m.shape != first.shape:
            raise ShapeMismatchError(
                f"member vector shapes disagree: {m.shape} vs {first.shape}"
            )
        stacked.append(m)
    return np.mean(stacked, axis=0)


def predict_label(probs: np.ndarray) -> int:
    """Argmax with the lowest class index winning exact ties."""
    return int(np.argmax(probs))


def confusion_matrix(gold: Sequence[int], predicted: Sequence[int], K: int) -> np.ndarray:
    """[K, K] counts; entry (g, p) is documents with gold g predicted p."""
    if len(gold) != len(predicted):
        raise ShapeMismatchError(
            f"{len(gold)} gold labels vs {len(predicted)} predictions"
        )
    matrix = np.zeros((K, K), dtype=np.int64)
    for g, p in zip(gold, predicted):
        if not (0 <= g < K and 0 <= p < K):
            raise ValueError(f"label pair ({g}, {p}) outside 0..{K - 1}")
        matrix[g, p] += 1
    return matrix


def _per_class_prf(matrix: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    K = matrix.shape[0]
    precision = np.zeros(K)
    recall = np.zeros(K)
    f1 = np.zeros(K)
    for c in range(K):
        tp = matrix[c, c]
        predicted_c = matrix[:, c].sum()
        gold_c = matrix[c, :].sum()
        precision[c] = tp / predicted_c if predicted_c else 0.0
        recall[c] = tp / gold_c if gold_c else 0.0
        denom = precision[c] + recall[c]
        f1[c] = 2 * precision[c] * recall[c] / denom if denom else 0.0
    return precision, recall, f1


def weighted_f1(gold: Sequence[int], predicted: Sequence[int], K: int) -> float:
    """Support-weighted macro F1: Σ_c (support_c / N) · F1_c."""
    if len(gold) == 0:
        raise ValueError("cannot score an empty evaluation set")
    matrix = confusion_matrix(gold, predicted, K)
    _, _, f1 = _per_class_prf(matrix)
    support = matrix.sum(axis=1)
    return float((support / support.sum()) @ f1)


@dataclass(frozen=True)
class EvaluationReport:
    class_names: tuple[str, ...]
    confusion: np.ndarray
    precision: np.ndarray
    recall: np.ndarray
    f1: np.ndarray
    support: np.ndarray
    accuracy: float
    weighted_f1: float

    def to_json(self) -> dict:
        return {
            "class_names": list(self.class_names),
            "confusion_matrix": self.confusion.tolist(),
            "per_class": {
                name: {
                    "precision": float(self.precision[c]),
                    "recall": float(self.recall[c]),
                    "f1": float(self.f1[c]),
                    "support": int(self.support[c]),
                }
                for c, name in enumerate(self.class_names)
            },
            "accuracy": self.accuracy,
            "weighted_f1": self.weighted_f1,
        }

    def write_json(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.to_json(), fh, indent=2, sort_keys=True)
            fh.write("\n")

    def write_confusion_csv(self, path) -> None:
        """gold-by-predicted counts with labeled header row/column."""
        with open(path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(["gold\\predicted", *self.class_names])
            for c, name in enumerate(self.class_names):
                writer.writerow([name, *self.confusion[c].tolist()])


def build_report(
    gold: Sequence[int], predicted: Sequence[int], class_names: Sequence[str]
) -> EvaluationReport:
    if len(gold) == 0:
        raise ValueError("cannot score an empty evaluation set")
    K = len(class_names)
    matrix = confusion_matrix(gold, predicted, K)
    precision, recall, f1 = _per_class_prf(matrix)
    support = matrix.sum(axis=1)
    return EvaluationReport(
        class_names=tuple(class_names),
        confusion=matrix,
        precision=precision,
        recall=recall,
        f1=f1,
        support=support,
        accuracy=float(np.trace(matrix) / matrix.sum()),
        weighted_f1=float((support / support.sum()) @ f1),
    )
