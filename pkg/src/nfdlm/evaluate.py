"""Classification metrics, confusion matrices, and phase timing."""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Callable, TypeVar

import numpy as np

from .errors import DataError

T = TypeVar("T")


@dataclass
class ConfusionMatrix:
    tp: int
    fp: int
    tn: int
    fn: int

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.tn + self.fn


@dataclass
class Metrics:
    accuracy: float
    precision: float
    recall: float
    f1: float
    train_seconds: float = 0.0
    mean_epoch_seconds: float = 0.0

    def to_dict(self) -> dict:
        return {
            "accuracy": self.accuracy,
            "precision": self.precision,
            "recall": self.recall,
            "f1": self.f1,
            "train_seconds": self.train_seconds,
            "mean_epoch_seconds": self.mean_epoch_seconds,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Metrics":
        return cls(**d)


def confusion(pred: np.ndarray, truth: np.ndarray) -> ConfusionMatrix:
    """Tally counts with attack (1) as the positive class."""
    p = np.asarray(pred, dtype=np.int64)
    t = np.asarray(truth, dtype=np.int64)
    if p.shape != t.shape or p.ndim != 1:
        raise DataError(f"length mismatch: {p.shape} vs {t.shape}")
    return ConfusionMatrix(
        tp=int(((p == 1) & (t == 1)).sum()),
        fp=int(((p == 1) & (t == 0)).sum()),
        tn=int(((p == 0) & (t == 0)).sum()),
        fn=int(((p == 0) & (t == 1)).sum()),
    )


def metrics(
    cm: ConfusionMatrix, train_seconds: float = 0.0, mean_epoch_seconds: float = 0.0
) -> Metrics:
    """Accuracy, precision, recall, and F1 from a confusion matrix.

    Zero-denominator cases yield 0 (not NaN) so reports always serialize.
    """
    n = cm.total
    if n == 0:
        raise DataError("metrics need at least one evaluated row")
    precision = cm.tp / (cm.tp + cm.fp) if (cm.tp + cm.fp) else 0.0
    recall = cm.tp / (cm.tp + cm.fn) if (cm.tp + cm.fn) else 0.0
    f1 = 2 * precision * recall / (precision + recall) if (precision + recall) else 0.0
    return Metrics(
        accuracy=(cm.tp + cm.tn) / n,
        precision=precision,
        recall=recall,
        f1=f1,
        train_seconds=train_seconds,
        mean_epoch_seconds=mean_epoch_seconds,
    )


def time_phase(label: str, thunk: Callable[[], T]) -> tuple[T, float]:
    """Run a thunk and return (result, wall seconds on the monotonic clock)."""
    started = time.perf_counter()
    result = thunk()
    return result, time.perf_counter() - started


@dataclass
class PhaseTimer:
    """Collects labeled wall times; not reentrant for the same label."""

    seconds: dict[str, float] = field(default_factory=dict)

    def run(self, label: str, thunk: Callable[[], T]) -> T:
        result, elapsed = time_phase(label, thunk)
        self.seconds[label] = elapsed
        return result
