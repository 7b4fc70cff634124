"""Binary classification metrics derived exactly from confusion counts."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import EvalError
from .models import predict_labels


@dataclass(frozen=True)
class Metrics:
    tp: int
    fp: int
    fn: int
    tn: int

    @property
    def n(self) -> int:
        return self.tp + self.fp + self.fn + self.tn

    @property
    def accuracy(self) -> float:
        return (self.tp + self.tn) / self.n

    @property
    def precision(self) -> float:
        d = self.tp + self.fp
        return self.tp / d if d else 0.0

    @property
    def recall(self) -> float:
        d = self.tp + self.fn
        return self.tp / d if d else 0.0

    @property
    def f1(self) -> float:
        p, r = self.precision, self.recall
        return 2.0 * p * r / (p + r) if p + r > 0 else 0.0

    @classmethod
    def from_predictions(cls, y_true, y_pred) -> "Metrics":
        y_true = np.asarray(y_true).astype(np.int64)
        y_pred = np.asarray(y_pred).astype(np.int64)
        if len(y_true) == 0:
            raise EvalError("cannot evaluate on an empty label vector")
        if len(y_true) != len(y_pred):
            raise EvalError(f"length mismatch: {len(y_true)} labels vs {len(y_pred)} predictions")
        tp = int(np.sum((y_true == 1) & (y_pred == 1)))
        fp = int(np.sum((y_true == 0) & (y_pred == 1)))
        fn = int(np.sum((y_true == 1) & (y_pred == 0)))
        tn = int(np.sum((y_true == 0) & (y_pred == 0)))
        return cls(tp=tp, fp=fp, fn=fn, tn=tn)

    def to_dict(self) -> dict:
        return {
            "tp": self.tp, "fp": self.fp, "fn": self.fn, "tn": self.tn,
            "accuracy": self.accuracy, "precision": self.precision,
            "recall": self.recall, "f1": self.f1,
        }


def evaluate(model, X, y) -> Metrics:
    """Threshold P(positive) at 0.5 and tabulate the confusion matrix."""
    if len(np.asarray(y)) == 0:
        raise EvalError("cannot evaluate on an empty label vector")
    return Metrics.from_predictions(y, predict_labels(model, X))
