"""Binary classification metrics; the positive class (+1) is dementia."""

from __future__ import annotations

from dataclasses import asdict, dataclass, field

import numpy as np


@dataclass(frozen=True)
class ConfusionCounts:
    tp: int
    fp: int
    fn: int
    tn: int

    def __post_init__(self):
        if min(self.tp, self.fp, self.fn, self.tn) < 0:
            raise ValueError("confusion counts must be non-negative")

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.fn + self.tn


@dataclass(frozen=True)
class MetricsRecord:
    accuracy: float
    precision: float
    recall: float
    f1: float
    # names of metrics whose denominator was zero and were reported as 0
    degenerate: tuple = ()
    model: str = ""
    k: int = 0
    shots: int = 0
    seed: int = 0
    counts: ConfusionCounts | None = field(default=None, compare=False)

    def as_dict(self) -> dict:
        d = asdict(self)
        d["degenerate"] = list(self.degenerate)
        return d


def confusion(predictions, labels) -> ConfusionCounts:
    pred = np.asarray(predictions).reshape(-1)
    true = np.asarray(labels).reshape(-1)
    if pred.shape != true.shape:
        raise ValueError(f"{pred.size} predictions but {true.size} labels")
    if pred.size == 0:
        raise ValueError("need at least one prediction")
    for name, arr in (("predictions", pred), ("labels", true)):
        if not np.all(np.isin(arr, (-1, 1))):
            raise ValueError(f"{name} must be +1 or -1")
    pos_pred, pos_true = pred == 1, true == 1
    return ConfusionCounts(
        tp=int(np.sum(pos_pred & pos_true)),
        fp=int(np.sum(pos_pred & ~pos_true)),
        fn=int(np.sum(~pos_pred & pos_true)),
        tn=int(np.sum(~pos_pred & ~pos_true)),
    )


def compute_metrics(counts: ConfusionCounts, **tags) -> MetricsRecord:
    """Accuracy, precision, recall and F1; zero denominators give 0 and a flag."""
    if counts.total <= 0:
        raise ValueError("cannot compute metrics on zero samples")
    degenerate = []

    def ratio(num, den, name):
        if den == 0:
            degenerate.append(name)
            return 0.0
        return num / den

    precision = ratio(counts.tp, counts.tp + counts.fp, "precision")
    recall = ratio(counts.tp, counts.tp + counts.fn, "recall")
    f1 = ratio(2 * precision * recall, precision + recall, "f1")
    accuracy = (counts.tp + counts.tn) / counts.total
    return MetricsRecord(accuracy, precision, recall, f1, tuple(degenerate), counts=counts, **tags)


def evaluate(predictions, labels, **tags) -> MetricsRecord:
    return compute_metrics(confusion(predictions, labels), **tags)
