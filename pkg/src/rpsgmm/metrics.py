"""Confusion matrix and support-weighted precision / recall / F1."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .classifier import ClassifierBundle, classify
from .data import Dataset
from .errors import DomainError


def confusion_matrix(y_true, y_pred, labels):
    """Counts indexed by (true label, predicted label) in ``labels`` order."""
    index = {lab: i for i, lab in enumerate(labels)}
    cm = np.zeros((len(labels), len(labels)), dtype=np.int64)
    for t, p in zip(y_true, y_pred, strict=True):
        if t not in index or p not in index:
            raise DomainError(f"label {t if t not in index else p!r} not in {list(labels)}")
        cm[index[t], index[p]] += 1
    return cm


def _safe_div(num, den):
    num = np.asarray(num, dtype=float)
    den = np.asarray(den, dtype=float)
    return np.divide(num, den, out=np.zeros_like(num), where=den > 0)


@dataclass(frozen=True, eq=False)
class EvalReport:
    labels: tuple[str, ...]
    confusion: np.ndarray
    accuracy: float
    precision: dict
    recall: dict
    f1: dict
    support: dict
    weighted_precision: float
    weighted_recall: float
    weighted_f1: float
    predictions: list = field(default_factory=list)

    @property
    def total(self):
        return int(self.confusion.sum())

    def to_dict(self):
        return {
            "labels": list(self.labels),
            "n_series": self.total,
            "confusion": self.confusion.tolist(),
            "accuracy": self.accuracy,
            "precision": self.precision,
            "recall": self.recall,
            "f1": self.f1,
            "support": self.support,
            "weighted": {
                "precision": self.weighted_precision,
                "recall": self.weighted_recall,
                "f1": self.weighted_f1,
            },
        }


def report_from_confusion(confusion, labels, predictions=None) -> EvalReport:
    """Derive every metric from a confusion matrix.

    Classes with no predictions get precision 0; classes with no true
    members get recall 0 and carry zero weight in the weighted averages.
    """
    cm = np.asarray(confusion, dtype=np.int64)
    total = cm.sum()
    if total == 0:
        raise DomainError("empty confusion matrix")
    tp = np.diag(cm).astype(float)
    support = cm.sum(axis=1)
    predicted = cm.sum(axis=0)
    precision = _safe_div(tp, predicted)
    recall = _safe_div(tp, support)
    f1 = _safe_div(2 * precision * recall, precision + recall)
    w = support / total
    labels = tuple(labels)
    return EvalReport(
        labels=labels,
        confusion=cm,
        accuracy=float(tp.sum() / total),
        precision=dict(zip(labels, precision.tolist())),
        recall=dict(zip(labels, recall.tolist())),
        f1=dict(zip(labels, f1.tolist())),
        support=dict(zip(labels, support.tolist())),
        weighted_precision=float(w @ precision),
        weighted_recall=float(w @ recall),
        weighted_f1=float(w @ f1),
        predictions=list(predictions or []),
    )


def evaluate(bundle: ClassifierBundle, data: Dataset) -> EvalReport:
    """Classify every series of a labelled dataset and score the predictions."""
    unlabeled = [s.id for s in data if s.label is None]
    if unlabeled:
        raise DomainError(f"cannot evaluate unlabeled series: {unlabeled[:5]}")
    unknown = sorted({s.label for s in data} - set(bundle.class_order))
    if unknown:
        raise DomainError(f"labels {unknown} have no model in the bundle")
    preds = []
    for s in data:
        label, _ = classify(s, bundle)
        preds.append((s.id, s.label, label))
    cm = confusion_matrix([p[1] for p in preds], [p[2] for p in preds], bundle.class_order)
    return report_from_confusion(cm, bundle.class_order, preds)
