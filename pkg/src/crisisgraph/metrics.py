"""Confusion matrix and support-weighted precision / recall / F1."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass
class MetricsReport:
    precision: np.ndarray          # per class
    recall: np.ndarray
    f1: np.ndarray
    support: np.ndarray
    confusion: np.ndarray          # rows = truth, cols = prediction
    weighted_precision: float
    weighted_recall: float
    weighted_f1: float

    @property
    def accuracy(self) -> float:
        return float(np.trace(self.confusion) / self.confusion.sum())

    def summary(self) -> str:
        return (f"weighted_p={self.weighted_precision:.4f} "
                f"weighted_r={self.weighted_recall:.4f} "
                f"weighted_f1={self.weighted_f1:.4f}")


def confusion_matrix(truth, pred, K: int) -> np.ndarray:
    cm = np.zeros((K, K), dtype=np.int64)
    np.add.at(cm, (np.asarray(truth), np.asarray(pred)), 1)
    return cm


def _safe_div(num, den):
    num = np.asarray(num, dtype=np.float64)
    den = np.asarray(den, dtype=np.float64)
    out = np.zeros_like(num)
    np.divide(num, den, out=out, where=den > 0)
    return out


def report(truth, pred, K: int) -> MetricsReport:
    truth = np.asarray(truth)
    if truth.size == 0:
        raise ValueError("cannot score an empty prediction set")
    cm = confusion_matrix(truth, pred, K)
    tp = np.diag(cm)
    support = cm.sum(axis=1)
    precision = _safe_div(tp, cm.sum(axis=0))
    recall = _safe_div(tp, support)
    f1 = _safe_div(2 * precision * recall, precision + recall)
    w = support / support.sum()
    return MetricsReport(precision, recall, f1, support, cm,
                         float(w @ precision), float(w @ recall), float(w @ f1))
