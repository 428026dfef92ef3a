"""Imbalance-aware evaluation: confusion matrices, weighted metrics, ROC/AUC.

Conventions, fixed package-wide:

* Confusion matrices are row = actual, column = predicted: the actual-negative
  row is (tn, fp), the actual-positive row is (fn, tp).
* Undefined metric cells (0/0, e.g. precision with no predicted positives)
  evaluate to 0.0 and the affected averaging is flagged as degenerate.
* "Weighted" averages weight each class's metric by its actual support, which
  makes weighted recall identical to accuracy.
* ROC curves sweep thresholds at every distinct score descending; tied scores
  form a single step. AUC is the trapezoidal area, accumulated in integer
  arithmetic so it equals the Mann-Whitney statistic (ties counted half)
  exactly.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import ValidationError

AVERAGINGS = ("per_class_0", "per_class_1", "weighted")


@dataclass(frozen=True)
class ConfusionMatrix:
    tn: int
    fp: int
    fn: int
    tp: int

    def __post_init__(self):
        for name in ("tn", "fp", "fn", "tp"):
            value = getattr(self, name)
            if not isinstance(value, int) or value < 0:
                raise ValidationError(f"{name} must be a non-negative integer, got {value!r}")

    @property
    def total(self) -> int:
        return self.tn + self.fp + self.fn + self.tp

    @property
    def support_negative(self) -> int:
        return self.tn + self.fp

    @property
    def support_positive(self) -> int:
        return self.fn + self.tp


@dataclass(frozen=True)
class MetricsRow:
    averaging: str
    accuracy: float
    precision: float
    recall: float
    f1: float
    degenerate_cells: tuple[str, ...] = ()


@dataclass(frozen=True)
class RocCurve:
    points: tuple[tuple[float, float], ...]  # (fpr, tpr) from (0,0) to (1,1)
    auc: float


@dataclass(frozen=True)
class EvaluationReport:
    confusion: ConfusionMatrix
    metrics: dict[str, MetricsRow]  # keyed by averaging
    roc: RocCurve
    threshold: float
    n_rows: int


def _as_binary(values, name: str) -> np.ndarray:
    arr = np.asarray(values)
    if arr.ndim != 1:
        raise ValidationError(f"{name} must be one-dimensional")
    if arr.size and not np.isin(arr, (0, 1)).all():
        raise ValidationError(f"{name} entries must be 0 or 1")
    return arr.astype(np.int64)


def confusion(y_true, y_pred) -> ConfusionMatrix:
    """Exact counts under the rows=actual convention."""
    t = _as_binary(y_true, "y_true")
    p = _as_binary(y_pred, "y_pred")
    if t.shape != p.shape:
        raise ValidationError(f"length mismatch: {t.shape[0]} true vs {p.shape[0]} predicted")
    if t.size == 0:
        raise ValidationError("need at least one sample")
    return ConfusionMatrix(
        tn=int(((t == 0) & (p == 0)).sum()),
        fp=int(((t == 0) & (p == 1)).sum()),
        fn=int(((t == 1) & (p == 0)).sum()),
        tp=int(((t == 1) & (p == 1)).sum()),
    )


def _safe_div(num: int, den: int, cell: str, degenerate: list[str]) -> float:
    if den == 0:
        degenerate.append(cell)
        return 0.0
    return num / den


def _class_metrics(cm: ConfusionMatrix, positive: int) -> tuple[float, float, float, list[str]]:
    if positive == 1:
        tp, fp, fn = cm.tp, cm.fp, cm.fn
    else:
        tp, fp, fn = cm.tn, cm.fn, cm.fp
    degenerate: list[str] = []
    precision = _safe_div(tp, tp + fp, f"precision_class_{positive}", degenerate)
    recall = _safe_div(tp, tp + fn, f"recall_class_{positive}", degenerate)
    if precision + recall > 0:
        f1 = 2.0 * precision * recall / (precision + recall)
    else:
        degenerate.append(f"f1_class_{positive}")
        f1 = 0.0
    return precision, recall, f1, degenerate


def per_class_metrics(cm: ConfusionMatrix, positive: int) -> MetricsRow:
    if cm.total < 1:
        raise ValidationError("confusion matrix is empty")
    precision, recall, f1, degenerate = _class_metrics(cm, positive)
    return MetricsRow(
        averaging=f"per_class_{positive}",
        accuracy=(cm.tn + cm.tp) / cm.total,
        precision=precision,
        recall=recall,
        f1=f1,
        degenerate_cells=tuple(degenerate),
    )


def weighted_metrics(cm: ConfusionMatrix) -> MetricsRow:
    """Support-weighted precision/recall/F1 plus plain accuracy."""
    if cm.total < 1:
        raise ValidationError("confusion matrix is empty")
    p0, r0, f0, deg0 = _class_metrics(cm, 0)
    p1, r1, f1c, deg1 = _class_metrics(cm, 1)
    s0, s1, total = cm.support_negative, cm.support_positive, cm.total
    return MetricsRow(
        averaging="weighted",
        accuracy=(cm.tn + cm.tp) / total,
        precision=(s0 * p0 + s1 * p1) / total,
        recall=(s0 * r0 + s1 * r1) / total,
        f1=(s0 * f0 + s1 * f1c) / total,
        degenerate_cells=tuple(deg0 + deg1),
    )


def metrics_rows(cm: ConfusionMatrix) -> dict[str, MetricsRow]:
    return {
        "per_class_0": per_class_metrics(cm, 0),
        "per_class_1": per_class_metrics(cm, 1),
        "weighted": weighted_metrics(cm),
    }


def roc(y_true, scores) -> RocCurve:
    t = _as_binary(y_true, "y_true")
    s = np.asarray(scores, dtype=np.float64)
    if t.shape != s.shape:
        raise ValidationError(f"length mismatch: {t.shape[0]} labels vs {s.shape[0]} scores")
    n_pos = int(t.sum())
    n_neg = int(t.size) - n_pos
    if n_pos == 0 or n_neg == 0:
        raise ValidationError("ROC needs at least one positive and one negative sample")

    order = np.argsort(-s, kind="mergesort")
    s_sorted = s[order]
    t_sorted = t[order]

    points: list[tuple[float, float]] = [(0.0, 0.0)]
    tp = fp = 0
    auc_twice = 0  # integer accumulator for 2 * AUC * n_pos * n_neg
    i = 0
    n = t_sorted.size
    while i < n:
        j = i
        while j < n and s_sorted[j] == s_sorted[i]:
            j += 1
        d_tp = int(t_sorted[i:j].sum())
        d_fp = (j - i) - d_tp
        auc_twice += d_fp * (2 * tp + d_tp)
        tp += d_tp
        fp += d_fp
        points.append((fp / n_neg, tp / n_pos))
        i = j
    return RocCurve(points=tuple(points), auc=auc_twice / (2 * n_pos * n_neg))


def evaluate(model, features: np.ndarray, labels, threshold: float | None = None) -> EvaluationReport:
    """Score a model on rows and aggregate every metric variant plus the ROC."""
    if threshold is None:
        threshold = getattr(model.config, "hit_decision_threshold", 0.5)
    y = _as_binary(labels, "labels")
    scores = np.asarray(model.scores(features), dtype=np.float64)
    preds = (scores >= threshold).astype(np.int64)
    cm = confusion(y, preds)
    return EvaluationReport(
        confusion=cm,
        metrics=metrics_rows(cm),
        roc=roc(y, scores),
        threshold=float(threshold),
        n_rows=int(y.size),
    )


def report_to_dict(report: EvaluationReport) -> dict:
    """JSON-ready form: metrics at 6 decimal places, ROC points as an array."""
    return {
        "n_rows": report.n_rows,
        "threshold": report.threshold,
        "confusion": {
            "tn": report.confusion.tn,
            "fp": report.confusion.fp,
            "fn": report.confusion.fn,
            "tp": report.confusion.tp,
        },
        "metrics": {
            name: {
                "accuracy": round(row.accuracy, 6),
                "precision": round(row.precision, 6),
                "recall": round(row.recall, 6),
                "f1": round(row.f1, 6),
                "degenerate_cells": list(row.degenerate_cells),
            }
            for name, row in report.metrics.items()
        },
        "roc": {
            "auc": round(report.roc.auc, 6),
            "points": [[round(fpr, 6), round(tpr, 6)] for fpr, tpr in report.roc.points],
        },
    }


def write_report_json(report_dict: dict, path: str | Path) -> None:
    Path(path).write_text(json.dumps(report_dict, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def write_roc_csv(curve: RocCurve, path: str | Path) -> None:
    """Two-column CSV of the curve for external plotting."""
    lines = ["false_positive_rate,true_positive_rate"]
    lines += [f"{fpr!r},{tpr!r}" for fpr, tpr in curve.points]
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")
