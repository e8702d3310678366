"""evaluation.py

Confusion-matrix metrics, per-fold records and aggregation.

  accuracy  = (tp + tn) / (tp + tn + fp + fn)
  precision = tp / (tp + fp)       undefined -> 0, flagged
  recall    = tp / (tp + fn)       undefined -> 0, flagged
  f1        = 2 * P * R / (P + R)  0 when P + R = 0

Folds are aggregated macro-style: unweighted mean and population standard
deviation of the per-fold values.
"""

from __future__ import annotations

import hashlib
import json
import logging
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from typing import Any, Dict, Mapping, Optional, Sequence, Tuple

import numpy as np

_logger = logging.getLogger(__name__)

METRICS = ("accuracy", "precision", "recall", "f1")
TIMINGS = ("train_seconds", "test_seconds", "tune_seconds")

FLAG_PRECISION_UNDEFINED = "precision_undefined"
FLAG_RECALL_UNDEFINED = "recall_undefined"


@dataclass(frozen=True)
class ConfusionMatrix:
    tp: int = 0
    tn: int = 0
    fp: int = 0
    fn: int = 0

    def __post_init__(self) -> None:
        for name in ("tp", "tn", "fp", "fn"):
            if int(getattr(self, name)) < 0:
                raise ValueError(f"{name} must be non-negative")
            object.__setattr__(self, name, int(getattr(self, name)))

    @property
    def total(self) -> int:
        return self.tp + self.tn + self.fp + self.fn

    def swapped(self) -> "ConfusionMatrix":
        """Same predictions with the positive and negative classes exchanged."""
        return ConfusionMatrix(tp=self.tn, tn=self.tp, fp=self.fn, fn=self.fp)

    def __add__(self, other: "ConfusionMatrix") -> "ConfusionMatrix":
        return ConfusionMatrix(
            self.tp + other.tp, self.tn + other.tn, self.fp + other.fp, self.fn + other.fn
        )


def confusion(y_true: Sequence[int], y_pred: Sequence[int]) -> ConfusionMatrix:
    t = np.asarray(y_true).reshape(-1)
    p = np.asarray(y_pred).reshape(-1)
    if t.shape != p.shape:
        raise ValueError(f"length mismatch: {t.shape[0]} labels vs {p.shape[0]} predictions")
    if not (np.isin(t, (0, 1)).all() and np.isin(p, (0, 1)).all()):
        raise ValueError("labels and predictions must be 0/1")
    t, p = t.astype(bool), p.astype(bool)
    return ConfusionMatrix(
        tp=int((t & p).sum()), tn=int((~t & ~p).sum()), fp=int((~t & p).sum()), fn=int((t & ~p).sum())
    )


def rates(cm: ConfusionMatrix) -> Dict[str, Fraction]:
    """Exact accuracy / precision / recall / f1 as Fractions (same conventions as ``metrics``)."""
    if cm.total == 0:
        raise ValueError("empty confusion matrix")
    acc = Fraction(cm.tp + cm.tn, cm.total)
    prec = Fraction(cm.tp, cm.tp + cm.fp) if cm.tp + cm.fp else Fraction(0)
    rec = Fraction(cm.tp, cm.tp + cm.fn) if cm.tp + cm.fn else Fraction(0)
    f1 = 2 * prec * rec / (prec + rec) if prec + rec else Fraction(0)
    return {"accuracy": acc, "precision": prec, "recall": rec, "f1": f1}


@dataclass(frozen=True)
class FoldMetrics:
    accuracy: float
    precision: float
    recall: float
    f1: float
    train_seconds: float = 0.0
    test_seconds: float = 0.0
    tune_seconds: float = 0.0
    train_accuracy: float = float("nan")
    flags: Tuple[str, ...] = field(default_factory=tuple)

    def __post_init__(self) -> None:
        for name in METRICS:
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1], got {v}")
        for name in TIMINGS:
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be non-negative")

    def with_timing(self, **kwargs: float) -> "FoldMetrics":
        data = asdict(self)
        data.update(kwargs)
        data["flags"] = tuple(data["flags"])
        return FoldMetrics(**data)


def metrics(
    cm: ConfusionMatrix,
    *,
    train_seconds: float = 0.0,
    test_seconds: float = 0.0,
    tune_seconds: float = 0.0,
    train_accuracy: float = float("nan"),
    warn: bool = True,
) -> FoldMetrics:
    """Accuracy, precision, recall, F1 of ``cm``; undefined ratios are 0 and flagged.

    ``warn=False`` logs the undefined cases at DEBUG (inner tuning folds).
    """
    r = rates(cm)
    flags = []
    level = logging.WARNING if warn else logging.DEBUG
    if cm.tp + cm.fp == 0:
        flags.append(FLAG_PRECISION_UNDEFINED)
        _logger.log(level, "precision undefined (no positive predictions); reported as 0")
    if cm.tp + cm.fn == 0:
        flags.append(FLAG_RECALL_UNDEFINED)
        _logger.log(level, "recall undefined (no positive labels); reported as 0")
    return FoldMetrics(
        accuracy=float(r["accuracy"]),
        precision=float(r["precision"]),
        recall=float(r["recall"]),
        f1=float(r["f1"]),
        train_seconds=train_seconds,
        test_seconds=test_seconds,
        tune_seconds=tune_seconds,
        train_accuracy=train_accuracy,
        flags=tuple(flags),
    )


# ----------------------------
# Aggregation
# ----------------------------

def fingerprint(config: Mapping[str, Any]) -> str:
    """Short sha256 of a JSON-able configuration mapping (sorted keys)."""
    blob = json.dumps(config, sort_keys=True, ensure_ascii=False, default=str)
    return hashlib.sha256(blob.encode("utf-8")).hexdigest()[:16]


@dataclass(frozen=True)
class EvaluationReport:
    folds: Tuple[FoldMetrics, ...]
    mean: Dict[str, float]
    std: Dict[str, float]
    total_seconds: Dict[str, float]
    config: Dict[str, Any] = field(default_factory=dict)

    @property
    def k(self) -> int:
        return len(self.folds)

    @property
    def fingerprint(self) -> str:
        return fingerprint(self.config)

    @property
    def flags(self) -> Tuple[str, ...]:
        return tuple(sorted({f for fold in self.folds for f in fold.flags}))

    def to_dict(self) -> Dict[str, Any]:
        return {
            "mean": dict(self.mean),
            "std": dict(self.std),
            "total_seconds": dict(self.total_seconds),
            "folds": [asdict(f) | {"flags": list(f.flags)} for f in self.folds],
            "config": self.config,
            "fingerprint": self.fingerprint,
        }


def aggregate(
    folds: Sequence[FoldMetrics], config: Optional[Mapping[str, Any]] = None, k: Optional[int] = None
) -> EvaluationReport:
    folds = tuple(folds)
    if not folds:
        raise ValueError("aggregate needs at least one fold")
    if k is not None and len(folds) != k:
        raise ValueError(f"expected {k} folds, got {len(folds)}")
    mean: Dict[str, float] = {}
    std: Dict[str, float] = {}
    for name in METRICS + ("train_accuracy",) + TIMINGS:
        values = np.array([getattr(f, name) for f in folds], dtype=float)
        mean[name] = float(values.mean())
        std[name] = float(values.std())
    totals = {name: float(sum(getattr(f, name) for f in folds)) for name in TIMINGS}
    return EvaluationReport(
        folds=folds, mean=mean, std=std, total_seconds=totals, config=dict(config or {})
    )
