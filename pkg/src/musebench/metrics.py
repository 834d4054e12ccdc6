"""Correlation and threshold metrics for score evaluation.

srcc/plcc/krcc are the usual trio: Spearman (Pearson over average-tie
fractional ranks), Pearson, and Kendall tau-b with tie correction.  The
tau-b pair count runs through the numba/numpy kernel backend.

threshold_search and f1_threshold both scan the inclusive grid 0.00,
0.01, ..., 1.00 and return the smallest maximizer, so results are
reproducible without a tolerance.  Classification is strict:
a prediction counts as positive exactly when it exceeds the threshold.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from . import _kernels as K
from .errors import MetricError

GRID = np.arange(101) / 100.0


def _series(x, name) -> np.ndarray:
    arr = np.asarray(x, dtype=np.float64)
    if arr.ndim != 1:
        raise MetricError(f"{name} must be 1-D")
    if arr.size < 2:
        raise MetricError(f"{name} needs at least two values")
    if not np.all(np.isfinite(arr)):
        raise MetricError(f"{name} contains NaN or infinity")
    return arr


def _pair(x, y) -> tuple[np.ndarray, np.ndarray]:
    ax, ay = _series(x, "x"), _series(y, "y")
    if ax.size != ay.size:
        raise MetricError("series lengths differ")
    return ax, ay


def average_ranks(x: Sequence[float]) -> np.ndarray:
    """Fractional ranks (1-based); ties share the average of their span."""
    arr = _series(x, "x")
    order = np.argsort(arr, kind="mergesort")
    sx = arr[order]
    boundary = np.empty(arr.size, dtype=bool)
    boundary[0] = True
    boundary[1:] = sx[1:] != sx[:-1]
    gid = np.cumsum(boundary) - 1
    counts = np.bincount(gid)
    ends = np.cumsum(counts)
    starts = ends - counts
    avg = (starts + ends - 1) / 2.0 + 1.0
    ranks = np.empty(arr.size)
    ranks[order] = avg[gid]
    return ranks


def plcc(x, y) -> float:
    """Pearson product-moment correlation."""
    ax, ay = _pair(x, y)
    cx = ax - ax.mean()
    cy = ay - ay.mean()
    vx = float(cx @ cx)
    vy = float(cy @ cy)
    if vx == 0.0 or vy == 0.0:
        raise MetricError("correlation undefined for a constant series")
    return float((cx @ cy) / math.sqrt(vx * vy))


def srcc(x, y) -> float:
    """Spearman rank correlation (Pearson over average ranks)."""
    ax, ay = _pair(x, y)
    return plcc(average_ranks(ax), average_ranks(ay))


def krcc(x, y) -> float:
    """Kendall tau-b: (C - D) / sqrt((n0 - n1)(n0 - n2))."""
    ax, ay = _pair(x, y)
    n = ax.size
    s = int(K.kendall_s(ax, ay))
    n0 = n * (n - 1) // 2

    def tie_term(a):
        _, counts = np.unique(a, return_counts=True)
        return int((counts * (counts - 1) // 2).sum())

    n1 = tie_term(ax)
    n2 = tie_term(ay)
    if n0 == n1 or n0 == n2:
        raise MetricError("tau-b undefined when one series is fully tied")
    return s / math.sqrt(float(n0 - n1) * float(n0 - n2))


@dataclass(frozen=True)
class ThresholdResult:
    threshold: float
    accuracy: float
    per_category: Mapping[str, float] = field(default_factory=dict)

    def to_json_dict(self) -> dict:
        return {
            "threshold": self.threshold,
            "accuracy": self.accuracy,
            "per_category": dict(self.per_category),
        }


def _check_binary(labels) -> np.ndarray:
    lab = np.asarray(labels)
    if lab.ndim != 1 or lab.size == 0:
        raise MetricError("labels must be a non-empty 1-D array")
    if not np.isin(lab, (0, 1)).all():
        raise MetricError("labels must be 0/1")
    return lab.astype(np.int64)


def _check_unit(preds, name="predictions") -> np.ndarray:
    arr = np.asarray(preds, dtype=np.float64)
    if arr.ndim != 1 or arr.size == 0:
        raise MetricError(f"{name} must be a non-empty 1-D array")
    if not np.all(np.isfinite(arr)) or arr.min() < 0 or arr.max() > 1:
        raise MetricError(f"{name} must lie in [0,1]")
    return arr


def threshold_search(
    preds, labels, categories: Sequence[str] | None = None
) -> ThresholdResult:
    """Best overall accuracy over the 101-point grid; smallest maximizing
    threshold wins.  Per-category accuracies are computed at that single
    global threshold, not per-category optima."""
    p = _check_unit(preds)
    lab = _check_binary(labels)
    if p.size != lab.size:
        raise MetricError("predictions and labels differ in length")
    yes = p[None, :] > GRID[:, None]
    acc = (yes == (lab[None, :] == 1)).mean(axis=1)
    best = int(np.argmax(acc))
    t = float(GRID[best])
    per_cat: dict[str, float] = {}
    if categories is not None:
        if len(categories) != p.size:
            raise MetricError("categories and predictions differ in length")
        chosen = yes[best]
        correct = chosen == (lab == 1)
        for cat in sorted(set(categories)):
            mask = np.asarray([c == cat for c in categories])
            per_cat[cat] = float(correct[mask].mean())
    return ThresholdResult(t, float(acc[best]), per_cat)


@dataclass(frozen=True)
class F1Result:
    threshold: float
    f1: float
    pos_accuracy: float
    neg_accuracy: float

    def to_json_dict(self) -> dict:
        return {
            "threshold": self.threshold,
            "f1": self.f1,
            "pos_accuracy": self.pos_accuracy,
            "neg_accuracy": self.neg_accuracy,
        }


def f1_threshold(pos, neg, *, mean: str = "harmonic") -> F1Result:
    """Threshold maximizing the mean of the two one-sided accuracies:
    fraction of positives above t and fraction of negatives at or below
    t.  Harmonic mean by default, arithmetic behind the flag; smallest
    maximizing threshold wins."""
    if mean not in ("harmonic", "arithmetic"):
        raise MetricError(f"unknown mean {mean!r}")
    p = _check_unit(pos, "positive predictions")
    q = _check_unit(neg, "negative predictions")
    pos_acc = (p[None, :] > GRID[:, None]).mean(axis=1)
    neg_acc = (q[None, :] <= GRID[:, None]).mean(axis=1)
    if mean == "harmonic":
        s = pos_acc + neg_acc
        with np.errstate(invalid="ignore", divide="ignore"):
            f = np.where(s > 0, 2.0 * pos_acc * neg_acc / np.where(s > 0, s, 1.0), 0.0)
    else:
        f = (pos_acc + neg_acc) / 2.0
    best = int(np.argmax(f))
    return F1Result(
        float(GRID[best]), float(f[best]), float(pos_acc[best]), float(neg_acc[best])
    )


def structural_accuracy(pos, neg, threshold: float) -> float:
    """Positive/negative-averaged accuracy at a fixed threshold."""
    p = _check_unit(pos, "positive predictions")
    q = _check_unit(neg, "negative predictions")
    pos_acc = float((p > threshold).mean())
    neg_acc = float((q <= threshold).mean())
    return (pos_acc + neg_acc) / 2.0


def recall_rate(flags) -> float:
    """Fraction of yes flags; how often the detector fires over queries
    whose true answer is yes."""
    arr = np.asarray(flags)
    if arr.ndim != 1 or arr.size == 0:
        raise MetricError("flags must be a non-empty 1-D array")
    if not np.isin(arr, (0, 1, True, False)).all():
        raise MetricError("flags must be boolean")
    return float(arr.astype(np.float64).mean())
