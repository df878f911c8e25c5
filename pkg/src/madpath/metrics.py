"""Classification metrics and the weighted distance primitive."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatchError, SchemaError, UndefinedMetricError


def auc(scores, labels) -> float:
    """Area under the ROC curve for binary labels.

    Equals the probability that a uniformly random positive outscores a
    uniformly random negative, counting ties as 1/2 (the rank/Mann-Whitney
    form, identical to trapezoidal integration of the ROC curve).
    """
    s = np.asarray(scores, dtype=float)
    y = np.asarray(labels)
    if s.shape != y.shape or s.ndim != 1:
        raise DimensionMismatchError("scores and labels must be equal-length vectors")
    pos = y == 1
    neg = y == 0
    n_pos = int(pos.sum())
    n_neg = int(neg.sum())
    if n_pos == 0 or n_neg == 0:
        raise UndefinedMetricError("AUC needs both classes present")
    order = np.argsort(s, kind="mergesort")
    ranks = np.empty_like(s)
    ranks[order] = np.arange(1, len(s) + 1, dtype=float)
    # average ranks over tie groups
    sorted_s = s[order]
    boundaries = np.flatnonzero(np.diff(sorted_s) != 0) + 1
    groups = np.split(np.arange(len(s)), boundaries)
    for g in groups:
        if len(g) > 1:
            ranks[order[g]] = ranks[order[g]].mean()
    r_pos = ranks[pos].sum()
    return float((r_pos - n_pos * (n_pos + 1) / 2) / (n_pos * n_neg))


def accuracy(predicted, labels) -> float:
    p = np.asarray(predicted)
    y = np.asarray(labels)
    if p.shape != y.shape:
        raise DimensionMismatchError("predictions and labels must share shape")
    return float(np.mean(p == y))


@dataclass(frozen=True)
class WeightedMetric:
    """Feature weights on the probability simplex defining a diagonal metric."""

    weights: np.ndarray

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float)
        if w.ndim != 1:
            raise DimensionMismatchError("weights must be a vector")
        if np.any(w < 0):
            raise SchemaError("weights must be non-negative")
        if abs(w.sum() - 1.0) > 1e-10:
            raise SchemaError("weights must sum to 1")
        w.flags.writeable = False
        object.__setattr__(self, "weights", w)


def weighted_sqdist(x, y, metric: WeightedMetric) -> float:
    """Sum over d of w_d (x_d - y_d)^2."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    w = metric.weights
    if x.shape != y.shape or x.shape != w.shape:
        raise DimensionMismatchError(
            f"shapes {x.shape}/{y.shape}/{w.shape} disagree")
    d = x - y
    return float(np.dot(w, d * d))
