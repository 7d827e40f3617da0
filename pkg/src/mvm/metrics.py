"""Evaluation of raw scores against labels.

Classification metrics threshold the raw score at zero; a score of exactly 0
counts as +1 (documented tie rule). AUC follows the rank-statistic
convention with ties contributing one half.
"""

from dataclasses import dataclass

import numpy as np

from .errors import MetricError
from .objectives import loss_values


def _aligned(scores, labels):
    s = np.asarray(scores, dtype=np.float64).ravel()
    y = np.asarray(labels, dtype=np.float64).ravel()
    if s.size != y.size:
        raise MetricError(f"{s.size} scores vs {y.size} labels")
    if s.size == 0:
        raise MetricError("empty input")
    return s, y


def _check_signs(y, name):
    if not np.all(np.abs(y) == 1.0):
        raise MetricError(f"{name} needs labels in {{-1, +1}}")


def accuracy(scores, labels):
    """Fraction of instances whose score sign matches the +/-1 label."""
    s, y = _aligned(scores, labels)
    _check_signs(y, "accuracy")
    predictions = np.where(s >= 0.0, 1.0, -1.0)
    return float(np.mean(predictions == y))


def auc(scores, labels):
    """Probability that a random positive outranks a random negative."""
    s, y = _aligned(scores, labels)
    _check_signs(y, "auc")
    n_pos = int(np.sum(y == 1.0))
    n_neg = s.size - n_pos
    if n_pos == 0 or n_neg == 0:
        raise MetricError("auc is undefined with a single class")
    # tie-averaged ranks, 1-based
    uniq, inverse, counts = np.unique(s, return_inverse=True, return_counts=True)
    cum = np.cumsum(counts)
    avg_rank = cum - (counts - 1) / 2.0
    ranks = avg_rank[inverse]
    u = float(np.sum(ranks[y == 1.0])) - n_pos * (n_pos + 1) / 2.0
    return u / (n_pos * n_neg)


def rmse(scores, targets):
    """Root mean squared error against real-valued targets."""
    s, t = _aligned(scores, targets)
    return float(np.sqrt(np.mean((s - t) ** 2)))


def mean_logloss(scores, labels):
    """Mean logistic loss of raw scores against +/-1 labels."""
    s, y = _aligned(scores, labels)
    _check_signs(y, "logloss")
    return float(np.mean(loss_values("logit", s, y)))


@dataclass
class EvalReport:
    """Metric values for one scored dataset; unset metrics stay None."""

    accuracy: float = None
    auc: float = None
    logloss: float = None
    rmse: float = None
