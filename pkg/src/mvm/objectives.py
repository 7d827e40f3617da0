"""Loss functions and regularizers with their derivatives.

The scalar functions here are the reference formulas; the training kernels
(`_cykernels` / `_pykernels`) inline the same arithmetic for speed, and the
gradient-check suite ties the two together. Array helpers (`loss_values`,
`reg_gradients`) exist for objective evaluation and the baseline trainers.
"""

import math

import numpy as np

LOSSES = ("square", "logit", "hinge")
REGS = ("l2", "l1")

LOSS_IDS = {name: i for i, name in enumerate(LOSSES)}
REG_IDS = {name: i for i, name in enumerate(REGS)}

# Smoothing constant for the differentiable L1 surrogate sqrt(theta^2 + eps^2).
DEFAULT_EPSILON = 1e-6


def _check_loss(kind):
    if kind not in LOSSES:
        raise ValueError(f"unknown loss {kind!r}, expected one of {LOSSES}")


def _check_reg(kind, epsilon):
    if kind not in REGS:
        raise ValueError(f"unknown regularizer {kind!r}, expected one of {REGS}")
    if kind == "l1" and epsilon <= 0.0:
        raise ValueError("l1 smoothing epsilon must be positive")


def _check_label(kind, y):
    if kind in ("logit", "hinge") and y not in (-1.0, 1.0):
        raise ValueError(f"{kind} loss needs labels in {{-1, +1}}, got {y!r}")


def loss_value(kind, score, y):
    """Pointwise loss of a raw score against a label.

    square: (score - y)^2; logit: log(1 + exp(-y * score)), overflow-safe;
    hinge: max(0, 1 - y * score). logit and hinge require y in {-1, +1}.
    """
    _check_loss(kind)
    if kind == "square":
        return (score - y) ** 2
    _check_label(kind, y)
    margin = y * score
    if kind == "logit":
        # softplus(-margin) without overflow for large |margin|
        return max(-margin, 0.0) + math.log1p(math.exp(-abs(margin)))
    return max(0.0, 1.0 - margin)


def loss_derivative(kind, score, y):
    """d loss / d score. The hinge subgradient at the kink y*score == 1 is 0."""
    _check_loss(kind)
    if kind == "square":
        return 2.0 * (score - y)
    _check_label(kind, y)
    margin = y * score
    if kind == "logit":
        # -y * sigmoid(-margin), evaluated on the non-overflowing branch
        if margin >= 0.0:
            e = math.exp(-margin)
            return -y * e / (1.0 + e)
        return -y / (1.0 + math.exp(margin))
    if margin < 1.0:
        return -y
    return 0.0


def loss_values(kind, scores, labels):
    """Vectorized `loss_value` over aligned score/label arrays."""
    _check_loss(kind)
    s = np.asarray(scores, dtype=np.float64)
    y = np.asarray(labels, dtype=np.float64)
    if s.shape != y.shape:
        raise ValueError("scores and labels differ in shape")
    if kind == "square":
        return (s - y) ** 2
    if not np.all(np.abs(y) == 1.0):
        raise ValueError(f"{kind} loss needs labels in {{-1, +1}}")
    margin = y * s
    if kind == "logit":
        return np.logaddexp(0.0, -margin)
    return np.maximum(0.0, 1.0 - margin)


def reg_value(kind, params, epsilon=DEFAULT_EPSILON):
    """Regularizer over a flat parameter collection.

    l2 is the summed square; l1 is the smoothed surrogate
    sum(sqrt(theta^2 + epsilon^2)), differentiable everywhere.
    """
    _check_reg(kind, epsilon)
    p = np.asarray(params, dtype=np.float64).ravel()
    if kind == "l2":
        return float(np.dot(p, p))
    return float(np.sum(np.sqrt(p * p + epsilon * epsilon)))


def reg_gradient(kind, theta, epsilon=DEFAULT_EPSILON):
    """d regularizer / d theta for a single parameter.

    l2: 2*theta. l1: theta / sqrt(theta^2 + epsilon^2), always in (-1, 1).
    """
    _check_reg(kind, epsilon)
    if kind == "l2":
        return 2.0 * theta
    return theta / math.sqrt(theta * theta + epsilon * epsilon)


def reg_gradients(kind, theta, epsilon=DEFAULT_EPSILON):
    """Vectorized `reg_gradient` over an array of parameters."""
    _check_reg(kind, epsilon)
    t = np.asarray(theta, dtype=np.float64)
    if kind == "l2":
        return 2.0 * t
    return t / np.sqrt(t * t + epsilon * epsilon)
