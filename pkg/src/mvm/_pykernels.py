"""Pure-Python mirror of the compiled kernels in ``_cykernels``.

Same signatures, same arithmetic, same accumulation order: the two backends
are interchangeable bit for bit and differ only in speed (see
benchmarks/bench_backends.py). Any change here must be applied to the .pyx
file in lockstep.

Shared argument conventions:
  weights    (rows, k) float64, the stacked per-view factor matrices
  bias_rows  (m,) intp, row of each view's constant-1 bias factor
  augment    whether bias rows take part in sums and updates
  gidx       (nnz,) intp, stacked-weight row per stored entry
  vals       (nnz,) float64, entry values
  vview      (nnz,) intp, 0-based view of each entry
  indptr     (n+1,) intp, instance boundaries into the entry arrays
Loss ids: 0 square, 1 logit, 2 hinge. Reg ids: 0 l2, 1 smoothed l1.
"""

import math

import numpy as np

BACKEND_NAME = "python"


def _loss_deriv(loss_id, score, y):
    if loss_id == 0:
        return 2.0 * (score - y)
    margin = y * score
    if loss_id == 1:
        if margin >= 0.0:
            e = math.exp(-margin)
            return -y * e / (1.0 + e)
        return -y / (1.0 + math.exp(margin))
    if margin < 1.0:
        return -y
    return 0.0


def _reg_deriv(reg_id, theta, epsilon):
    if reg_id == 0:
        return 2.0 * theta
    return theta / math.sqrt(theta * theta + epsilon * epsilon)


def _sums_into(weights, bias_rows, augment, gidx, vals, vview, lo, hi, s):
    m, k = s.shape
    for v in range(m):
        for f in range(k):
            s[v, f] = 0.0
    for e in range(lo, hi):
        r = gidx[e]
        v = vview[e]
        x = vals[e]
        for f in range(k):
            s[v, f] += x * weights[r, f]
    if augment:
        for v in range(m):
            r = bias_rows[v]
            for f in range(k):
                s[v, f] += weights[r, f]


def _score_from_sums(s):
    m, k = s.shape
    total = 0.0
    for f in range(k):
        prod = 1.0
        for v in range(m):
            prod *= s[v, f]
        total += prod
    return total


def view_sums(weights, bias_rows, augment, gidx, vals, vview):
    s = np.empty((len(bias_rows), weights.shape[1]))
    _sums_into(weights, bias_rows, augment, gidx, vals, vview, 0, len(gidx), s)
    return s


def predict_one(weights, bias_rows, augment, gidx, vals, vview):
    s = np.empty((len(bias_rows), weights.shape[1]))
    _sums_into(weights, bias_rows, augment, gidx, vals, vview, 0, len(gidx), s)
    return float(_score_from_sums(s))


def predict_scores(weights, bias_rows, augment, indptr, gidx, vals, vview):
    n = len(indptr) - 1
    out = np.empty(n)
    s = np.empty((len(bias_rows), weights.shape[1]))
    for i in range(n):
        _sums_into(weights, bias_rows, augment, gidx, vals, vview, indptr[i], indptr[i + 1], s)
        out[i] = _score_from_sums(s)
    return out


def sgd_pass(weights, bias_rows, augment, indptr, gidx, vals, vview, labels,
             order, loss_id, reg_id, epsilon, lam, eta, reg_bias):
    """Per-instance SGD updates over ``order``; mutates ``weights``.

    Per instance, the view sums and the score are computed once and every
    touched coordinate (stored entries, plus one bias row per view when
    augmenting) is stepped against those cached sums. Returns
    (updates_applied, first instance whose score came out non-finite or -1).

    numpy warnings are suppressed for the pass: the compiled backend takes
    IEEE overflow silently, and divergence is detected by the isfinite check.
    """
    m = len(bias_rows)
    k = weights.shape[1]
    s = np.empty((m, k))
    other = np.empty((m, k))  # product of the other views' sums, per factor
    updates = 0
    with np.errstate(over="ignore", invalid="ignore"):
        for t in range(len(order)):
            i = order[t]
            lo = indptr[i]
            hi = indptr[i + 1]
            _sums_into(weights, bias_rows, augment, gidx, vals, vview, lo, hi, s)
            score = _score_from_sums(s)
            if not math.isfinite(score):
                return updates, int(i)
            dloss = _loss_deriv(loss_id, score, labels[i])
            for f in range(k):
                acc = 1.0
                for v in range(m):
                    other[v, f] = acc
                    acc = acc * s[v, f]
                acc = 1.0
                for v in range(m - 1, -1, -1):
                    other[v, f] = other[v, f] * acc
                    acc = acc * s[v, f]
            for e in range(lo, hi):
                r = gidx[e]
                v = vview[e]
                x = vals[e]
                for f in range(k):
                    theta = weights[r, f]
                    weights[r, f] = theta - eta * (
                        dloss * (x * other[v, f])
                        + lam * _reg_deriv(reg_id, theta, epsilon)
                    )
                    updates += 1
            if augment:
                for v in range(m):
                    r = bias_rows[v]
                    for f in range(k):
                        theta = weights[r, f]
                        if reg_bias:
                            g = dloss * other[v, f] + lam * _reg_deriv(
                                reg_id, theta, epsilon
                            )
                        else:
                            g = dloss * other[v, f]
                        weights[r, f] = theta - eta * g
                        updates += 1
    return updates, -1
