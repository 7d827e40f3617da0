# cython: language_level=3
# cython: boundscheck=False
# cython: wraparound=False
# cython: initializedcheck=False
# cython: cdivision=True
"""Compiled per-instance kernels; ``_pykernels`` is the pure-Python mirror.

Keep the arithmetic and accumulation order in lockstep with that file: the
two backends are interchangeable bit for bit. Argument conventions are
documented there.
"""

import numpy as np

from libc.math cimport exp, isfinite, sqrt

BACKEND_NAME = "cython"


cdef inline double _loss_deriv(Py_ssize_t loss_id, double score, double y) noexcept nogil:
    cdef double margin, e
    if loss_id == 0:
        return 2.0 * (score - y)
    margin = y * score
    if loss_id == 1:
        if margin >= 0.0:
            e = exp(-margin)
            return -y * e / (1.0 + e)
        return -y / (1.0 + exp(margin))
    if margin < 1.0:
        return -y
    return 0.0


cdef inline double _reg_deriv(Py_ssize_t reg_id, double theta, double epsilon) noexcept nogil:
    if reg_id == 0:
        return 2.0 * theta
    return theta / sqrt(theta * theta + epsilon * epsilon)


cdef void _sums_into(const double[:, ::1] weights, const Py_ssize_t[::1] bias_rows,
                     bint augment, const Py_ssize_t[::1] gidx, const double[::1] vals,
                     const Py_ssize_t[::1] vview, Py_ssize_t lo, Py_ssize_t hi,
                     double[:, ::1] s) noexcept nogil:
    cdef Py_ssize_t m = s.shape[0]
    cdef Py_ssize_t k = s.shape[1]
    cdef Py_ssize_t e, v, f, r
    cdef double x
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


cdef double _score_from_sums(double[:, ::1] s) noexcept nogil:
    cdef Py_ssize_t m = s.shape[0]
    cdef Py_ssize_t k = s.shape[1]
    cdef Py_ssize_t v, f
    cdef double total = 0.0
    cdef double prod
    for f in range(k):
        prod = 1.0
        for v in range(m):
            prod *= s[v, f]
        total += prod
    return total


def view_sums(const double[:, ::1] weights, const Py_ssize_t[::1] bias_rows, bint augment,
              const Py_ssize_t[::1] gidx, const double[::1] vals, const Py_ssize_t[::1] vview):
    s_arr = np.empty((bias_rows.shape[0], weights.shape[1]))
    cdef double[:, ::1] s = s_arr
    _sums_into(weights, bias_rows, augment, gidx, vals, vview, 0, gidx.shape[0], s)
    return s_arr


def predict_one(const double[:, ::1] weights, const Py_ssize_t[::1] bias_rows, bint augment,
                const Py_ssize_t[::1] gidx, const double[::1] vals, const Py_ssize_t[::1] vview):
    s_arr = np.empty((bias_rows.shape[0], weights.shape[1]))
    cdef double[:, ::1] s = s_arr
    _sums_into(weights, bias_rows, augment, gidx, vals, vview, 0, gidx.shape[0], s)
    return float(_score_from_sums(s))


def predict_scores(const double[:, ::1] weights, const Py_ssize_t[::1] bias_rows,
                   bint augment, const Py_ssize_t[::1] indptr, const Py_ssize_t[::1] gidx,
                   const double[::1] vals, const Py_ssize_t[::1] vview):
    cdef Py_ssize_t n = indptr.shape[0] - 1
    out_arr = np.empty(n)
    s_arr = np.empty((bias_rows.shape[0], weights.shape[1]))
    cdef double[::1] out = out_arr
    cdef double[:, ::1] s = s_arr
    cdef Py_ssize_t i
    with nogil:
        for i in range(n):
            _sums_into(weights, bias_rows, augment, gidx, vals, vview,
                       indptr[i], indptr[i + 1], s)
            out[i] = _score_from_sums(s)
    return out_arr


def sgd_pass(double[:, ::1] weights, const Py_ssize_t[::1] bias_rows, bint augment,
             const Py_ssize_t[::1] indptr, const Py_ssize_t[::1] gidx,
             const double[::1] vals, const Py_ssize_t[::1] vview,
             const double[::1] labels, const Py_ssize_t[::1] order,
             Py_ssize_t loss_id, Py_ssize_t reg_id, double epsilon, double lam,
             double eta, bint reg_bias):
    """Per-instance SGD updates over ``order``; mutates ``weights``.

    Returns (updates_applied, first instance whose score came out non-finite
    or -1). See the _pykernels docstring for the update rule.
    """
    cdef Py_ssize_t m = bias_rows.shape[0]
    cdef Py_ssize_t k = weights.shape[1]
    s_arr = np.empty((m, k))
    other_arr = np.empty((m, k))
    cdef double[:, ::1] s = s_arr
    cdef double[:, ::1] other = other_arr
    cdef Py_ssize_t updates = 0
    cdef Py_ssize_t bad = -1
    cdef Py_ssize_t t, i, lo, hi, e, v, f, r
    cdef double score, dloss, acc, x, theta, g
    with nogil:
        for t in range(order.shape[0]):
            i = order[t]
            lo = indptr[i]
            hi = indptr[i + 1]
            _sums_into(weights, bias_rows, augment, gidx, vals, vview, lo, hi, s)
            score = _score_from_sums(s)
            if not isfinite(score):
                bad = i
                break
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
                        dloss * (x * other[v, f]) + lam * _reg_deriv(reg_id, theta, epsilon)
                    )
                    updates += 1
            if augment:
                for v in range(m):
                    r = bias_rows[v]
                    for f in range(k):
                        theta = weights[r, f]
                        if reg_bias:
                            g = dloss * other[v, f] + lam * _reg_deriv(reg_id, theta, epsilon)
                        else:
                            g = dloss * other[v, f]
                        weights[r, f] = theta - eta * g
                        updates += 1
    return int(updates), int(bad)
