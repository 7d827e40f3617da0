"""Reference predictors sharing the SGD harness: a first-order linear model
and a second-order factorization machine restricted to cross-view pairs.

Within-view pairs are deliberately excluded from the factorization machine:
features of one view describe the same entity, so their pairwise products add
redundant parameters without new signal. The highest-order-only counterpart
(no augmentation, interactions of all m views only) is `MvmModel` with
``augment=False``.
"""

import math

import numpy as np

from .errors import DivergenceError, SchemaError
from .model import pack_instance
from .objectives import (
    loss_derivative,
    loss_values,
    reg_gradient,
    reg_gradients,
    reg_value,
)
from .training import TrainReport, _check_labels


class LinearModel:
    """w0 plus one weight per feature; no interactions."""

    family = "linear"
    __slots__ = ("schema", "w0", "weights")

    def __init__(self, schema, w0=0.0, weights=None):
        self.schema = schema
        self.w0 = float(w0)
        if weights is None:
            weights = np.zeros(schema.d)
        else:
            weights = np.array(weights, dtype=np.float64, copy=True).ravel()
            if weights.size != schema.d:
                raise ValueError(f"expected {schema.d} weights, got {weights.size}")
        if not (math.isfinite(self.w0) and np.all(np.isfinite(weights))):
            raise ValueError("model weights must be finite")
        self.weights = weights

    @property
    def view_weights(self):
        """Per-view weight vectors as views into the flat array."""
        out = []
        pos = 0
        for dim in self.schema.dims:
            out.append(self.weights[pos : pos + dim])
            pos += dim
        return out

    def __repr__(self):
        return f"LinearModel(dims={self.schema.dims})"


class MvfmModel:
    """Linear part plus rank-k factorized pairwise terms between distinct
    views; latent rows exist only for real features (no bias slots)."""

    family = "mvfm"
    __slots__ = ("schema", "k", "w0", "first_order", "latent")

    def __init__(self, schema, k, w0=0.0, first_order=None, latent=None):
        if int(k) < 1:
            raise ValueError("k must be >= 1")
        self.schema = schema
        self.k = int(k)
        self.w0 = float(w0)
        if first_order is None:
            first_order = np.zeros(schema.d)
        else:
            first_order = np.array(first_order, dtype=np.float64, copy=True).ravel()
            if first_order.size != schema.d:
                raise ValueError(
                    f"expected {schema.d} first-order weights, got {first_order.size}"
                )
        if latent is None:
            latent = np.zeros((schema.d, self.k))
        else:
            latent = np.array(latent, dtype=np.float64, copy=True)
            if latent.shape != (schema.d, self.k):
                raise ValueError(
                    f"latent shape {latent.shape}, expected {(schema.d, self.k)}"
                )
        if not (
            math.isfinite(self.w0)
            and np.all(np.isfinite(first_order))
            and np.all(np.isfinite(latent))
        ):
            raise ValueError("model weights must be finite")
        self.first_order = first_order
        self.latent = latent

    def __repr__(self):
        return f"MvfmModel(dims={self.schema.dims}, k={self.k})"


def _feature_rows(gidx, vview):
    # The stacked layout holds one bias row per view; dropping them shifts
    # every row down by its 0-based view id.
    return gidx - vview


def linear_predict(model, instance):
    """w0 plus the dot product of stored features with their weights."""
    gidx, vals, vview = pack_instance(model.schema, instance)
    rows = _feature_rows(gidx, vview)
    return float(model.w0 + np.dot(vals, model.weights[rows]))


def _mvfm_view_sums(model, rows, vals, vview):
    s = np.zeros((model.schema.m, model.k))
    if rows.size:
        np.add.at(s, vview, vals[:, None] * model.latent[rows])
    return s


def mvfm_predict(model, instance):
    """Linear part plus cross-view pairwise terms.

    The pair sum over views p < q equals, factor by factor, half of
    (sum of per-view latent sums)^2 minus the summed squares, so the cost
    stays linear in the stored entries.
    """
    gidx, vals, vview = pack_instance(model.schema, instance)
    rows = _feature_rows(gidx, vview)
    s = _mvfm_view_sums(model, rows, vals, vview)
    total = s.sum(axis=0)
    pairs = 0.5 * float(np.dot(total, total) - np.sum(s * s))
    return float(model.w0 + np.dot(vals, model.first_order[rows]) + pairs)


def mvfm_gradient(model, instance, coordinate):
    """d score / d coordinate for ("w0",), ("w", view, pos), or
    ("v", view, pos, factor); view/pos/factor are 1-based."""
    instance.validate(model.schema)
    kind = coordinate[0]
    if kind == "w0":
        return 1.0
    if kind not in ("w", "v"):
        raise ValueError(f"unknown coordinate kind {kind!r}")
    view, pos = int(coordinate[1]), int(coordinate[2])
    if not 1 <= view <= model.schema.m:
        raise ValueError(f"view {view} out of range 1..{model.schema.m}")
    dim = model.schema.dims[view - 1]
    if not 1 <= pos <= dim:
        raise ValueError(f"position {pos} out of range 1..{dim} for view {view}")
    z = instance.views[view - 1].value_at(pos)
    if kind == "w":
        return float(z)
    factor = int(coordinate[3])
    if not 1 <= factor <= model.k:
        raise ValueError(f"factor {factor} out of range 1..{model.k}")
    gidx, vals, vview = pack_instance(model.schema, instance)
    rows = _feature_rows(gidx, vview)
    s = _mvfm_view_sums(model, rows, vals, vview)
    total = s.sum(axis=0)
    return float(z * (total[factor - 1] - s[view - 1, factor - 1]))


def _linear_scores(model, indptr, rows, vals):
    n = indptr.size - 1
    seg = np.repeat(np.arange(n), np.diff(indptr))
    contrib = vals * model.weights[rows]
    return model.w0 + np.bincount(seg, weights=contrib, minlength=n)


def linear_predict_dataset(model, dataset):
    """Scores for every instance, in dataset order."""
    _check_schema(model, dataset)
    indptr, gidx, vals, vview, _ = dataset.packed()
    return _linear_scores(model, indptr, _feature_rows(gidx, vview), vals)


def mvfm_predict_dataset(model, dataset):
    """Scores for every instance, in dataset order."""
    _check_schema(model, dataset)
    indptr, gidx, vals, vview, _ = dataset.packed()
    rows = _feature_rows(gidx, vview)
    out = np.empty(indptr.size - 1)
    for i in range(out.size):
        lo, hi = int(indptr[i]), int(indptr[i + 1])
        s = _mvfm_view_sums(model, rows[lo:hi], vals[lo:hi], vview[lo:hi])
        total = s.sum(axis=0)
        pairs = 0.5 * float(np.dot(total, total) - np.sum(s * s))
        out[i] = model.w0 + np.dot(vals[lo:hi], model.first_order[rows[lo:hi]]) + pairs
    return out


def _check_schema(model, dataset):
    if dataset.schema != model.schema:
        raise SchemaError(
            f"dataset schema {dataset.schema.dims} does not match "
            f"model schema {model.schema.dims}"
        )


def _all_parameters(model):
    if model.family == "linear":
        return np.concatenate(([model.w0], model.weights))
    return np.concatenate(([model.w0], model.first_order, model.latent.ravel()))


def baseline_objective(model, dataset, config):
    """Summed loss plus lam times the regularizer over every parameter."""
    if model.family == "linear":
        scores = linear_predict_dataset(model, dataset)
    else:
        scores = mvfm_predict_dataset(model, dataset)
    loss_sum = float(np.sum(loss_values(config.loss, scores, dataset.labels)))
    return loss_sum + config.lam * reg_value(
        config.reg, _all_parameters(model), config.epsilon
    )


def baseline_train(kind, dataset, config):
    """SGD for the reference predictors; mirrors `train`'s contract.

    ``kind`` is "linear" or "mvfm". All parameters (w0 included) initialize
    from N(0, sigma) with the configured seed, every parameter is
    regularized, and per-instance updates use sums cached before the first
    coordinate step, exactly like the main trainer.
    """
    if kind not in ("linear", "mvfm"):
        raise ValueError(f"unknown baseline {kind!r}, expected 'linear' or 'mvfm'")
    if len(dataset) == 0:
        raise ValueError("cannot train on an empty dataset")
    _check_labels(config.loss, dataset.labels)
    schema = dataset.schema
    rng = np.random.default_rng(config.seed)
    if kind == "linear":
        model = LinearModel(
            schema,
            w0=rng.normal(0.0, config.sigma),
            weights=rng.normal(0.0, config.sigma, schema.d),
        )
    else:
        model = MvfmModel(
            schema,
            config.k,
            w0=rng.normal(0.0, config.sigma),
            first_order=rng.normal(0.0, config.sigma, schema.d),
            latent=rng.normal(0.0, config.sigma, (schema.d, config.k)),
        )
    indptr, gidx, vals, vview, labels = dataset.packed()
    rows = _feature_rows(gidx, vview)
    n = len(dataset)
    shuffle_rng = np.random.default_rng([config.seed, 1])
    trace = []
    prev = None
    converged = False
    epochs_run = 0
    for epoch in range(1, config.epochs + 1):
        if config.shuffle:
            order = shuffle_rng.permutation(n)
        else:
            order = np.arange(n)
        eta_t = config.eta / (1.0 + config.decay * (epoch - 1))
        for i in order:
            lo, hi = int(indptr[i]), int(indptr[i + 1])
            r = rows[lo:hi]
            x = vals[lo:hi]
            if kind == "linear":
                score = model.w0 + float(np.dot(x, model.weights[r]))
            else:
                s = _mvfm_view_sums(model, r, x, vview[lo:hi])
                total = s.sum(axis=0)
                pairs = 0.5 * float(np.dot(total, total) - np.sum(s * s))
                score = model.w0 + float(np.dot(x, model.first_order[r])) + pairs
            if not math.isfinite(score):
                raise DivergenceError(
                    f"training diverged at epoch {epoch}", epoch=epoch
                )
            dloss = loss_derivative(config.loss, score, labels[i])
            if kind == "linear":
                model.weights[r] -= eta_t * (
                    dloss * x
                    + config.lam * reg_gradients(config.reg, model.weights[r], config.epsilon)
                )
            else:
                model.first_order[r] -= eta_t * (
                    dloss * x
                    + config.lam
                    * reg_gradients(config.reg, model.first_order[r], config.epsilon)
                )
                if r.size:
                    grads = x[:, None] * (total[None, :] - s[vview[lo:hi]])
                    model.latent[r] -= eta_t * (
                        dloss * grads
                        + config.lam
                        * reg_gradients(config.reg, model.latent[r], config.epsilon)
                    )
            model.w0 -= eta_t * (
                dloss + config.lam * reg_gradient(config.reg, model.w0, config.epsilon)
            )
        if not np.all(np.isfinite(_all_parameters(model))):
            raise DivergenceError(f"training diverged at epoch {epoch}", epoch=epoch)
        value = baseline_objective(model, dataset, config)
        if not math.isfinite(value):
            raise DivergenceError(f"non-finite objective at epoch {epoch}", epoch=epoch)
        trace.append(value)
        epochs_run = epoch
        if prev is not None and abs(value - prev) < config.tol * max(1.0, abs(prev)):
            converged = True
            break
        prev = value
    final = baseline_objective(model, dataset, config)
    return model, TrainReport(epochs_run, trace, final, converged)
