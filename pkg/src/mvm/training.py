"""Stochastic gradient training for the multi-view machine model.

One pass over an instance computes the per-view factor sums and the score
once, then steps every touched coordinate (stored nonzeros, plus one bias row
per view when augmenting) with the loss gradient chained through those cached
sums. The sums are deliberately not refreshed between coordinate updates of
the same instance: refreshing would cost O(k*d) per coordinate.

The reported objective is the summed per-instance loss plus lam times the
regularizer over every in-use parameter, evaluated once per epoch.
"""

import math
from dataclasses import dataclass, field, replace

import numpy as np

from . import kernels
from .errors import DivergenceError
from .model import (
    MultiViewInstance,
    MvmModel,
    SparseViewVector,
    in_use_parameters,
    model_gradient,
    pack_instance,
    predict_dataset,
    predict_fast,
)
from .objectives import (
    DEFAULT_EPSILON,
    LOSS_IDS,
    LOSSES,
    REG_IDS,
    REGS,
    loss_derivative,
    loss_value,
    loss_values,
    reg_gradient,
    reg_value,
)


@dataclass
class TrainConfig:
    """Hyperparameters shared by `train`, `baseline_train`, and the CLI.

    ``sigma`` must be positive: at zero initialization every per-view sum
    vanishes, so every gradient vanishes and SGD cannot leave the origin.
    ``decay`` scales the step per epoch as eta / (1 + decay * epoch).
    """

    k: int = 8
    loss: str = "logit"
    reg: str = "l2"
    lam: float = 1e-4
    eta: float = 0.05
    sigma: float = 0.01
    epochs: int = 20
    seed: int = 42
    augment: bool = True
    shuffle: bool = True
    tol: float = 1e-6
    epsilon: float = DEFAULT_EPSILON
    decay: float = 0.0
    reg_bias: bool = True

    def __post_init__(self):
        if self.loss not in LOSSES:
            raise ValueError(f"unknown loss {self.loss!r}, expected one of {LOSSES}")
        if self.reg not in REGS:
            raise ValueError(f"unknown regularizer {self.reg!r}, expected one of {REGS}")
        if self.k < 1:
            raise ValueError("k must be >= 1")
        if self.lam < 0:
            raise ValueError("lam must be nonnegative")
        if self.eta <= 0:
            raise ValueError("eta must be positive")
        if self.sigma <= 0:
            raise ValueError("sigma must be positive (zero init is a stationary point)")
        if self.epochs < 0:
            raise ValueError("epochs must be nonnegative")
        if self.tol < 0:
            raise ValueError("tol must be nonnegative")
        if self.epsilon <= 0:
            raise ValueError("epsilon must be positive")
        if self.decay < 0:
            raise ValueError("decay must be nonnegative")


@dataclass
class TrainReport:
    """Outcome of a training run; the trace has one objective per epoch run."""

    epochs_run: int
    objective_trace: list = field(default_factory=list)
    final_objective: float = math.nan
    converged: bool = False


def _check_labels(loss, labels):
    if loss in ("logit", "hinge") and not np.all(np.abs(labels) == 1.0):
        raise ValueError(f"{loss} loss needs labels in {{-1, +1}}")


def init_model(schema, config):
    """Fresh model with N(0, sigma) entries from a generator seeded by
    ``config.seed``; identical seed gives a bit-identical model."""
    if config.sigma <= 0:
        raise ValueError("sigma must be positive")
    rng = np.random.default_rng(config.seed)
    weights = rng.normal(0.0, config.sigma, size=(schema.total_rows, config.k))
    return MvmModel(schema, config.k, augment=config.augment, weights=weights)


def instance_update(model, instance, config):
    """One SGD step on a single instance; mutates the model in place.

    Returns the number of parameter updates applied: k * (nnz + m) when the
    model augments (every bias slot has z = 1), k * nnz otherwise.
    """
    _check_labels(config.loss, np.asarray([instance.label]))
    gidx, vals, vview = pack_instance(model.schema, instance)
    indptr = np.array([0, gidx.size], dtype=np.intp)
    labels = np.array([instance.label], dtype=np.float64)
    order = np.zeros(1, dtype=np.intp)
    updates, bad = kernels.sgd_pass(
        model.weights, model.schema.bias_rows, model.augment,
        indptr, gidx, vals, vview, labels, order,
        LOSS_IDS[config.loss], REG_IDS[config.reg],
        config.epsilon, config.lam, config.eta, config.reg_bias,
    )
    if bad >= 0:
        raise DivergenceError("non-finite model score during update")
    return updates


def objective(model, dataset, config):
    """Regularized objective: summed loss plus lam times the regularizer
    over the in-use parameters."""
    scores = predict_dataset(model, dataset)
    loss_sum = float(np.sum(loss_values(config.loss, scores, dataset.labels)))
    params = in_use_parameters(model, include_bias=config.reg_bias)
    return loss_sum + config.lam * reg_value(config.reg, params, config.epsilon)


def train(dataset, config):
    """SGD over the dataset per the config; returns (model, TrainReport).

    Runs up to ``config.epochs`` passes, shuffling the instance order each
    epoch when ``config.shuffle`` (a seed-derived permutation), and stops
    early once the relative objective change drops below ``config.tol``.
    Fully deterministic for fixed (seed, data, config).
    """
    if len(dataset) == 0:
        raise ValueError("cannot train on an empty dataset")
    _check_labels(config.loss, dataset.labels)
    model = init_model(dataset.schema, config)
    indptr, gidx, vals, vview, labels = dataset.packed()
    n = len(dataset)
    # second stream; the init draw already consumed default_rng(seed)
    shuffle_rng = np.random.default_rng([config.seed, 1])
    trace = []
    prev = None
    converged = False
    epochs_run = 0
    for epoch in range(1, config.epochs + 1):
        if config.shuffle:
            order = shuffle_rng.permutation(n).astype(np.intp, copy=False)
        else:
            order = np.arange(n, dtype=np.intp)
        eta_t = config.eta / (1.0 + config.decay * (epoch - 1))
        _, bad = kernels.sgd_pass(
            model.weights, model.schema.bias_rows, model.augment,
            indptr, gidx, vals, vview, labels, order,
            LOSS_IDS[config.loss], REG_IDS[config.reg],
            config.epsilon, config.lam, eta_t, config.reg_bias,
        )
        if bad >= 0 or not np.all(np.isfinite(model.weights)):
            raise DivergenceError(f"training diverged at epoch {epoch}", epoch=epoch)
        value = objective(model, dataset, config)
        if not math.isfinite(value):
            raise DivergenceError(
                f"non-finite objective at epoch {epoch}", epoch=epoch
            )
        trace.append(value)
        epochs_run = epoch
        if prev is not None and abs(value - prev) < config.tol * max(1.0, abs(prev)):
            converged = True
            break
        prev = value
    final = objective(model, dataset, config)
    return model, TrainReport(epochs_run, trace, final, converged)


def grad_check(schema, config, trials=200, step=1e-5):
    """Worst disagreement between the analytic per-coordinate gradient of the
    regularized per-instance objective and central finite differences.

    Random models, instances, labels, and coordinates each trial; hinge
    trials too close to the kink |y * score - 1| < 1e-3 are redrawn. The
    returned error is |analytic - numeric| / max(1, |analytic|, |numeric|).
    """
    rng = np.random.default_rng(config.seed)
    worst = 0.0
    done = 0
    attempts = 0
    while done < trials:
        attempts += 1
        if attempts > 50 * trials:
            raise RuntimeError("gradient check could not draw enough usable trials")
        weights = rng.normal(0.0, 0.5, size=(schema.total_rows, config.k))
        model = MvmModel(schema, config.k, augment=config.augment, weights=weights)
        views = []
        for dim in schema.dims:
            mask = rng.random(dim) < 0.6
            idx = np.flatnonzero(mask) + 1
            views.append(SparseViewVector(idx, rng.normal(0.0, 1.0, idx.size)))
        if config.loss == "square":
            y = float(rng.normal())
        else:
            y = float(rng.choice((-1.0, 1.0)))
        instance = MultiViewInstance(views, y)
        view = int(rng.integers(1, schema.m + 1))
        dim = schema.dims[view - 1]
        limit = dim + 1 if config.augment else dim
        row = int(rng.integers(1, limit + 1))
        factor = int(rng.integers(1, config.k + 1))
        score = predict_fast(model, instance)
        if config.loss == "hinge" and abs(y * score - 1.0) < 1e-3:
            continue
        r = int(model.schema.row_starts[view - 1]) + row - 1
        theta = float(model.weights[r, factor - 1])
        reg_term = 0.0
        if config.reg_bias or row != dim + 1:
            reg_term = config.lam * reg_gradient(config.reg, theta, config.epsilon)
        analytic = (
            loss_derivative(config.loss, score, y)
            * model_gradient(model, instance, view, row, factor)
            + reg_term
        )

        def point_objective():
            value = loss_value(config.loss, predict_fast(model, instance), y)
            params = in_use_parameters(model, include_bias=config.reg_bias)
            return value + config.lam * reg_value(config.reg, params, config.epsilon)

        model.weights[r, factor - 1] = theta + step
        upper = point_objective()
        model.weights[r, factor - 1] = theta - step
        lower = point_objective()
        model.weights[r, factor - 1] = theta
        numeric = (upper - lower) / (2.0 * step)
        err = abs(analytic - numeric) / max(1.0, abs(analytic), abs(numeric))
        worst = max(worst, err)
        done += 1
    return worst


def select_lambda(train_set, valid_set, config, grid):
    """Train one model per candidate lam and return (best lam, results).

    Each candidate re-initializes deterministically from ``config.seed``;
    the score is the mean validation loss and ties go to the larger lam.
    ``results`` lists (lam, validation loss) in grid order.
    """
    lams = [float(g) for g in grid]
    if not lams:
        raise ValueError("empty lambda grid")
    if len(valid_set) == 0:
        raise ValueError("empty validation set")
    results = []
    for lam in lams:
        cfg = replace(config, lam=lam)
        model, _ = train(train_set, cfg)
        scores = predict_dataset(model, valid_set)
        vloss = float(np.mean(loss_values(config.loss, scores, valid_set.labels)))
        results.append((lam, vloss))
    best_loss = min(score for _, score in results)
    best = max(lam for lam, score in results if score == best_loss)
    return best, results
