"""Multi-view machine model core.

The model scores an instance by summing, over every combination of at most
one feature per view, the product of the chosen feature values and a jointly
factorized interaction weight. Appending a constant-1 slot to each view folds
the bias and every lower interaction order into a single m-way weight tensor,
and a rank-k factorization of that tensor leaves one (I_v + 1) x k factor
matrix per view as the only parameters.

Scoring never materializes the weight tensor: per-view sums of value-weighted
factor rows reduce it to O(k * (m + nnz)) work (`view_factor_sums`,
`predict_fast`). `predict_naive` is the deliberately brute-force enumeration
used to cross-check that path at test scale.

Public index arguments (views, feature positions, factor columns) are
1-based, matching the on-disk dataset format; position I_v + 1 addresses the
constant-1 bias slot of view v.
"""

import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from . import kernels, tensors
from .errors import OracleScaleError, SchemaError


@dataclass(frozen=True)
class ViewSchema:
    """Per-view feature counts; views are addressed 1..m."""

    dims: tuple

    def __post_init__(self):
        dims = tuple(int(d) for d in self.dims)
        if not dims:
            raise ValueError("schema needs at least one view")
        if any(d < 1 for d in dims):
            raise ValueError(f"view dimensionalities must be >= 1, got {dims}")
        object.__setattr__(self, "dims", dims)

    @property
    def m(self):
        return len(self.dims)

    @property
    def d(self):
        return sum(self.dims)

    @property
    def total_rows(self):
        """Rows of the stacked factor layout: one per feature plus one bias
        row per view."""
        return self.d + self.m

    @cached_property
    def row_starts(self):
        """First stacked row of each view's block (0-based)."""
        starts = np.empty(self.m, dtype=np.intp)
        pos = 0
        for v, dim in enumerate(self.dims):
            starts[v] = pos
            pos += dim + 1
        starts.setflags(write=False)
        return starts

    @cached_property
    def bias_rows(self):
        """Stacked row of each view's constant-1 bias factor (0-based)."""
        rows = self.row_starts + np.asarray(self.dims, dtype=np.intp)
        rows.setflags(write=False)
        return rows


def _check_view(schema, view):
    if not 1 <= view <= schema.m:
        raise ValueError(f"view {view} out of range 1..{schema.m}")


def augment_dimension(schema, view):
    """Length of view ``view`` once the constant-1 slot is appended."""
    _check_view(schema, view)
    return schema.dims[view - 1] + 1


class SparseViewVector:
    """Sorted sparse entries of one view; positions are 1-based.

    Explicit zeros are dropped so the stored entries are exactly the
    coordinates the trainer touches; duplicate positions are an error rather
    than being summed.
    """

    __slots__ = ("indices", "values")

    def __init__(self, indices=(), values=()):
        idx = np.array(indices, dtype=np.intp, copy=True).ravel()
        val = np.array(values, dtype=np.float64, copy=True).ravel()
        if idx.size != val.size:
            raise ValueError("indices and values differ in length")
        if idx.size:
            if idx.min() < 1:
                raise ValueError("feature positions are 1-based")
            if not np.all(np.isfinite(val)):
                raise ValueError("feature values must be finite")
            if not np.all(idx[1:] > idx[:-1]):
                order = np.argsort(idx, kind="stable")
                idx = idx[order]
                val = val[order]
                if np.any(idx[1:] == idx[:-1]):
                    dup = int(idx[:-1][idx[1:] == idx[:-1]][0])
                    raise ValueError(f"duplicate feature position {dup}")
            keep = val != 0.0
            if not keep.all():
                idx = idx[keep]
                val = val[keep]
        idx.setflags(write=False)
        val.setflags(write=False)
        self.indices = idx
        self.values = val

    @classmethod
    def from_entries(cls, entries):
        entries = list(entries)
        if not entries:
            return cls()
        idx, val = zip(*entries)
        return cls(idx, val)

    @property
    def entries(self):
        return [(int(i), float(x)) for i, x in zip(self.indices, self.values)]

    def value_at(self, position):
        """Stored value at a 1-based position, 0.0 if absent."""
        pos = int(np.searchsorted(self.indices, position))
        if pos < self.indices.size and self.indices[pos] == position:
            return float(self.values[pos])
        return 0.0

    def __len__(self):
        return int(self.indices.size)

    def __eq__(self, other):
        if not isinstance(other, SparseViewVector):
            return NotImplemented
        return np.array_equal(self.indices, other.indices) and np.array_equal(
            self.values, other.values
        )

    def __repr__(self):
        return f"SparseViewVector({self.entries})"


class MultiViewInstance:
    """One labeled example: exactly one sparse vector per view."""

    __slots__ = ("views", "label")

    def __init__(self, views, label):
        self.views = tuple(
            v if isinstance(v, SparseViewVector) else SparseViewVector.from_entries(v)
            for v in views
        )
        self.label = float(label)
        if not math.isfinite(self.label):
            raise ValueError("label must be finite")

    @property
    def nnz(self):
        return sum(len(v) for v in self.views)

    def validate(self, schema):
        if len(self.views) != schema.m:
            raise SchemaError(
                f"instance has {len(self.views)} views, schema has {schema.m}"
            )
        for v, (view, dim) in enumerate(zip(self.views, schema.dims), start=1):
            if len(view) and int(view.indices[-1]) > dim:
                raise SchemaError(
                    f"view {v}: position {int(view.indices[-1])} exceeds "
                    f"dimensionality {dim}"
                )

    def __eq__(self, other):
        if not isinstance(other, MultiViewInstance):
            return NotImplemented
        return self.label == other.label and self.views == other.views

    def __repr__(self):
        return f"MultiViewInstance(nnz={self.nnz}, label={self.label})"


def pack_instance(schema, instance):
    """Flatten an instance to kernel arrays (rows, values, view ids)."""
    instance.validate(schema)
    total = instance.nnz
    gidx = np.empty(total, dtype=np.intp)
    vals = np.empty(total, dtype=np.float64)
    vview = np.empty(total, dtype=np.intp)
    starts = schema.row_starts
    pos = 0
    for v, view in enumerate(instance.views):
        nv = len(view)
        gidx[pos : pos + nv] = starts[v] + view.indices - 1
        vals[pos : pos + nv] = view.values
        vview[pos : pos + nv] = v
        pos += nv
    return gidx, vals, vview


class MvmModel:
    """Factorized full-order interaction model over a multi-view schema.

    ``weights`` stacks the per-view factor matrices: view v occupies rows
    row_starts[v] .. row_starts[v] + I_v, the last row of each block being
    the bias factor tied to the view's constant-1 slot. Bias rows are always
    allocated; with ``augment=False`` they are pinned to zero and excluded
    from sums, gradients, and updates, so the model scores only the complete
    one-feature-per-view products.

    The model is safe for concurrent readers; training mutates ``weights``
    in place and needs exclusive access.
    """

    family = "mvm"
    __slots__ = ("schema", "k", "augment", "weights")

    def __init__(self, schema, k, augment=True, weights=None):
        if int(k) < 1:
            raise ValueError("k must be >= 1")
        self.schema = schema
        self.k = int(k)
        self.augment = bool(augment)
        rows = schema.total_rows
        if weights is None:
            weights = np.zeros((rows, self.k))
        else:
            weights = np.array(weights, dtype=np.float64, copy=True)
            if weights.shape != (rows, self.k):
                raise ValueError(
                    f"weights shape {weights.shape}, expected {(rows, self.k)}"
                )
            if not np.all(np.isfinite(weights)):
                raise ValueError("model weights must be finite")
        if not self.augment:
            weights[schema.bias_rows] = 0.0
        self.weights = weights

    @classmethod
    def from_factors(cls, schema, factors, augment=True):
        """Build from per-view factor matrices of shape (I_v + 1, k)."""
        mats = [np.asarray(a, dtype=np.float64) for a in factors]
        if len(mats) != schema.m:
            raise ValueError(f"expected {schema.m} factor matrices, got {len(mats)}")
        if any(a.ndim != 2 for a in mats):
            raise ValueError("factor matrices must be 2-d")
        k = mats[0].shape[1]
        if any(a.shape[1] != k for a in mats):
            raise ValueError("factor matrices disagree on the column count")
        for v, (a, dim) in enumerate(zip(mats, schema.dims), start=1):
            if a.shape[0] != dim + 1:
                raise ValueError(
                    f"view {v}: factor matrix has {a.shape[0]} rows, "
                    f"expected {dim + 1}"
                )
        return cls(schema, k, augment=augment, weights=np.concatenate(mats, axis=0))

    @property
    def factors(self):
        """Per-view factor matrices as views into the stacked weights."""
        out = []
        for start, dim in zip(self.schema.row_starts, self.schema.dims):
            out.append(self.weights[start : start + dim + 1])
        return out

    @property
    def num_parameters(self):
        """Entries the trainer can touch: k*(m+d) augmented, k*d otherwise."""
        rows = self.schema.total_rows if self.augment else self.schema.d
        return self.k * rows

    def copy(self):
        return MvmModel(self.schema, self.k, self.augment, self.weights)

    def __repr__(self):
        return (
            f"MvmModel(dims={self.schema.dims}, k={self.k}, augment={self.augment})"
        )


def in_use_parameters(model, include_bias=True):
    """Flat array of the parameters the trainer updates.

    Bias rows count as in use only when the model augments; pass
    ``include_bias=False`` to additionally drop them (regularizer exclusion).
    """
    if model.augment and include_bias:
        return model.weights.ravel()
    keep = np.ones(model.schema.total_rows, dtype=bool)
    keep[model.schema.bias_rows] = False
    return model.weights[keep].ravel()


def view_factor_sums(model, instance):
    """m x k matrix of value-weighted factor-row sums, one row per view.

    Row v, column f is sum_i z_i * a_v[i, f] over view v's stored entries,
    including the constant-1 bias entry when the model augments. Scores and
    gradients are assembled from this matrix, which is why the trainer caches
    it per instance.
    """
    gidx, vals, vview = pack_instance(model.schema, instance)
    return kernels.view_sums(
        model.weights, model.schema.bias_rows, model.augment, gidx, vals, vview
    )


def predict_fast(model, instance):
    """Model score via per-view factor sums; O(k * (m + nnz))."""
    gidx, vals, vview = pack_instance(model.schema, instance)
    return kernels.predict_one(
        model.weights, model.schema.bias_rows, model.augment, gidx, vals, vview
    )


def predict_dataset(model, dataset):
    """Scores for every instance of a dataset, in order."""
    if dataset.schema != model.schema:
        raise SchemaError(
            f"dataset schema {dataset.schema.dims} does not match "
            f"model schema {model.schema.dims}"
        )
    indptr, gidx, vals, vview, _ = dataset.packed()
    return kernels.predict_scores(
        model.weights, model.schema.bias_rows, model.augment, indptr, gidx, vals, vview
    )


def predict_naive(model, instance):
    """Brute-force score: reconstruct the dense weight tensor and sum
    (prod_v z_{i_v}) * w over every index tuple.

    Exponential in the number of views; exists purely to cross-check
    `predict_fast` at test scale.
    """
    instance.validate(model.schema)
    count = math.prod(d + 1 for d in model.schema.dims)
    if count > tensors.MAX_ORACLE_ENTRIES:
        raise OracleScaleError(
            f"naive prediction would enumerate {count} tuples, "
            f"cap is {tensors.MAX_ORACLE_ENTRIES}"
        )
    w = tensors.cp_reconstruct([np.asarray(f) for f in model.factors])
    zs = []
    for view, dim in zip(instance.views, model.schema.dims):
        z = np.zeros(dim + 1)
        if len(view):
            z[view.indices - 1] = view.values
        if model.augment:
            z[dim] = 1.0  # bias slot stays 0 otherwise, killing those tuples
        zs.append(z)
    total = 0.0
    for idx in w.indices():
        zprod = 1.0
        for v, i in enumerate(idx):
            zprod *= zs[v][i]
        total += zprod * w[idx]
    return float(total)


def model_gradient(model, instance, view, row, factor):
    """d score / d a_view[row, factor]: the coordinate's z value times the
    product of the other views' factor sums.

    Independent of the coordinate's own value (the score is affine in each
    single parameter). Coordinates are 1-based; row I_v + 1 is the bias row
    and is only in use when the model augments.
    """
    _check_view(model.schema, view)
    dim = model.schema.dims[view - 1]
    limit = dim + 1 if model.augment else dim
    if not 1 <= row <= limit:
        raise ValueError(f"row {row} out of range 1..{limit} for view {view}")
    if not 1 <= factor <= model.k:
        raise ValueError(f"factor {factor} out of range 1..{model.k}")
    s = view_factor_sums(model, instance)
    z = 1.0 if row == dim + 1 else instance.views[view - 1].value_at(row)
    prod = 1.0
    for u in range(model.schema.m):
        if u != view - 1:
            prod *= s[u, factor - 1]
    return float(z * prod)


def interaction_weight(model, indices):
    """Weight of one index tuple (1-based, bias slot I_v + 1 allowed):
    sum over factors of the product of the addressed factor-row entries."""
    idx = tuple(int(i) for i in indices)
    if len(idx) != model.schema.m:
        raise ValueError(f"expected {model.schema.m} indices, got {len(idx)}")
    rows = []
    for v, (i, dim) in enumerate(zip(idx, model.schema.dims)):
        if not 1 <= i <= dim + 1:
            raise ValueError(f"index {i} out of range 1..{dim + 1} for view {v + 1}")
        rows.append(int(model.schema.row_starts[v]) + i - 1)
    total = 0.0
    for f in range(model.k):
        prod = 1.0
        for r in rows:
            prod *= model.weights[r, f]
        total += prod
    return float(total)


def global_bias(model):
    """Interaction weight of the all-bias tuple: the model's constant offset."""
    if not model.augment:
        raise ValueError("global bias is undefined without augmentation")
    return interaction_weight(model, tuple(d + 1 for d in model.schema.dims))
