"""Small dense tensors for brute-force cross-checks.

Plain row-major storage and explicit index arithmetic throughout: this module
is the independent reference that the factorized model code is tested
against, so it stays loop-level simple and is only meant for tensors of a few
thousand entries.
"""

import itertools
import math

import numpy as np

from .errors import OracleScaleError

# Total-entry cap for anything this module is asked to materialize.
MAX_ORACLE_ENTRIES = 1_000_000


def row_major_strides(shape):
    """Element strides of a row-major array with the given extents."""
    strides = [1] * len(shape)
    for axis in range(len(shape) - 2, -1, -1):
        strides[axis] = strides[axis + 1] * shape[axis + 1]
    return tuple(strides)


def _check_size(shape):
    size = math.prod(shape)
    if size > MAX_ORACLE_ENTRIES:
        raise OracleScaleError(
            f"{size} entries exceed the {MAX_ORACLE_ENTRIES}-entry oracle cap"
        )
    return size


class DenseTensor:
    """Dense multi-way array stored as a flat row-major float64 vector.

    Index tuples are 0-based and must have exactly ``order`` components.
    """

    __slots__ = ("shape", "strides", "values")

    def __init__(self, shape, values):
        shape = tuple(int(extent) for extent in shape)
        if not shape or any(extent < 1 for extent in shape):
            raise ValueError(f"tensor extents must all be >= 1, got {shape}")
        size = _check_size(shape)
        flat = np.array(values, dtype=np.float64, copy=True).ravel()
        if flat.size != size:
            raise ValueError(f"shape {shape} needs {size} values, got {flat.size}")
        self.shape = shape
        self.strides = row_major_strides(shape)
        self.values = flat

    @property
    def order(self):
        return len(self.shape)

    def offset(self, indices):
        """Flat position of an index tuple."""
        if len(indices) != len(self.shape):
            raise ValueError(
                f"expected {len(self.shape)} indices, got {len(indices)}"
            )
        pos = 0
        for index, extent, stride in zip(indices, self.shape, self.strides):
            if not 0 <= index < extent:
                raise IndexError(f"index {tuple(indices)} out of bounds for {self.shape}")
            pos += index * stride
        return pos

    def __getitem__(self, indices):
        return float(self.values[self.offset(indices)])

    def indices(self):
        """All index tuples in row-major order."""
        return itertools.product(*(range(extent) for extent in self.shape))

    @property
    def as_array(self):
        """Copy reshaped to ``shape`` (convenience for comparisons)."""
        return self.values.reshape(self.shape).copy()

    def __eq__(self, other):
        if not isinstance(other, DenseTensor):
            return NotImplemented
        return self.shape == other.shape and np.array_equal(self.values, other.values)

    def __repr__(self):
        return f"DenseTensor(shape={self.shape})"


def tensor_product(x, y):
    """Outer product: result extents are x's followed by y's, entries are
    all pairwise products x[i] * y[j]."""
    _check_size(x.shape + y.shape)
    out = np.empty(x.values.size * y.values.size)
    pos = 0
    for xv in x.values:
        for yv in y.values:
            out[pos] = xv * yv
            pos += 1
    return DenseTensor(x.shape + y.shape, out)


def mode_k_product(x, matrix, mode):
    """Contract mode ``mode`` (1-based) of ``x`` with ``matrix``.

    ``matrix`` has shape (new_extent, old_extent): entry j along the new mode
    is the old entries weighted by matrix row j.
    """
    mat = np.asarray(matrix, dtype=np.float64)
    if mat.ndim != 2:
        raise ValueError("mode product needs a 2-d matrix")
    if not 1 <= mode <= x.order:
        raise ValueError(f"mode {mode} out of range 1..{x.order}")
    axis = mode - 1
    old_extent = x.shape[axis]
    if mat.shape[1] != old_extent:
        raise ValueError(
            f"matrix has {mat.shape[1]} columns, mode {mode} extent is {old_extent}"
        )
    new_shape = x.shape[:axis] + (mat.shape[0],) + x.shape[axis + 1 :]
    size = _check_size(new_shape)
    out = np.empty(size)
    for pos, idx in enumerate(itertools.product(*(range(e) for e in new_shape))):
        total = 0.0
        for old_i in range(old_extent):
            src = idx[:axis] + (old_i,) + idx[axis + 1 :]
            total += x[src] * mat[idx[axis], old_i]
        out[pos] = total
    return DenseTensor(new_shape, out)


def identity_tensor(order, extent):
    """Diagonal indicator tensor: entry 1.0 exactly where all indices agree."""
    if order < 1 or extent < 1:
        raise ValueError("order and extent must be >= 1")
    shape = (extent,) * order
    size = _check_size(shape)
    values = np.zeros(size)
    step = sum(row_major_strides(shape))
    for i in range(extent):
        values[i * step] = 1.0
    return DenseTensor(shape, values)


def cp_reconstruct(factors):
    """Dense tensor from factor matrices sharing a column count k.

    Entry (i_1, ..., i_m) is sum over f of the product of factors[v][i_v, f];
    equivalently the identity tensor mode-multiplied by every factor matrix,
    which the tests verify through `mode_k_product` as an independent route.
    """
    mats = [np.asarray(a, dtype=np.float64) for a in factors]
    if not mats:
        raise ValueError("need at least one factor matrix")
    if any(a.ndim != 2 for a in mats):
        raise ValueError("factor matrices must be 2-d")
    k = mats[0].shape[1]
    if k < 1:
        raise ValueError("factor matrices need at least one column")
    if any(a.shape[1] != k for a in mats):
        raise ValueError("factor matrices disagree on the column count")
    shape = tuple(a.shape[0] for a in mats)
    size = _check_size(shape)
    out = np.empty(size)
    for pos, idx in enumerate(itertools.product(*(range(e) for e in shape))):
        total = 0.0
        for f in range(k):
            prod = 1.0
            for a, i in zip(mats, idx):
                prod *= a[i, f]
            total += prod
        out[pos] = total
    return DenseTensor(shape, out)
