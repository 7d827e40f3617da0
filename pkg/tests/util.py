"""Shared random-object factories for the test suite."""

import numpy as np

from mvm import MultiViewInstance, MvmModel, SparseViewVector, ViewSchema


def rand_schema(rng, max_views=4, max_dim=5):
    m = int(rng.integers(1, max_views + 1))
    return ViewSchema(tuple(int(d) for d in rng.integers(1, max_dim + 1, m)))


def rand_model(rng, schema, k, augment=True, scale=1.0):
    weights = rng.normal(0.0, scale, size=(schema.total_rows, k))
    return MvmModel(schema, k, augment=augment, weights=weights)


def rand_view(rng, dim, density=0.6):
    mask = rng.random(dim) < density
    idx = np.flatnonzero(mask) + 1
    return SparseViewVector(idx, rng.normal(0.0, 1.0, idx.size))


def rand_instance(rng, schema, density=0.6, label=1.0):
    return MultiViewInstance(
        [rand_view(rng, dim, density) for dim in schema.dims], label
    )
