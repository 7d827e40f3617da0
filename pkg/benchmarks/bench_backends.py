"""Compare the compiled SGD/prediction kernels against the pure-Python mirror.

Usage: python benchmarks/bench_backends.py [--n 20000] [--dim 50] [--k 8]

Times one full SGD pass and one full scoring pass over a synthetic three-view
workload for each backend, verifies the results agree bit for bit, and prints
the speedup.
"""

import argparse
import time

import numpy as np

from mvm import TrainConfig, ViewSchema, init_model, synth_generate
from mvm import _pykernels
from mvm.objectives import LOSS_IDS, REG_IDS

try:
    from mvm import _cykernels
except ImportError:
    _cykernels = None


def time_backend(impl, weights, schema, packed, order, repeats=3):
    indptr, gidx, vals, vview, labels = packed
    w = weights.copy()
    best_sgd = float("inf")
    for _ in range(repeats):
        started = time.perf_counter()
        impl.sgd_pass(w, schema.bias_rows, True, indptr, gidx, vals, vview,
                      labels, order, LOSS_IDS["logit"], REG_IDS["l2"],
                      1e-6, 1e-4, 0.01, True)
        best_sgd = min(best_sgd, time.perf_counter() - started)
    best_predict = float("inf")
    for _ in range(repeats):
        started = time.perf_counter()
        scores = impl.predict_scores(w, schema.bias_rows, True,
                                     indptr, gidx, vals, vview)
        best_predict = min(best_predict, time.perf_counter() - started)
    return best_sgd, best_predict, w, scores


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--n", type=int, default=20000)
    parser.add_argument("--dim", type=int, default=50)
    parser.add_argument("--k", type=int, default=8)
    parser.add_argument("--density", type=float, default=0.2)
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args()

    schema = ViewSchema((args.dim,) * 3)
    dataset, _ = synth_generate(schema, 2, args.n, args.density, 0.0, args.seed)
    packed = dataset.packed()
    nnz = packed[1].size
    weights = init_model(schema, TrainConfig(k=args.k, sigma=0.05, seed=1)).weights
    order = np.arange(args.n, dtype=np.intp)

    print(f"workload: n={args.n} dims={schema.dims} k={args.k} nnz={nnz}")
    header = f"{'backend':<8} {'sgd pass':>12} {'predict':>12} {'updates/s':>14}"
    print(header)
    print("-" * len(header))

    updates = args.k * (nnz + args.n * schema.m)
    results = {}
    backends = [("python", _pykernels)]
    if _cykernels is not None:
        backends.insert(0, ("cython", _cykernels))
    for name, impl in backends:
        sgd_s, pred_s, w, scores = time_backend(impl, weights, schema, packed, order)
        results[name] = (sgd_s, pred_s, w, scores)
        print(f"{name:<8} {sgd_s:>11.3f}s {pred_s:>11.3f}s {updates / sgd_s:>14.3e}")

    if len(results) == 2:
        c, p = results["cython"], results["python"]
        agree = np.array_equal(c[2], p[2]) and np.array_equal(c[3], p[3])
        print(f"speedup: sgd {p[0] / c[0]:.1f}x, predict {p[1] / c[1]:.1f}x; "
              f"bit-identical results: {agree}")
    else:
        print("compiled backend unavailable; nothing to compare")


if __name__ == "__main__":
    main()
