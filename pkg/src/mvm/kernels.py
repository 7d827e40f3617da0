"""Backend selection for the per-instance hot kernels.

``_cykernels`` is the compiled extension; ``_pykernels`` is its pure-Python
mirror, used when the extension is unavailable or when the environment
variable ``MVM_BACKEND=python`` forces it. Both produce bit-identical
results; benchmarks/bench_backends.py compares their speed.
"""

import os

if os.environ.get("MVM_BACKEND", "").lower() == "python":
    from . import _pykernels as _impl
else:
    try:
        from . import _cykernels as _impl
    except ImportError:
        from . import _pykernels as _impl

BACKEND = _impl.BACKEND_NAME

view_sums = _impl.view_sums
predict_one = _impl.predict_one
predict_scores = _impl.predict_scores
sgd_pass = _impl.sgd_pass
