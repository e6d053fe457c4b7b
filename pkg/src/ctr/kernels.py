"""Kernel backend selection: compiled extension if available, else pure Python.

Set CTR_PURE_PY=1 to force the fallback lane. Both lanes are bit-identical;
benchmarks/bench_kernels.py compares their speed.
"""

import os

if os.environ.get("CTR_PURE_PY"):
    from . import _pykernels as _impl

    BACKEND = "python"
else:
    try:
        from . import _ckernels as _impl

        BACKEND = "cython"
    except ImportError:
        from . import _pykernels as _impl

        BACKEND = "python"

best_response_kernel = _impl.best_response_kernel
policy_eval_kernel = _impl.policy_eval_kernel
