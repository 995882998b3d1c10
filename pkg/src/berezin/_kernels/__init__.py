"""Hot numerical kernels with a compiled fast path.

At import time we try the Cython extension built by setup.py; if it is
missing (pure-Python install, unsupported platform) the NumPy fallback is
selected. Both expose the same functions; `IMPL` records which one is
active.
"""
try:
    from berezin._fastkernels import (  # type: ignore[attr-defined]
        kernel_matrix,
        poly_eval_many,
        bidegree_eval_many,
    )

    IMPL = "compiled"
except ImportError:  # pragma: no cover - depends on build environment
    from berezin._kernels._fallback import (
        kernel_matrix,
        poly_eval_many,
        bidegree_eval_many,
    )

    IMPL = "numpy"

__all__ = ["kernel_matrix", "poly_eval_many", "bidegree_eval_many", "IMPL"]
