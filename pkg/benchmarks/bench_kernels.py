"""Timing comparison of the compiled kernels against the NumPy fallback.

Run:  python benchmarks/bench_kernels.py
"""
import time

import numpy as np

from berezin import _kernels
from berezin._kernels import _fallback

try:
    from berezin import _fastkernels as compiled
except ImportError:
    compiled = None


def timeit(fn, *args, repeats=5):
    best = np.inf
    for _ in range(repeats):
        start = time.perf_counter()
        fn(*args)
        best = min(best, time.perf_counter() - start)
    return best


def main():
    rng = np.random.default_rng(0)
    nodes = 0.9 * rng.uniform(0.01, 1, 400_000) * np.exp(
        2j * np.pi * rng.uniform(size=400_000)
    )
    zs = 0.85 * rng.uniform(0, 1, 40) * np.exp(2j * np.pi * rng.uniform(size=40))
    poly = rng.standard_normal(81) + 1j * rng.standard_normal(81)
    grid = rng.standard_normal((81, 81)) + 1j * rng.standard_normal((81, 81))
    points = nodes[:20_000]

    cases = [
        ("kernel_matrix (40 x 400k)", (nodes, zs)),
        ("poly_eval_many (deg 80, 400k pts)", (poly, nodes)),
        ("bidegree_eval_many (81x81, 20k pts)", (grid, points)),
    ]
    print(f"active implementation: {_kernels.IMPL}")
    header = f"{'kernel':38s} {'numpy':>10s} {'compiled':>10s} {'speedup':>8s}"
    print(header)
    print("-" * len(header))
    for name, args in cases:
        fn_name = name.split()[0]
        slow = timeit(getattr(_fallback, fn_name), *args)
        if compiled is not None:
            fast = timeit(getattr(compiled, fn_name), *args)
            np.testing.assert_allclose(
                getattr(compiled, fn_name)(*args),
                getattr(_fallback, fn_name)(*args),
                rtol=1e-10, atol=1e-10,
            )
            print(f"{name:38s} {slow * 1e3:9.1f}ms {fast * 1e3:9.1f}ms {slow / fast:7.1f}x")
        else:
            print(f"{name:38s} {slow * 1e3:9.1f}ms {'n/a':>10s} {'n/a':>8s}")


if __name__ == "__main__":
    main()
