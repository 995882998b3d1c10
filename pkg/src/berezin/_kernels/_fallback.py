"""Pure-NumPy implementations of the hot kernels.

Used whenever the compiled extension is unavailable; the compiled module
exposes the same three functions with identical semantics.
"""
import numpy as np

IMPL = "numpy"


def kernel_matrix(nodes, zs):
    """Berezin kernel (1-|z|^2)^2 / |1 - zeta*conj(z)|^4 for every (z, zeta) pair.

    nodes: complex array (N,); zs: complex array (M,). Returns float64 (M, N).
    """
    nodes = np.asarray(nodes, dtype=np.complex128)
    zs = np.asarray(zs, dtype=np.complex128)
    d = 1.0 - nodes[None, :] * np.conj(zs)[:, None]
    m2 = d.real * d.real + d.imag * d.imag
    pref = (1.0 - (zs.real * zs.real + zs.imag * zs.imag)) ** 2
    return pref[:, None] / (m2 * m2)


def poly_eval_many(coeffs, zs):
    """Evaluate sum_m coeffs[m] z^m by Horner at each z."""
    coeffs = np.asarray(coeffs, dtype=np.complex128)
    zs = np.asarray(zs, dtype=np.complex128)
    acc = np.full(zs.shape, coeffs[-1], dtype=np.complex128)
    for m in range(len(coeffs) - 2, -1, -1):
        acc = acc * zs + coeffs[m]
    return acc


def bidegree_eval_many(coeffs, zs):
    """Evaluate sum_{m,n} coeffs[m,n] z^m conj(z)^n at each z.

    Horner over conj(z) inside, then over z.
    """
    coeffs = np.asarray(coeffs, dtype=np.complex128)
    zs = np.asarray(zs, dtype=np.complex128)
    zb = np.conj(zs)
    rows, cols = coeffs.shape
    acc = np.zeros(zs.shape, dtype=np.complex128)
    for m in range(rows - 1, -1, -1):
        row = np.full(zs.shape, coeffs[m, cols - 1], dtype=np.complex128)
        for n in range(cols - 2, -1, -1):
            row = row * zb + coeffs[m, n]
        acc = acc * zs + row
    return acc
