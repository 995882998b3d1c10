# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot kernels: Berezin kernel evaluation and series evaluation.

Same contracts as berezin._kernels._fallback; selected automatically at
import when the extension built.
"""
import numpy as np

cimport numpy as cnp

cnp.import_array()

IMPL = "compiled"


def kernel_matrix(nodes, zs):
    """Berezin kernel (1-|z|^2)^2 / |1 - zeta*conj(z)|^4 for every (z, zeta)."""
    cdef cnp.ndarray[cnp.complex128_t, ndim=1] nd = np.ascontiguousarray(nodes, dtype=np.complex128)
    cdef cnp.ndarray[cnp.complex128_t, ndim=1] zv = np.ascontiguousarray(zs, dtype=np.complex128)
    cdef Py_ssize_t n = nd.shape[0], m = zv.shape[0]
    cdef cnp.ndarray[cnp.float64_t, ndim=2] out = np.empty((m, n), dtype=np.float64)
    cdef Py_ssize_t i, j
    cdef double zr, zi, pref, dr, di, m2
    cdef double nr, ni
    for i in range(m):
        zr = zv[i].real
        zi = zv[i].imag
        pref = 1.0 - (zr * zr + zi * zi)
        pref = pref * pref
        for j in range(n):
            nr = nd[j].real
            ni = nd[j].imag
            # d = 1 - node * conj(z)
            dr = 1.0 - (nr * zr + ni * zi)
            di = -(ni * zr - nr * zi)
            m2 = dr * dr + di * di
            out[i, j] = pref / (m2 * m2)
    return out


def poly_eval_many(coeffs, zs):
    """Horner evaluation of sum_m coeffs[m] z^m at each z.

    Degree-outer, points-inner: one fused in-place pass per degree keeps
    instruction-level parallelism across points.
    """
    cdef cnp.ndarray[cnp.complex128_t, ndim=1] c = np.ascontiguousarray(coeffs, dtype=np.complex128)
    cdef cnp.ndarray[cnp.complex128_t, ndim=1] zv = np.ascontiguousarray(zs, dtype=np.complex128)
    cdef Py_ssize_t deg = c.shape[0], n = zv.shape[0]
    cdef cnp.ndarray[cnp.complex128_t, ndim=1] out = np.full(n, c[deg - 1], dtype=np.complex128)
    cdef Py_ssize_t i, m
    cdef double complex cm
    for m in range(deg - 2, -1, -1):
        cm = c[m]
        for i in range(n):
            out[i] = out[i] * zv[i] + cm
    return out


def bidegree_eval_many(coeffs, zs):
    """Evaluate sum_{m,n} coeffs[m,n] z^m conj(z)^n at each z (nested Horner)."""
    cdef cnp.ndarray[cnp.complex128_t, ndim=2] c = np.ascontiguousarray(coeffs, dtype=np.complex128)
    cdef cnp.ndarray[cnp.complex128_t, ndim=1] zv = np.ascontiguousarray(zs, dtype=np.complex128)
    cdef Py_ssize_t rows = c.shape[0], cols = c.shape[1], n = zv.shape[0]
    cdef cnp.ndarray[cnp.complex128_t, ndim=1] out = np.zeros(n, dtype=np.complex128)
    cdef cnp.ndarray[cnp.complex128_t, ndim=1] zb = np.conj(zv)
    cdef cnp.ndarray[cnp.complex128_t, ndim=1] row = np.empty(n, dtype=np.complex128)
    cdef Py_ssize_t i, m, k
    cdef double complex cm
    for m in range(rows - 1, -1, -1):
        cm = c[m, cols - 1]
        for i in range(n):
            row[i] = cm
        for k in range(cols - 2, -1, -1):
            cm = c[m, k]
            for i in range(n):
                row[i] = row[i] * zb[i] + cm
        for i in range(n):
            out[i] = out[i] * zv[i] + row[i]
    return out
