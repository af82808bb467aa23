# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled prefix scan. Mirrors ``rulecraft._kernels_py.prefix_scan``."""
import numpy as np

from libc.math cimport fabs, sqrt
from libc.stdlib cimport calloc, free

ctypedef unsigned long long u64


def prefix_scan(const long long[::1] order, const double[::1] gvec, const double[::1] hvec,
                const double[:, ::1] basis, const u64[::1] keys, int kind,
                double eps, double lam, double rad_tol):
    cdef Py_ssize_t l = order.shape[0]
    cdef Py_ssize_t t = basis.shape[0]
    values = np.empty(l, dtype=np.float64)
    fps = np.empty(l, dtype=np.uint64)
    cdef double[::1] v = values
    cdef u64[::1] fp = fps
    cdef double G = 0.0, H = 0.0, rad, nsq, denom
    cdef u64 acc = 0
    cdef Py_ssize_t i, k, r
    cdef double* N = <double*> calloc(t if t > 0 else 1, sizeof(double))
    if N == NULL:
        raise MemoryError()
    try:
        with nogil:
            for i in range(l):
                r = order[i]
                G += gvec[r]
                acc ^= keys[r]
                fp[i] = acc
                if kind == 0:
                    v[i] = fabs(G) / sqrt(<double>(i + 1))
                elif kind == 1:
                    v[i] = fabs(G)
                elif kind == 2:
                    H += hvec[r]
                    denom = H + lam
                    v[i] = fabs(G) / sqrt(denom) if denom > 0 else 0.0
                else:
                    nsq = 0.0
                    for k in range(t):
                        N[k] += basis[k, r]
                        nsq += N[k] * N[k]
                    rad = (i + 1) - nsq
                    if rad <= rad_tol * (i + 1):
                        v[i] = 0.0
                    else:
                        v[i] = fabs(G) / (sqrt(rad) + eps)
    finally:
        free(N)
    return values, fps
