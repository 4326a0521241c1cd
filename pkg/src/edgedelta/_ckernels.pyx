# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled versions of the kernels in ``_kernels_py``; same signatures and results."""

import numpy as np
cimport numpy as cnp
from libc.stdint cimport uint64_t, int64_t

cnp.import_array()

cdef extern from *:
    int __builtin_popcountll(unsigned long long) nogil


cdef inline uint64_t _pack(const double[::1] y) noexcept nogil:
    cdef Py_ssize_t k
    cdef uint64_t out = 0
    for k in range(64):
        if y[k] >= 0.0:
            out |= (<uint64_t>1) << k
    return out


# Projections go through the same NumPy products as the fallback (BLAS is
# faster than a scalar loop, and sign bits then match exactly); only the bit
# packing is compiled.
def simhash64(projections, x):
    P = np.asarray(projections)
    v = np.asarray(x)
    if P.shape[0] != 64 or P.shape[1] != v.shape[0]:
        raise ValueError("projection/input dimension mismatch")
    cdef const double[::1] y = np.ascontiguousarray(P @ v, dtype=np.float64)
    return int(_pack(y))


def simhash64_batch(projections, xs):
    P = np.asarray(projections)
    X = np.asarray(xs)
    if P.shape[0] != 64 or P.shape[1] != X.shape[1]:
        raise ValueError("projection/input dimension mismatch")
    cdef const double[:, ::1] Y = np.ascontiguousarray(X @ P.T, dtype=np.float64)
    cdef Py_ssize_t i, n = Y.shape[0]
    out = np.empty(n, dtype=np.uint64)
    cdef uint64_t[::1] o = out
    with nogil:
        for i in range(n):
            o[i] = _pack(Y[i])
    return out


def best_match(vectors, rows, x):
    cdef const double[:, ::1] V = np.ascontiguousarray(vectors, dtype=np.float64)
    cdef const cnp.intp_t[::1] R = np.ascontiguousarray(rows, dtype=np.intp)
    cdef const double[::1] v = np.ascontiguousarray(x, dtype=np.float64)
    cdef Py_ssize_t i, j, n = R.shape[0], d = v.shape[0]
    cdef double acc, best = -1e300
    cdef Py_ssize_t pos = -1
    if n == 0:
        return -1, float("nan")
    with nogil:
        for i in range(n):
            acc = 0.0
            for j in range(d):
                acc += V[R[i], j] * v[j]
            if acc > best:
                best = acc
                pos = i
    return pos, best


def evict_argmax(insert_s, hits, ids, alive, double now_s, double w_time, double w_hits):
    cdef const double[::1] T = np.ascontiguousarray(insert_s, dtype=np.float64)
    cdef const int64_t[::1] H = np.ascontiguousarray(hits, dtype=np.int64)
    cdef const int64_t[::1] I = np.ascontiguousarray(ids, dtype=np.int64)
    cdef const cnp.uint8_t[::1] A = np.ascontiguousarray(alive, dtype=np.uint8)
    cdef Py_ssize_t i, best_i = -1, n = T.shape[0]
    cdef double s, best = 0.0
    with nogil:
        for i in range(n):
            if not A[i]:
                continue
            s = w_time * (now_s - T[i]) - w_hits * H[i]
            if best_i < 0 or s > best or (s == best and I[i] < I[best_i]):
                best = s
                best_i = i
    return best_i


def hamming64(a, b):
    cdef uint64_t v = (<uint64_t>a) ^ (<uint64_t>b)
    return __builtin_popcountll(v)

