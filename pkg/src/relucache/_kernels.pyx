# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled dense forward kernels; same contract as ``_fallback``.

Points are processed in blocks of ``BLOCK`` so that the innermost loop runs
over independent points and can be vectorized.
"""

import numpy as np
cimport numpy as cnp
from libc.stdlib cimport malloc, free

cnp.import_array()

cdef enum:
    BLOCK = 32


cdef void _propagate(const double[:, :, ::1] W, const double[:, ::1] b,
                     const unsigned char[:, ::1] relu, const double *x,
                     Py_ssize_t count, double *cur, double *nxt,
                     double[:, ::1] lo, bint track) noexcept nogil:
    # cur/nxt hold M rows of BLOCK lanes; on return the caller's cur holds
    # the last layer.
    cdef Py_ssize_t L = W.shape[0], M = W.shape[1]
    cdef Py_ssize_t l, j, k, p
    cdef double w, low
    cdef double acc[BLOCK]
    cdef double *tmp
    for k in range(M * BLOCK):
        cur[k] = 0.0
    for p in range(count):
        cur[p] = x[p]
    for l in range(L):
        for k in range(M):
            for p in range(BLOCK):
                acc[p] = b[l, k]
            for j in range(M):
                w = W[l, k, j]
                if w != 0.0:
                    for p in range(BLOCK):
                        acc[p] = acc[p] + w * cur[j * BLOCK + p]
            if track:
                low = lo[l, k]
                for p in range(count):
                    if acc[p] < low:
                        low = acc[p]
                lo[l, k] = low
            if relu[l, k]:
                for p in range(BLOCK):
                    nxt[k * BLOCK + p] = acc[p] if acc[p] > 0.0 else 0.0
            else:
                for p in range(BLOCK):
                    nxt[k * BLOCK + p] = acc[p]
        tmp = cur
        cur = nxt
        nxt = tmp
    if L % 2 == 1:
        for k in range(M * BLOCK):
            nxt[k] = cur[k]


def _run(W, b, relu, xs, w_out, double b_out, bint track):
    cdef const double[:, :, ::1] Wv = W
    cdef const double[:, ::1] bv = b
    cdef const unsigned char[:, ::1] rv = relu
    cdef const double[::1] x = np.ascontiguousarray(xs, dtype=np.float64)
    cdef Py_ssize_t L = Wv.shape[0], M = Wv.shape[1], n = x.shape[0]
    cdef Py_ssize_t start, count, k, p
    cdef double acc
    lo_arr = np.full((L, M), np.inf)
    res_arr = np.empty(n)
    cdef double[:, ::1] lo = lo_arr
    cdef double[::1] res = res_arr
    cdef const double[::1] wo
    if not track:
        wo = w_out
    cdef double xbuf[BLOCK]
    cdef double *cur = <double *> malloc(M * BLOCK * sizeof(double))
    cdef double *nxt = <double *> malloc(M * BLOCK * sizeof(double))
    if cur == NULL or nxt == NULL:
        free(cur)
        free(nxt)
        raise MemoryError()
    try:
        with nogil:
            start = 0
            while start < n:
                count = n - start if n - start < BLOCK else BLOCK
                for p in range(count):
                    xbuf[p] = x[start + p]
                _propagate(Wv, bv, rv, xbuf, count, cur, nxt, lo, track)
                if not track:
                    for p in range(count):
                        acc = b_out
                        for k in range(M):
                            acc = acc + wo[k] * cur[k * BLOCK + p]
                        res[start + p] = acc
                start += count
    finally:
        free(cur)
        free(nxt)
    return lo_arr if track else res_arr


def forward_dense(W, b, relu, w_out, double b_out, xs):
    return _run(W, b, relu, xs, w_out, b_out, False)


def min_preactivation(W, b, relu, xs):
    return _run(W, b, relu, xs, None, 0.0, True)
