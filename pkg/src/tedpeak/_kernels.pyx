# cython: boundscheck=False, wraparound=False, initializedcheck=False, cdivision=True
"""Compiled hot loops. Mirrors ``_kernels_py`` operation for operation.

Every output of :func:`sg_valid` is accumulated as
``c[0]*x[j] + c[1]*x[j+1] + ...`` strictly left to right, the same order
:func:`dot_seq` and the numpy fallback use, so all three agree bitwise.
"""
import numpy as np

cdef enum:
    TILE = 2048


def sg_valid(const double[::1] x, const double[::1] c):
    cdef Py_ssize_t w = c.shape[0]
    cdef Py_ssize_t n = x.shape[0] - w + 1
    if n <= 0:
        return np.empty(0)
    out = np.empty(n)
    cdef double[::1] o = out
    cdef Py_ssize_t t0, t1, j, k
    cdef double ck
    with nogil:
        t0 = 0
        while t0 < n:
            t1 = t0 + TILE
            if t1 > n:
                t1 = n
            ck = c[0]
            for j in range(t0, t1):
                o[j] = ck * x[j]
            for k in range(1, w):
                ck = c[k]
                for j in range(t0, t1):
                    o[j] = o[j] + ck * x[j + k]
            t0 = t1
    return out


def dot_seq(const double[::1] x, const double[::1] c):
    cdef Py_ssize_t k, w = c.shape[0]
    cdef double acc = c[0] * x[0]
    for k in range(1, w):
        acc = acc + c[k] * x[k]
    return acc


def find_runs(const unsigned char[::1] mask):
    """Start (inclusive) and end (exclusive) of every maximal run of nonzero."""
    cdef Py_ssize_t n = mask.shape[0], i, m = 0
    cdef unsigned char prev = 0, cur
    for i in range(n):
        cur = mask[i] != 0
        if cur and not prev:
            m += 1
        prev = cur
    starts = np.empty(m, dtype=np.int64)
    ends = np.empty(m, dtype=np.int64)
    cdef long long[::1] s = starts
    cdef long long[::1] e = ends
    m = 0
    prev = 0
    for i in range(n):
        cur = mask[i] != 0
        if cur and not prev:
            s[m] = i
        elif prev and not cur:
            e[m] = i
            m += 1
        prev = cur
    if prev:
        e[m] = n
    return starts, ends


def run_max(const double[::1] d, const long long[::1] starts, const long long[::1] ends):
    cdef Py_ssize_t r, i, m = starts.shape[0]
    out = np.empty(m)
    cdef double[::1] o = out
    cdef double best
    for r in range(m):
        best = d[starts[r]]
        for i in range(starts[r] + 1, ends[r]):
            if d[i] > best:
                best = d[i]
        o[r] = best
    return out
