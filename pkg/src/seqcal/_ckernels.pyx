# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled inner loops. Signatures mirror :mod:`seqcal._pykernels`."""

import numpy as np
cimport numpy as cnp
from libc.math cimport exp, log

cnp.import_array()


def step_log_confidence(const double[:, ::1] logits, const double[::1] inv_temp):
    cdef Py_ssize_t n = logits.shape[0], k = logits.shape[1]
    cdef Py_ssize_t i, j, best
    cdef double m, acc, t
    out = np.empty(n, dtype=np.float64)
    arg = np.empty(n, dtype=np.int64)
    cdef double[::1] out_v = out
    cdef cnp.int64_t[::1] arg_v = arg
    with nogil:
        for i in range(n):
            t = inv_temp[i]
            best = 0
            m = logits[i, 0] * t
            for j in range(1, k):
                if logits[i, j] * t > m:
                    m = logits[i, j] * t
                    best = j
            acc = 0.0
            for j in range(k):
                acc = acc + exp(logits[i, j] * t - m)
            out_v[i] = -log(acc)
            arg_v[i] = best
    return out, arg


def token_log_prob(const double[:, ::1] logits, const double[::1] inv_temp,
                   const cnp.int64_t[::1] tokens):
    cdef Py_ssize_t n = logits.shape[0], k = logits.shape[1]
    cdef Py_ssize_t i, j
    cdef double m, acc, t
    out = np.empty(n, dtype=np.float64)
    cdef double[::1] out_v = out
    with nogil:
        for i in range(n):
            t = inv_temp[i]
            m = logits[i, 0] * t
            for j in range(1, k):
                if logits[i, j] * t > m:
                    m = logits[i, j] * t
            acc = 0.0
            for j in range(k):
                acc = acc + exp(logits[i, j] * t - m)
            out_v[i] = logits[i, tokens[i]] * t - m - log(acc)
    return out


def segment_sums(const double[::1] values, const cnp.int64_t[::1] starts,
                 const cnp.int64_t[::1] lengths):
    cdef Py_ssize_t n = starts.shape[0]
    cdef Py_ssize_t i, j
    cdef double acc
    out = np.empty(n, dtype=np.float64)
    cdef double[::1] out_v = out
    with nogil:
        for i in range(n):
            acc = 0.0
            for j in range(lengths[i]):
                acc = acc + values[starts[i] + j]
            out_v[i] = acc
    return out


def levenshtein(const cnp.int64_t[::1] a, const cnp.int64_t[::1] b):
    cdef Py_ssize_t n = a.shape[0], m = b.shape[0]
    cdef Py_ssize_t i, j, r, p
    cdef cnp.int64_t best, cand
    if n < m:
        a, b = b, a
        n, m = m, n
    if m == 0:
        return n
    rows = np.empty((2, m + 1), dtype=np.int64)
    cdef cnp.int64_t[:, ::1] d = rows
    for j in range(m + 1):
        d[0, j] = j
    with nogil:
        for i in range(1, n + 1):
            r = i & 1
            p = 1 - r
            d[r, 0] = i
            for j in range(1, m + 1):
                best = d[p, j - 1] + (a[i - 1] != b[j - 1])
                cand = d[p, j] + 1
                if cand < best:
                    best = cand
                cand = d[r, j - 1] + 1
                if cand < best:
                    best = cand
                d[r, j] = best
    return int(d[n & 1, m])
