# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled CRF kernels; contracts match kernels_py exactly."""

import numpy as np

cimport numpy as cnp
from libc.math cimport exp, log

cnp.import_array()


cdef inline double _lse(double* buf, Py_ssize_t L) noexcept nogil:
    cdef double m = buf[0]
    cdef double s = 0.0
    cdef Py_ssize_t i
    for i in range(1, L):
        if buf[i] > m:
            m = buf[i]
    for i in range(L):
        s += exp(buf[i] - m)
    return m + log(s)


def crf_forward_backward(emissions, lengths, transitions, start, end):
    """See kernels_py.crf_forward_backward."""
    cdef cnp.ndarray[cnp.float64_t, ndim=3, mode="c"] em = np.ascontiguousarray(emissions, dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=2, mode="c"] tr = np.ascontiguousarray(transitions, dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=1, mode="c"] st = np.ascontiguousarray(start, dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=1, mode="c"] en = np.ascontiguousarray(end, dtype=np.float64)
    cdef cnp.ndarray[cnp.int64_t, ndim=1, mode="c"] ln = np.ascontiguousarray(lengths, dtype=np.int64)

    cdef Py_ssize_t B = em.shape[0]
    cdef Py_ssize_t T = em.shape[1]
    cdef Py_ssize_t L = em.shape[2]

    cdef cnp.ndarray[cnp.float64_t, ndim=1, mode="c"] logz = np.zeros(B, dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=3, mode="c"] unary = np.zeros((B, T, L), dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=3, mode="c"] pairwise = np.zeros((B, L, L), dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=2, mode="c"] alpha = np.empty((T, L), dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=2, mode="c"] beta = np.empty((T, L), dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=1, mode="c"] buf = np.empty(L, dtype=np.float64)

    cdef Py_ssize_t b, t, i, j, n
    cdef double z

    for b in range(B):
        n = ln[b]
        if n <= 0:
            raise ValueError("fully masked sequence has no partition function")
        for j in range(L):
            alpha[0, j] = st[j] + em[b, 0, j]
        for t in range(1, n):
            for j in range(L):
                for i in range(L):
                    buf[i] = alpha[t - 1, i] + tr[i, j]
                alpha[t, j] = em[b, t, j] + _lse(&buf[0], L)
        for j in range(L):
            beta[n - 1, j] = en[j]
        for t in range(n - 2, -1, -1):
            for i in range(L):
                for j in range(L):
                    buf[j] = tr[i, j] + em[b, t + 1, j] + beta[t + 1, j]
                beta[t, i] = _lse(&buf[0], L)
        for j in range(L):
            buf[j] = alpha[n - 1, j] + en[j]
        z = _lse(&buf[0], L)
        logz[b] = z
        for t in range(n):
            for j in range(L):
                unary[b, t, j] = exp(alpha[t, j] + beta[t, j] - z)
        for t in range(n - 1):
            for i in range(L):
                for j in range(L):
                    pairwise[b, i, j] += exp(
                        alpha[t, i] + tr[i, j] + em[b, t + 1, j] + beta[t + 1, j] - z
                    )
    return logz, unary, pairwise


def crf_viterbi(emissions, lengths, transitions, start, end):
    """See kernels_py.crf_viterbi."""
    cdef cnp.ndarray[cnp.float64_t, ndim=3, mode="c"] em = np.ascontiguousarray(emissions, dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=2, mode="c"] tr = np.ascontiguousarray(transitions, dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=1, mode="c"] st = np.ascontiguousarray(start, dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=1, mode="c"] en = np.ascontiguousarray(end, dtype=np.float64)
    cdef cnp.ndarray[cnp.int64_t, ndim=1, mode="c"] ln = np.ascontiguousarray(lengths, dtype=np.int64)

    cdef Py_ssize_t B = em.shape[0]
    cdef Py_ssize_t T = em.shape[1]
    cdef Py_ssize_t L = em.shape[2]

    cdef cnp.ndarray[cnp.int64_t, ndim=2, mode="c"] paths = np.full((B, T), -1, dtype=np.int64)
    cdef cnp.ndarray[cnp.float64_t, ndim=1, mode="c"] scores = np.zeros(B, dtype=np.float64)
    cdef cnp.ndarray[cnp.int64_t, ndim=2, mode="c"] backptr = np.zeros((T, L), dtype=np.int64)
    cdef cnp.ndarray[cnp.float64_t, ndim=1, mode="c"] best = np.empty(L, dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=1, mode="c"] nxt = np.empty(L, dtype=np.float64)

    cdef Py_ssize_t b, t, i, j, n, arg
    cdef double cand, top, score

    for b in range(B):
        n = ln[b]
        if n <= 0:
            raise ValueError("fully masked sequence cannot be decoded")
        for j in range(L):
            best[j] = st[j] + em[b, 0, j]
        for t in range(1, n):
            for j in range(L):
                arg = 0
                top = best[0] + tr[0, j]
                for i in range(1, L):
                    cand = best[i] + tr[i, j]
                    if cand > top:  # strict: keeps the smallest index on ties
                        top = cand
                        arg = i
                backptr[t, j] = arg
                nxt[j] = top + em[b, t, j]
            for j in range(L):
                best[j] = nxt[j]
        arg = 0
        top = best[0] + en[0]
        for j in range(1, L):
            cand = best[j] + en[j]
            if cand > top:
                top = cand
                arg = j
        paths[b, n - 1] = arg
        for t in range(n - 1, 0, -1):
            paths[b, t - 1] = backptr[t, paths[b, t]]

        score = st[paths[b, 0]] + em[b, 0, paths[b, 0]]
        for t in range(1, n):
            score = (score + tr[paths[b, t - 1], paths[b, t]]) + em[b, t, paths[b, t]]
        scores[b] = score + en[paths[b, n - 1]]
    return paths, scores
