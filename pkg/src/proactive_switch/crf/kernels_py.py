"""NumPy CRF kernels: forward-backward statistics and Viterbi decoding.

Reference implementation and import-time fallback for the compiled extension
(_ckernels). Both expose the same contracts; see benchmarks/bench_crf.py for
a speed comparison.

Scoring convention for a length-n path y:

    start[y0] + em[0, y0] + sum_t (transitions[y_{t-1}, y_t] + em[t, y_t]) + end[y_{n-1}]
"""

from __future__ import annotations

import numpy as np


def _as_f64(a) -> np.ndarray:
    return np.ascontiguousarray(a, dtype=np.float64)


def _logsumexp(x: np.ndarray, axis: int) -> np.ndarray:
    m = np.max(x, axis=axis, keepdims=True)
    return (m + np.log(np.sum(np.exp(x - m), axis=axis, keepdims=True))).squeeze(axis)


def crf_forward_backward(emissions, lengths, transitions, start, end):
    """Log-partition and posterior marginals per sequence.

    emissions: (B, T, L); lengths: (B,) valid prefix lengths; transitions:
    (L, L) with [i, j] scoring label j after label i; start/end: (L,).

    Returns (logz (B,), unary (B, T, L), pairwise (B, L, L)) where unary[b, t]
    is the posterior tag distribution at position t (zero past the length) and
    pairwise[b] sums the expected adjacent-transition counts over the sequence.
    """
    emissions = _as_f64(emissions)
    transitions = _as_f64(transitions)
    start = _as_f64(start)
    end = _as_f64(end)
    lengths = np.asarray(lengths, dtype=np.int64)
    B, T, L = emissions.shape

    logz = np.zeros(B)
    unary = np.zeros((B, T, L))
    pairwise = np.zeros((B, L, L))
    for b in range(B):
        n = int(lengths[b])
        if n <= 0:
            raise ValueError("fully masked sequence has no partition function")
        em = emissions[b, :n]
        alpha = np.empty((n, L))
        beta = np.empty((n, L))
        alpha[0] = start + em[0]
        for t in range(1, n):
            alpha[t] = em[t] + _logsumexp(alpha[t - 1][:, None] + transitions, axis=0)
        beta[n - 1] = end
        for t in range(n - 2, -1, -1):
            beta[t] = _logsumexp(transitions + (em[t + 1] + beta[t + 1])[None, :], axis=1)
        z = _logsumexp(alpha[n - 1] + end, axis=0)
        logz[b] = z
        unary[b, :n] = np.exp(alpha + beta - z)
        for t in range(n - 1):
            pairwise[b] += np.exp(
                alpha[t][:, None] + transitions + (em[t + 1] + beta[t + 1])[None, :] - z
            )
    return logz, unary, pairwise


def crf_viterbi(emissions, lengths, transitions, start, end):
    """Best-scoring paths with smallest-label-index tie-breaking.

    Returns (paths (B, T) int64, scores (B,)); path entries past a sequence's
    length are -1. The score is recomputed along the returned path with the
    same left-to-right accumulation order as the recurrence, so it equals the
    path's replayed score bit-for-bit.
    """
    emissions = _as_f64(emissions)
    transitions = _as_f64(transitions)
    start = _as_f64(start)
    end = _as_f64(end)
    lengths = np.asarray(lengths, dtype=np.int64)
    B, T, L = emissions.shape

    paths = np.full((B, T), -1, dtype=np.int64)
    scores = np.zeros(B)
    for b in range(B):
        n = int(lengths[b])
        if n <= 0:
            raise ValueError("fully masked sequence cannot be decoded")
        em = emissions[b, :n]
        backptr = np.zeros((n, L), dtype=np.int64)
        best = start + em[0]
        for t in range(1, n):
            cand = best[:, None] + transitions  # (prev, next)
            backptr[t] = np.argmax(cand, axis=0)  # first max -> smallest index
            best = cand[backptr[t], np.arange(L)] + em[t]
        last = int(np.argmax(best + end))
        path = np.empty(n, dtype=np.int64)
        path[n - 1] = last
        for t in range(n - 1, 0, -1):
            path[t - 1] = backptr[t, path[t]]
        paths[b, :n] = path

        score = start[path[0]] + em[0, path[0]]
        for t in range(1, n):
            score = (score + transitions[path[t - 1], path[t]]) + em[t, path[t]]
        scores[b] = score + end[path[n - 1]]
    return paths, scores
