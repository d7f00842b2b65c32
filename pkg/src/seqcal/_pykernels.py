"""Reference implementations of the hot loops, used when the compiled
extension is unavailable (or ``SEQCAL_PURE_PYTHON=1``).

Reductions over the vocabulary axis accumulate column by column so the
summation order matches the compiled loops.
"""

import numpy as np


def _row_max(scaled):
    best = np.zeros(scaled.shape[0], dtype=np.int64)
    m = scaled[:, 0].copy()
    for j in range(1, scaled.shape[1]):
        col = scaled[:, j]
        better = col > m
        m[better] = col[better]
        best[better] = j
    return m, best


def _shifted_exp_sum(scaled, m):
    acc = np.zeros(scaled.shape[0], dtype=np.float64)
    for j in range(scaled.shape[1]):
        acc = acc + np.exp(scaled[:, j] - m)
    return acc


def step_log_confidence(logits, inv_temp):
    """Return ``(log max-softmax, argmax)`` per row of ``logits * inv_temp``."""
    scaled = logits * inv_temp[:, None]
    m, best = _row_max(scaled)
    return -np.log(_shifted_exp_sum(scaled, m)), best


def token_log_prob(logits, inv_temp, tokens):
    scaled = logits * inv_temp[:, None]
    m, _ = _row_max(scaled)
    rows = np.arange(scaled.shape[0])
    return scaled[rows, tokens] - m - np.log(_shifted_exp_sum(scaled, m))


def segment_sums(values, starts, lengths):
    out = np.zeros(len(starts), dtype=np.float64)
    if len(starts) == 0:
        return out
    for j in range(int(lengths.max(initial=0))):
        live = lengths > j
        out[live] = out[live] + values[starts[live] + j]
    return out


def levenshtein(a, b):
    if len(a) < len(b):
        a, b = b, a
    if not b:
        return len(a)
    prev = list(range(len(b) + 1))
    for i, ca in enumerate(a, 1):
        cur = [i]
        for j, cb in enumerate(b, 1):
            cur.append(min(prev[j - 1] + (ca != cb), prev[j] + 1, cur[j - 1] + 1))
        prev = cur
    return prev[-1]
