"""Backend selection for the hot loops.

The compiled extension is preferred; set ``SEQCAL_PURE_PYTHON=1`` to force
the numpy/pure-Python fallback.
"""

import os

import numpy as np

from . import _pykernels

if os.environ.get("SEQCAL_PURE_PYTHON", "") not in ("", "0"):
    _impl = _pykernels
    BACKEND = "python"
else:
    try:
        from . import _ckernels as _impl
        BACKEND = "cython"
    except ImportError:  # extension not built
        _impl = _pykernels
        BACKEND = "python"


def step_log_confidence(logits, inv_temp):
    """Log of the max softmax probability and its index, per row.

    ``logits`` is an (M, K) array, ``inv_temp`` a length-M array of
    reciprocal temperatures. Ties resolve to the lowest index.
    """
    return _impl.step_log_confidence(
        np.ascontiguousarray(logits, dtype=np.float64),
        np.ascontiguousarray(inv_temp, dtype=np.float64),
    )


def token_log_prob(logits, inv_temp, tokens):
    """Log softmax probability of ``tokens[i]`` in row ``i``."""
    return _impl.token_log_prob(
        np.ascontiguousarray(logits, dtype=np.float64),
        np.ascontiguousarray(inv_temp, dtype=np.float64),
        np.ascontiguousarray(tokens, dtype=np.int64),
    )


def segment_sums(values, starts, lengths):
    """Sum ``values[s:s+n]`` for each ``(s, n)``, accumulating left to right."""
    return _impl.segment_sums(
        np.ascontiguousarray(values, dtype=np.float64),
        np.ascontiguousarray(starts, dtype=np.int64),
        np.ascontiguousarray(lengths, dtype=np.int64),
    )


def levenshtein_ids(a, b):
    """Edit distance between two integer id sequences."""
    if _impl is _pykernels:
        return _pykernels.levenshtein(list(a), list(b))
    return _impl.levenshtein(
        np.ascontiguousarray(a, dtype=np.int64), np.ascontiguousarray(b, dtype=np.int64)
    )
