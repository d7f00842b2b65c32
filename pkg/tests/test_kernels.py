"""Compiled and fallback kernels agree."""

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from seqcal import _pykernels, kernels

try:
    from seqcal import _ckernels
except ImportError:  # extension not built
    _ckernels = None

needs_ext = pytest.mark.skipif(_ckernels is None, reason="compiled extension not built")
finite = st.floats(-50, 50, allow_nan=False, allow_infinity=False)
mats = st.tuples(st.integers(1, 20), st.integers(2, 8)).flatmap(
    lambda s: arrays(np.float64, s, elements=finite)
)


def test_backend_is_reported():
    assert kernels.BACKEND in ("cython", "python")


@given(mats)
def test_python_step_log_confidence_matches_numpy(z):
    inv = np.full(z.shape[0], 0.7)
    logc, arg = _pykernels.step_log_confidence(z, inv)
    s = z * 0.7
    ref = s.max(axis=1) - s.max(axis=1) - np.log(np.exp(s - s.max(axis=1, keepdims=True)).sum(axis=1))
    np.testing.assert_allclose(logc, ref, rtol=0, atol=1e-12)
    np.testing.assert_array_equal(arg, np.argmax(s, axis=1))


@needs_ext
@given(mats, st.floats(0.05, 20))
def test_step_kernels_agree(z, t):
    inv = np.full(z.shape[0], 1.0 / t)
    a = _ckernels.step_log_confidence(z, inv)
    b = _pykernels.step_log_confidence(z, inv)
    np.testing.assert_allclose(a[0], b[0], rtol=1e-13, atol=1e-15)
    np.testing.assert_array_equal(a[1], b[1])
    tok = np.arange(z.shape[0], dtype=np.int64) % z.shape[1]
    np.testing.assert_allclose(
        _ckernels.token_log_prob(z, inv, tok), _pykernels.token_log_prob(z, inv, tok), rtol=1e-13, atol=1e-15
    )


@needs_ext
@given(st.lists(st.floats(-5, 0), min_size=1, max_size=40), st.data())
def test_segment_sums_agree_exactly(vals, data):
    v = np.array(vals)
    n = len(v)
    starts = np.array(data.draw(st.lists(st.integers(0, n - 1), min_size=1, max_size=10)), dtype=np.int64)
    lengths = np.array([data.draw(st.integers(1, n - s)) for s in starts], dtype=np.int64)
    a = _ckernels.segment_sums(v, starts, lengths)
    b = _pykernels.segment_sums(v, starts, lengths)
    np.testing.assert_array_equal(a, b)


@needs_ext
@given(st.lists(st.integers(0, 4), min_size=1, max_size=12), st.lists(st.integers(0, 4), min_size=1, max_size=12))
def test_levenshtein_agrees(a, b):
    assert _ckernels.levenshtein(np.array(a, dtype=np.int64), np.array(b, dtype=np.int64)) == _pykernels.levenshtein(a, b)
