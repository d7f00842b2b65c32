import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from oracles import window_records_oracle
from seqcal.batch import WORD, BatchView
from seqcal.core import IDENTITY, Dataset, Sample, ScalarTemperature, StepTemperature, Vocabulary, predict

VOCAB = Vocabulary.from_chars("abc")


@st.composite
def datasets(draw, k=4):
    n = draw(st.integers(1, 8))
    seed = draw(st.integers(0, 2**32 - 1))
    rng = np.random.default_rng(seed)
    samples = []
    for i in range(n):
        label = tuple(rng.choice(list("abc"), size=int(rng.integers(0, 5))))
        length = int(rng.integers(1, 7))
        logits = rng.normal(0, 3, (length, k))
        if rng.random() < 0.5:
            # plant the truth so some samples decode correctly
            for j, t in enumerate(VOCAB.encode(label) + (VOCAB.eos_id,)):
                if j < length:
                    logits[j, t] += 10
        samples.append(Sample(f"s{i}", logits, label))
    return Dataset(VOCAB, tuple(samples))


params_st = st.one_of(
    st.floats(0.1, 10).map(ScalarTemperature),
    st.lists(st.floats(0.1, 10), min_size=1, max_size=4).map(lambda t: StepTemperature(tuple(t))),
)


@given(datasets(), params_st, st.booleans())
def test_word_records_match_predict(ds, params, include_eos):
    view = BatchView(ds, include_eos)
    rec = view.word_records(params)
    for i, s in enumerate(ds):
        ref = predict(s, params, VOCAB, include_eos)
        assert rec.exact_match[i] == ref.exact_match
        assert rec.edit_distance[i] == ref.edit_distance
        assert math.isclose(rec.confidence[i], ref.word_confidence, rel_tol=1e-12)
    prs = view.prediction_records(params)
    assert [p.predicted for p in prs] == [predict(s, params, VOCAB, include_eos).predicted for s in ds]


@given(datasets(), st.integers(1, 7), st.floats(0.2, 5))
def test_window_records_match_oracle(ds, n, t):
    view = BatchView(ds)
    params = ScalarTemperature(t)
    logc = view.step_log_conf(params)
    got = view.window_records(params, n)
    expected_conf, expected_hit = [], []
    for i, s in enumerate(ds):
        a, u = view.starts[i], view.used[i]
        steps = list(logc[a : a + u])
        ref = window_records_oracle(view.step_ids[i], VOCAB.encode(s.label) + (VOCAB.eos_id,), steps, n)
        if ref is None:
            expected_conf.append(sum(steps))
            expected_hit.append(bool(view.word_exact[i]))
        else:
            expected_conf += [c for c, _ in ref]
            expected_hit += [h for _, h in ref]
    np.testing.assert_allclose(got.log_confidence, expected_conf, rtol=1e-12, atol=1e-13)
    np.testing.assert_array_equal(got.exact_match, expected_hit)


@given(datasets())
def test_one_record_per_step_at_window_one(ds):
    view = BatchView(ds)
    assert len(view.window_records(IDENTITY, 1)) == int(view.used.sum())


@given(datasets())
def test_huge_window_equals_word(ds):
    view = BatchView(ds)
    a = view.window_records(IDENTITY, 10)
    b = view.window_records(IDENTITY, WORD)
    np.testing.assert_array_equal(a.log_confidence, b.log_confidence)
    np.testing.assert_array_equal(a.exact_match, b.exact_match)


def test_window_edit_distance():
    # decoded "ab</s>" vs truth "ba</s>": bigrams (ab|ba) and (b</s>|a</s>)
    rows = np.full((3, 4), 0.0)
    rows[0, 0] = rows[1, 1] = rows[2, 3] = 5.0
    ds = Dataset(VOCAB, (Sample("x", rows, ("b", "a")),))
    w = BatchView(ds).windows(2)
    assert w.exact_match.tolist() == [False, False]
    assert w.edit_distance.tolist() == [2, 1]


def test_rejects_bad_window():
    ds = Dataset(VOCAB, (Sample("x", np.zeros((1, 4)), ()),))
    with pytest.raises(ValueError):
        BatchView(ds).windows(0)
