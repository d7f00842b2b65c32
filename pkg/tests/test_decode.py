import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from helpers import RandomModel, vocab_of
from seqcal.core import IDENTITY, Sample, ScalarTemperature, StepTemperature, predict
from seqcal.decode import (
    ContractViolationError,
    SearchSpaceError,
    StoredLogitsModel,
    beam_accuracy_experiment,
    _step_log_probs,
    beam_search,
    exhaustive_decode,
    greedy_decode,
)

V3 = vocab_of(3)  # a b </s>


class TableModel:
    """Next-token probabilities from a prefix table; uniform elsewhere."""

    def __init__(self, table, vocab_size=3, max_len=2):
        self.table = table
        self.vocab_size = vocab_size
        self.max_len = max_len

    def next_logits(self, prefix):
        p = self.table.get(tuple(prefix), [1.0 / self.vocab_size] * self.vocab_size)
        return np.log(np.asarray(p, dtype=float))


TOY = TableModel({(): [0.6, 0.4, 0.0 + 1e-12], (0,): [0.5, 0.25, 0.25], (1,): [0.95, 0.04, 0.01]})


def test_toy_greedy_takes_first_step_argmax():
    h = greedy_decode(TOY, IDENTITY, V3)
    assert h.ids[0] == 0
    assert h.score == pytest.approx(0.30, rel=1e-9)


def test_toy_beam_two_finds_better_branch():
    best = beam_search(TOY, IDENTITY, 2, V3)[0]
    assert best.tokens(V3) == ("b", "a")
    assert best.score == pytest.approx(0.38, rel=1e-9)
    assert exhaustive_decode(TOY, IDENTITY, V3) == best


def test_beam_results_are_sorted_and_sized():
    out = beam_search(TOY, IDENTITY, 3, V3)
    assert len(out) == 3
    assert [h.log_score for h in out] == sorted((h.log_score for h in out), reverse=True)


def test_finished_hypotheses_are_frozen():
    model = TableModel({(): [0.2, 0.1, 0.7], (0,): [0.5, 0.5, 1e-12], (1,): [0.5, 0.5, 1e-12]}, max_len=3)
    out = beam_search(model, IDENTITY, 2, V3)
    assert out[0].ids == (2,) and out[0].finished
    assert out[0].score == pytest.approx(0.7)
    assert out[0].tokens(V3) == ()


def test_top_score_can_drop_with_width():
    # the wider beam discards the narrow beam's winning prefix at step 2
    model = TableModel(
        {
            (): [0.4, 0.35, 0.25],
            (0,): [0.34, 0.33, 0.33],
            (1,): [0.5, 0.45, 0.05],
            (0, 0): [1e-12, 1e-12, 1.0],
            (1, 0): [0.34, 0.33, 0.33],
            (1, 1): [0.34, 0.33, 0.33],
        },
        max_len=3,
    )
    one = beam_search(model, IDENTITY, 1, V3)[0]
    two = beam_search(model, IDENTITY, 2, V3)[0]
    assert one.score == pytest.approx(0.4 * 0.34, rel=1e-6)
    assert two.log_score < one.log_score
    assert exhaustive_decode(model, IDENTITY, V3).log_score >= one.log_score


models = st.builds(
    RandomModel,
    st.integers(0, 10**6),
    st.integers(2, 4),
    st.integers(1, 4),
    st.floats(0.3, 3.0),
)
params_st = st.one_of(
    st.floats(0.2, 5).map(ScalarTemperature),
    st.lists(st.floats(0.2, 5), min_size=1, max_size=3).map(lambda t: StepTemperature(tuple(t))),
)


@given(models, params_st)
def test_width_one_is_greedy(model, params):
    v = vocab_of(model.vocab_size)
    assert beam_search(model, params, 1, v)[0] == greedy_decode(model, params, v)


@given(models, params_st)
def test_saturated_beam_is_exhaustive(model, params):
    v = vocab_of(model.vocab_size)
    width = model.vocab_size**model.max_len
    assert beam_search(model, params, width, v)[0] == exhaustive_decode(model, params, v)


@given(models, params_st)
def test_log_score_is_sum_of_step_log_probs(model, params):
    v = vocab_of(model.vocab_size)
    for h in beam_search(model, params, 3, v):
        total = 0.0
        for j, tok in enumerate(h.ids):
            z = model.next_logits(h.ids[:j]) / params.divisors(np.array([j]))[0]
            total += z[tok] - (z.max() + math.log(np.exp(z - z.max()).sum()))
        assert h.log_score == pytest.approx(total, rel=1e-12, abs=1e-12)
        assert h.log_score <= 0


@given(models, st.floats(0.1, 10), st.lists(st.integers(0, 3), max_size=3))
def test_scalar_temperature_keeps_sibling_order(model, t, prefix):
    prefix = tuple(p % model.vocab_size for p in prefix)
    scaled = _step_log_probs(model, prefix, ScalarTemperature(t))
    base = _step_log_probs(model, prefix, IDENTITY)
    np.testing.assert_array_equal(np.argsort(-scaled, kind="stable"), np.argsort(-base, kind="stable"))


def _eos_suppressed(rng, n, k):
    logits = rng.normal(0, 2, (n, k))
    logits[:, k - 1] = -1e4
    return logits


@given(st.integers(0, 10**6), st.integers(2, 5), st.integers(1, 5), st.floats(0.05, 20))
def test_stateless_model_decodes_per_step_argmax(seed, k, n, t):
    # with EOS out of reach the product factorises over positions
    model = StoredLogitsModel(_eos_suppressed(np.random.default_rng(seed), n, k))
    v = vocab_of(k)
    g = greedy_decode(model, ScalarTemperature(t), v)
    assert g.ids == greedy_decode(model, IDENTITY, v).ids
    assert g.ids == tuple(int(i) for i in np.argmax(model.logits, axis=1))
    if k**n <= 10**6:
        assert exhaustive_decode(model, ScalarTemperature(t), v).ids == g.ids
    for w in (2, 3):
        assert beam_search(model, ScalarTemperature(t), w, v)[0].ids == g.ids


def test_stateless_optimum_may_stop_early():
    # a likely EOS at step 1 beats two moderately confident steps
    model = StoredLogitsModel(np.log([[0.5, 0.05, 0.45], [0.5, 0.49, 0.01]]))
    best = exhaustive_decode(model, IDENTITY, V3)
    assert greedy_decode(model, IDENTITY, V3).ids == (0, 0)
    assert best.ids == (2,)


@given(st.integers(0, 10**6), st.integers(2, 5), st.integers(1, 6))
def test_stored_logits_greedy_matches_predict(seed, k, n):
    rng = np.random.default_rng(seed)
    sample = Sample("x", rng.normal(0, 2, (n, k)), ())
    v = vocab_of(k)
    h = greedy_decode(StoredLogitsModel.from_sample(sample), IDENTITY, v)
    rec = predict(sample, IDENTITY, v)
    assert h.tokens(v) == rec.predicted
    assert h.score == pytest.approx(rec.word_confidence, rel=1e-12)


class BadModel:
    vocab_size = 3
    max_len = 2

    def next_logits(self, prefix):
        return np.zeros(2)


def test_contract_violation():
    with pytest.raises(ContractViolationError):
        greedy_decode(BadModel(), IDENTITY, V3)
    with pytest.raises(ContractViolationError):
        beam_search(BadModel(), IDENTITY, 2, V3)


def test_search_guard_and_width_validation():
    big = RandomModel(0, 11, 6)
    with pytest.raises(SearchSpaceError):
        exhaustive_decode(big, IDENTITY, vocab_of(11))
    with pytest.raises(ValueError):
        beam_search(TOY, IDENTITY, 0, V3)


def test_experiment_baseline_rows():
    ms = [RandomModel(i, 3, 3) for i in range(20)]
    labels = [greedy_decode(m, IDENTITY, V3).tokens(V3) for m in ms]
    rows = beam_accuracy_experiment(ms, labels, V3, IDENTITY, ScalarTemperature(2.0), widths=[1])
    assert [(r.width, r.calibrated) for r in rows] == [(1, False), (1, True)]
    assert all(r.delta == 0 for r in rows)
    assert rows[0].accuracy == 1.0


def test_experiment_on_stateless_models_has_zero_delta():
    rng = np.random.default_rng(1)
    ms = [StoredLogitsModel(_eos_suppressed(rng, 3, 3)) for _ in range(30)]
    labels = [greedy_decode(m, IDENTITY, V3).tokens(V3) if i % 2 else ("a",) for i, m in enumerate(ms)]
    rows = beam_accuracy_experiment(ms, labels, V3, IDENTITY, ScalarTemperature(0.4), widths=[1, 2, 3, 4])
    assert all(r.delta == 0 for r in rows)
    assert rows[0].accuracy == 0.5


def test_experiment_validates():
    with pytest.raises(ValueError):
        beam_accuracy_experiment([], [], V3)
    with pytest.raises(ValueError):
        beam_accuracy_experiment([TOY], [("a",)], V3, widths=[9])
