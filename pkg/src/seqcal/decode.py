"""Greedy, beam and exhaustive decoding over autoregressive scorers.

Temperatures are applied to each step's logits before the log-softmax,
so hypotheses are ranked by their calibrated product score. Scores are
raw sums of log-probabilities (no length normalisation); ties are broken
by the lexicographic order of token ids.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Protocol, Sequence

import numpy as np

from .core import (
    IDENTITY,
    InvalidInputError,
    Sample,
    TemperatureParams,
    Vocabulary,
)
from .parallel import pmap

SEARCH_LIMIT = 10**6


class ContractViolationError(RuntimeError):
    """A sequence model returned something other than a length-K vector."""


class SearchSpaceError(InvalidInputError):
    pass


class SequenceModel(Protocol):
    vocab_size: int
    max_len: int

    def next_logits(self, prefix: tuple[int, ...]) -> np.ndarray: ...


@dataclass(frozen=True)
class Hypothesis:
    ids: tuple[int, ...]
    log_score: float
    finished: bool

    def tokens(self, vocab: Vocabulary) -> tuple[str, ...]:
        ids = self.ids[:-1] if self.finished else self.ids
        return vocab.decode(ids)

    @property
    def score(self) -> float:
        return math.exp(self.log_score)


class StoredLogitsModel:
    """Prefix-independent model replaying a stored logit sequence."""

    def __init__(self, logits: np.ndarray):
        self.logits = np.asarray(logits, dtype=np.float64)
        self.vocab_size = self.logits.shape[1]
        self.max_len = self.logits.shape[0]

    @classmethod
    def from_sample(cls, sample: Sample) -> "StoredLogitsModel":
        return cls(sample.logits)

    def next_logits(self, prefix) -> np.ndarray:
        return self.logits[len(prefix)]


def _step_log_probs(model: SequenceModel, prefix, params: TemperatureParams) -> np.ndarray:
    z = np.asarray(model.next_logits(prefix), dtype=np.float64)
    if z.shape != (model.vocab_size,):
        raise ContractViolationError(
            f"model returned shape {z.shape} for prefix of length {len(prefix)}, "
            f"expected ({model.vocab_size},)"
        )
    s = z / float(params.divisors(np.array([len(prefix)]))[0])
    m = s.max()
    return s - (m + math.log(np.exp(s - m).sum()))


def greedy_decode(model: SequenceModel, params: TemperatureParams, vocab: Vocabulary) -> Hypothesis:
    eos = vocab.eos_id
    ids: tuple[int, ...] = ()
    score = 0.0
    for _ in range(model.max_len):
        lp = _step_log_probs(model, ids, params)
        k = int(np.argmax(lp))
        ids += (k,)
        score = score + float(lp[k])
        if k == eos:
            return Hypothesis(ids, score, True)
    return Hypothesis(ids, score, False)


def _rank(h: Hypothesis):
    return (-h.log_score, h.ids)


def beam_search(
    model: SequenceModel, params: TemperatureParams, width: int, vocab: Vocabulary
) -> list[Hypothesis]:
    """Breadth-limited search; returns the final beam, best first.

    Finished hypotheses stay in the beam and keep competing for its slots.
    """
    if width < 1:
        raise InvalidInputError("beam width must be >= 1")
    eos = vocab.eos_id
    beam = [Hypothesis((), 0.0, False)]
    for _ in range(model.max_len):
        live = [h for h in beam if not h.finished]
        if not live:
            break
        done = [h for h in beam if h.finished]
        parents = np.array([h.log_score for h in live])
        lps = np.stack([_step_log_probs(model, h.ids, params) for h in live])
        flat = (parents[:, None] + lps).ravel()
        pool = np.concatenate((flat, [h.log_score for h in done]))
        if len(pool) > width:
            cut = np.partition(pool, len(pool) - width)[len(pool) - width]
            keep = np.flatnonzero(flat >= cut)
            done = [h for h in done if h.log_score >= cut]
        else:
            keep = np.arange(len(flat))
        k = lps.shape[1]
        cands = done
        for i in keep.tolist():
            parent, tok = divmod(i, k)
            cands.append(Hypothesis(live[parent].ids + (tok,), float(flat[i]), tok == eos))
        cands.sort(key=_rank)
        beam = cands[:width]
    beam.sort(key=_rank)
    return beam


def exhaustive_decode(model: SequenceModel, params: TemperatureParams, vocab: Vocabulary) -> Hypothesis:
    """Best hypothesis over every EOS-terminated or full-length sequence."""
    k, n = model.vocab_size, model.max_len
    if k**n > SEARCH_LIMIT:
        raise SearchSpaceError(f"search space {k}^{n} exceeds {SEARCH_LIMIT}")
    eos = vocab.eos_id
    best: Hypothesis | None = None

    def visit(ids: tuple[int, ...], score: float):
        nonlocal best
        lp = _step_log_probs(model, ids, params)
        for t in range(k):
            child = ids + (t,)
            s = score + float(lp[t])
            if t == eos or len(child) == n:
                h = Hypothesis(child, s, t == eos)
                if best is None or _rank(h) < _rank(best):
                    best = h
            else:
                visit(child, s)

    visit((), 0.0)
    assert best is not None
    return best


@dataclass(frozen=True)
class BeamRow:
    width: int
    calibrated: bool
    accuracy: float
    delta: float


def _hits(models, labels, params, width, vocab) -> np.ndarray:
    def one(i):
        top = beam_search(models[i], params, width, vocab)[0]
        return top.tokens(vocab) == tuple(labels[i])

    return np.array(pmap(one, range(len(models))), dtype=bool)


def beam_accuracy_experiment(
    models: Sequence[SequenceModel],
    labels: Sequence[Sequence[str]],
    vocab: Vocabulary,
    params_uncal: TemperatureParams = IDENTITY,
    params_cal: TemperatureParams | None = None,
    widths: Sequence[int] = (1, 2, 3, 4, 5),
) -> list[BeamRow]:
    """Top-1 exact-match accuracy per beam width, relative to width 1.

    The width-1 reference is the uncalibrated greedy decode; with positive
    temperatures greedy output does not depend on calibration.
    """
    if not models or len(models) != len(labels):
        raise InvalidInputError("need a non-empty evaluation set with one label per model")
    if any(w < 1 or w > 8 for w in widths):
        raise InvalidInputError("beam widths must lie in 1..8")
    base = float(np.mean(_hits(models, labels, params_uncal, 1, vocab)))
    conditions = [(False, params_uncal)] + ([(True, params_cal)] if params_cal is not None else [])
    rows = []
    for w in widths:
        for flag, params in conditions:
            acc = base if w == 1 and not flag else float(np.mean(_hits(models, labels, params, w, vocab)))
            rows.append(BeamRow(w, flag, acc, acc - base))
    return rows
