"""Flattened, precomputed view of a dataset for repeated scoring.

Temperatures are positive divisors, so the greedy path of every sample is
the same under any scalar or step-wise parameters. Everything that depends
only on the path (decoded ids, exact matches, edit distances, window
layouts) is computed once; only per-step log confidences are recomputed
for each candidate temperature.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from . import kernels
from .core import Dataset, PredictionRecord, TemperatureParams
from .editdist import levenshtein

WORD = "word"


@dataclass(frozen=True)
class RecordArrays:
    """Column form of a list of prediction records."""

    log_confidence: np.ndarray
    exact_match: np.ndarray
    edit_distance: np.ndarray

    @property
    def confidence(self) -> np.ndarray:
        return np.exp(self.log_confidence)

    def __len__(self) -> int:
        return len(self.log_confidence)


@dataclass(frozen=True)
class _Windows:
    starts: np.ndarray  # into the decoded-row array
    lengths: np.ndarray
    exact_match: np.ndarray
    edit_distance: np.ndarray


class BatchView:
    def __init__(self, dataset: Dataset, include_eos: bool = True):
        dataset.require_nonempty()
        self.dataset = dataset
        self.include_eos = include_eos
        vocab = dataset.vocabulary
        eos = vocab.eos_id
        self.eos_id = eos

        # decode once at T=1
        dec_rows, dec_pos, starts, used, pred_ids = [], [], [], [], []
        exact, dist, label_ids = [], [], []
        offset = 0
        for s in dataset.samples:
            _, arg = kernels.step_log_confidence(s.logits, np.ones(s.length))
            stop = np.flatnonzero(arg == eos)
            n = int(stop[0]) + 1 if stop.size else s.length
            ended = bool(stop.size)
            ids = arg[:n]
            u = n - 1 if (ended and not include_eos) else n
            dec_rows.append(s.logits[:u])
            dec_pos.append(np.arange(u))
            starts.append(offset)
            used.append(u)
            offset += u
            lab = vocab.encode(s.label)
            label_ids.append(lab)
            chars = tuple(int(i) for i in (ids[:-1] if ended else ids))
            pred_ids.append(tuple(int(i) for i in ids[:u]))
            exact.append(chars == lab)
            dist.append(levenshtein(chars, lab))
        k = vocab.size
        self.rows = np.concatenate(dec_rows) if offset else np.zeros((0, k))
        self.positions = np.concatenate(dec_pos).astype(np.int64)
        self.starts = np.asarray(starts, dtype=np.int64)
        self.used = np.asarray(used, dtype=np.int64)
        self.step_ids = pred_ids
        self.label_ids = label_ids
        self.word_exact = np.asarray(exact, dtype=bool)
        self.word_distance = np.asarray(dist, dtype=np.int64)
        self._window_cache: dict[int, _Windows] = {}

    def __len__(self) -> int:
        return len(self.dataset)

    # -- confidences -------------------------------------------------------

    def step_log_conf(self, params: TemperatureParams) -> np.ndarray:
        inv = 1.0 / params.divisors(self.positions)
        logc, _ = kernels.step_log_confidence(self.rows, inv)
        return logc

    def word_records(self, params: TemperatureParams) -> RecordArrays:
        logw = kernels.segment_sums(self.step_log_conf(params), self.starts, self.used)
        return RecordArrays(logw, self.word_exact, self.word_distance)

    def window_records(self, params: TemperatureParams, n) -> RecordArrays:
        if n == WORD:
            return self.word_records(params)
        w = self.windows(int(n))
        logw = kernels.segment_sums(self.step_log_conf(params), w.starts, w.lengths)
        return RecordArrays(logw, w.exact_match, w.edit_distance)

    def records(self, params: TemperatureParams, n=WORD) -> RecordArrays:
        return self.window_records(params, n)

    def prediction_records(self, params: TemperatureParams) -> list[PredictionRecord]:
        logc = self.step_log_conf(params)
        vocab = self.dataset.vocabulary
        out = []
        for i, s in enumerate(self.dataset.samples):
            a, u = self.starts[i], self.used[i]
            step = logc[a : a + u]
            ids = self.step_ids[i]
            chars = ids[:-1] if ids and ids[-1] == self.eos_id else ids
            out.append(
                PredictionRecord(
                    predicted=vocab.decode(chars),
                    step_confidences=tuple(float(math.exp(x)) for x in step),
                    word_confidence=math.exp(math.fsum(step)) if u else 1.0,
                    exact_match=bool(self.word_exact[i]),
                    edit_distance=int(self.word_distance[i]),
                )
            )
        return out

    # -- sliding windows -----------------------------------------------------

    def windows(self, n: int) -> _Windows:
        if n < 1:
            raise ValueError("window size must be >= 1")
        if n in self._window_cache:
            return self._window_cache[n]
        starts, lengths, exact, dist = [], [], [], []
        eos = self.eos_id
        for i in range(len(self.dataset)):
            a, u = int(self.starts[i]), int(self.used[i])
            if n >= u:
                starts.append(a)
                lengths.append(u)
                exact.append(bool(self.word_exact[i]))
                dist.append(int(self.word_distance[i]))
                continue
            pred = self.step_ids[i]
            truth = self.label_ids[i] + (eos,)
            for k in range(u - n + 1):
                pw = pred[k : k + n]
                tw = truth[k : k + n]
                starts.append(a + k)
                lengths.append(n)
                exact.append(pw == tw)
                dist.append(0 if pw == tw else (1 if n == 1 else levenshtein(pw, tw)))
        w = _Windows(
            np.asarray(starts, dtype=np.int64),
            np.asarray(lengths, dtype=np.int64),
            np.asarray(exact, dtype=bool),
            np.asarray(dist, dtype=np.int64),
        )
        self._window_cache[n] = w
        return w

    # -- teacher forcing -------------------------------------------------------

    @cached_property
    def _teacher(self):
        rows, pos, tokens, starts, lengths, skipped = [], [], [], [], [], []
        offset = 0
        eos = self.eos_id
        for i, s in enumerate(self.dataset.samples):
            truth = self.label_ids[i] + ((eos,) if self.include_eos else ())
            if len(truth) == 0 or len(truth) > s.length:
                skipped.append(s.id)
                continue
            rows.append(s.logits[: len(truth)])
            pos.append(np.arange(len(truth)))
            tokens.append(np.asarray(truth, dtype=np.int64))
            starts.append(offset)
            lengths.append(len(truth))
            offset += len(truth)
        k = self.dataset.vocabulary.size
        return (
            np.concatenate(rows) if rows else np.zeros((0, k)),
            np.concatenate(pos).astype(np.int64) if pos else np.zeros(0, np.int64),
            np.concatenate(tokens) if tokens else np.zeros(0, np.int64),
            np.asarray(starts, dtype=np.int64),
            np.asarray(lengths, dtype=np.int64),
            tuple(skipped),
        )

    @property
    def nll_skipped(self) -> tuple[str, ...]:
        return self._teacher[5]

    def teacher_forced_log_probs(self, params: TemperatureParams):
        """Per-sample summed log-probability of the ground truth, and step counts."""
        rows, pos, tokens, starts, lengths, _ = self._teacher
        if len(starts) == 0:
            return np.zeros(0), lengths
        inv = 1.0 / params.divisors(pos)
        lp = kernels.token_log_prob(rows, inv, tokens)
        return kernels.segment_sums(lp, starts, lengths), lengths
