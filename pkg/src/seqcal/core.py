"""Domain types, softmax, temperature transforms and word confidence."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Sequence, Union

import numpy as np

from . import kernels

EOS = "</s>"


class InvalidInputError(ValueError):
    """Raised when an operation receives data outside its domain."""


# --------------------------------------------------------------------------
# Domain types
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class Vocabulary:
    """Ordered token inventory with a designated end-of-sequence token."""

    symbols: tuple[str, ...]
    eos: str = EOS
    unk: str | None = None

    def __post_init__(self):
        object.__setattr__(self, "symbols", tuple(self.symbols))
        if len(self.symbols) < 2:
            raise InvalidInputError("vocabulary needs at least two symbols")
        if len(set(self.symbols)) != len(self.symbols):
            raise InvalidInputError("vocabulary symbols must be unique")
        if self.eos not in self.symbols:
            raise InvalidInputError(f"eos token {self.eos!r} not in vocabulary")
        if self.unk is not None and self.unk not in self.symbols:
            raise InvalidInputError(f"unk token {self.unk!r} not in vocabulary")

    @property
    def size(self) -> int:
        return len(self.symbols)

    @cached_property
    def index(self) -> dict[str, int]:
        return {s: i for i, s in enumerate(self.symbols)}

    @property
    def eos_id(self) -> int:
        return self.index[self.eos]

    def encode(self, tokens: Sequence[str]) -> tuple[int, ...]:
        try:
            return tuple(self.index[t] for t in tokens)
        except KeyError as exc:
            raise InvalidInputError(f"unknown token {exc.args[0]!r}") from None

    def decode(self, ids: Sequence[int]) -> tuple[str, ...]:
        return tuple(self.symbols[i] for i in ids)

    @classmethod
    def from_chars(cls, chars: str, eos: str = EOS, unk: str | None = None) -> "Vocabulary":
        symbols = list(chars)
        if unk is not None:
            symbols.append(unk)
        symbols.append(eos)
        return cls(tuple(symbols), eos=eos, unk=unk)


def as_logit_sequence(steps, k: int | None = None) -> np.ndarray:
    """Validate and freeze an (L, K) array of per-step logits."""
    arr = np.array(steps, dtype=np.float64)
    if arr.ndim != 2 or arr.shape[0] < 1:
        raise InvalidInputError(f"logit sequence must be (L>=1, K), got shape {arr.shape}")
    if k is not None and arr.shape[1] != k:
        raise InvalidInputError(f"logit rows have {arr.shape[1]} entries, expected {k}")
    if not np.all(np.isfinite(arr)):
        raise InvalidInputError("logits must be finite")
    arr.flags.writeable = False
    return arr


def as_tokens(label: str | Sequence[str]) -> tuple[str, ...]:
    """A plain string is split into characters; sequences are kept as tokens."""
    return tuple(label)


@dataclass(frozen=True, eq=False)
class Sample:
    id: str
    logits: np.ndarray
    label: tuple[str, ...]

    def __post_init__(self):
        object.__setattr__(self, "logits", as_logit_sequence(self.logits))
        object.__setattr__(self, "label", as_tokens(self.label))

    @property
    def length(self) -> int:
        return self.logits.shape[0]


@dataclass(frozen=True, eq=False)
class Dataset:
    """Immutable collection of samples sharing one vocabulary."""

    vocabulary: Vocabulary
    samples: tuple[Sample, ...]
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "samples", tuple(self.samples))
        k = self.vocabulary.size
        for s in self.samples:
            if s.logits.shape[1] != k:
                raise InvalidInputError(
                    f"sample {s.id!r}: logit width {s.logits.shape[1]} != vocabulary size {k}"
                )
            for tok in s.label:
                if tok not in self.vocabulary.index or tok == self.vocabulary.eos:
                    raise InvalidInputError(f"sample {s.id!r}: label token {tok!r} not in vocabulary")

    def __len__(self) -> int:
        return len(self.samples)

    def __iter__(self):
        return iter(self.samples)

    def subset(self, indices) -> "Dataset":
        return Dataset(self.vocabulary, tuple(self.samples[i] for i in indices), dict(self.meta))

    def require_nonempty(self) -> None:
        if not self.samples:
            raise InvalidInputError("dataset is empty")


@dataclass(frozen=True)
class ScalarTemperature:
    """One divisor temperature shared by every decoding step."""

    t: float = 1.0

    def __post_init__(self):
        if not (math.isfinite(self.t) and self.t > 0):
            raise InvalidInputError(f"temperature must be positive, got {self.t}")

    @property
    def tau(self) -> int:
        return 0

    @property
    def temps(self) -> tuple[float, ...]:
        return (float(self.t),)

    def divisors(self, positions: np.ndarray) -> np.ndarray:
        return np.full(np.shape(positions), float(self.t))


@dataclass(frozen=True)
class StepTemperature:
    """Per-position divisor temperatures; positions >= tau reuse ``temps[tau]``."""

    temps: tuple[float, ...]

    def __post_init__(self):
        temps = tuple(float(t) for t in self.temps)
        if not temps:
            raise InvalidInputError("step temperatures need at least one entry")
        if not all(math.isfinite(t) and t > 0 for t in temps):
            raise InvalidInputError(f"temperatures must be positive, got {temps}")
        object.__setattr__(self, "temps", temps)

    @property
    def tau(self) -> int:
        return len(self.temps) - 1

    def divisors(self, positions: np.ndarray) -> np.ndarray:
        table = np.asarray(self.temps)
        return table[np.minimum(np.asarray(positions, dtype=np.int64), self.tau)]


TemperatureParams = Union[ScalarTemperature, StepTemperature]
IDENTITY = ScalarTemperature(1.0)


@dataclass(frozen=True)
class PredictionRecord:
    predicted: tuple[str, ...]
    step_confidences: tuple[float, ...]
    word_confidence: float
    exact_match: bool
    edit_distance: int

    @property
    def text(self) -> str:
        return "".join(self.predicted)


# --------------------------------------------------------------------------
# Operations
# --------------------------------------------------------------------------


def softmax(v) -> np.ndarray:
    """Max-shifted softmax of a finite vector."""
    v = np.asarray(v, dtype=np.float64)
    if v.ndim != 1 or v.size == 0 or not np.all(np.isfinite(v)):
        raise InvalidInputError("softmax needs a non-empty finite vector")
    e = np.exp(v - v.max())
    return e / e.sum()


def apply_temperature(seq, params: TemperatureParams) -> np.ndarray:
    seq = np.asarray(seq, dtype=np.float64)
    div = params.divisors(np.arange(seq.shape[0]))
    out = seq / div[:, None]
    out.flags.writeable = False
    return out


def step_confidence(step_logits) -> tuple[int, float]:
    """Argmax token (lowest index on ties) and its softmax probability."""
    row = np.asarray(step_logits, dtype=np.float64)[None, :]
    logc, arg = kernels.step_log_confidence(row, np.ones(1))
    return int(arg[0]), float(math.exp(logc[0]))


def word_confidence(step_confs: Sequence[float]) -> float:
    """Product of step confidences, accumulated in log space."""
    if len(step_confs) == 0:
        raise InvalidInputError("word confidence of an empty step list")
    return math.exp(math.fsum(math.log(c) for c in step_confs))


def greedy_ids(logits: np.ndarray, eos_id: int) -> np.ndarray:
    """Argmax ids up to and including the first EOS (or all steps)."""
    ids = np.argmax(logits, axis=1)
    hits = np.flatnonzero(ids == eos_id)
    return ids[: hits[0] + 1] if hits.size else ids


def predict(
    sample: Sample, params: TemperatureParams, vocab: Vocabulary, include_eos: bool = True
) -> PredictionRecord:
    """Greedy-decode one sample under ``params`` and score it."""
    from .editdist import levenshtein

    scaled = apply_temperature(sample.logits, params)
    logc, arg = kernels.step_log_confidence(scaled, np.ones(scaled.shape[0]))
    eos_id = vocab.eos_id
    stop = np.flatnonzero(arg == eos_id)
    n = int(stop[0]) + 1 if stop.size else len(arg)
    ids = arg[:n]
    ended = n > 0 and ids[-1] == eos_id
    tokens = vocab.decode(ids[:-1] if ended else ids)
    used = logc[:n] if (include_eos or not ended) else logc[: n - 1]
    if used.size == 0:
        # only an EOS step and it is excluded: empty product
        used = np.zeros(1)
    step_confs = tuple(float(math.exp(x)) for x in logc[:n])
    word = math.exp(math.fsum(used))
    dist = levenshtein(tokens, sample.label)
    return PredictionRecord(
        predicted=tokens,
        step_confidences=step_confs if include_eos or not ended else step_confs[:-1],
        word_confidence=word,
        exact_match=tokens == sample.label,
        edit_distance=dist,
    )
