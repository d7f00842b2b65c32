"""Seeded synthetic sequence data with controllable miscalibration.

Every sample owns a small autoregressive model. At each prefix the model
draws a step confidence ``c`` and spreads ``1 - c`` over the other tokens.
Which token is the ground truth is then sampled from that same
distribution when the prefix is still correct, so the unscaled model is
calibrated both per step and per word. After the first mistake the
argmax is right only with probability ``c * (1 - rho)``: errors cluster
along the decoded path, per-step marginals drop, but the word-level
probability of being right is unchanged. Logits are ``scale *
schedule[j] * log p``.

All randomness comes from Philox streams keyed by ``(seed, sample index,
prefix)``; a sample, and every prefix query on its model, is reproducible
on its own and independent of generation order.
"""

from __future__ import annotations

import hashlib
import json
import math
import threading
import string
from dataclasses import asdict, dataclass, field
from functools import lru_cache
from pathlib import Path

import numpy as np

from .core import EOS, Dataset, InvalidInputError, Sample, Vocabulary

ALPHABET = string.ascii_lowercase + string.digits


@dataclass(frozen=True)
class GeneratorConfig:
    num_symbols: int = 26
    num_samples: int = 1000
    min_length: int = 1
    max_length: int = 10
    accuracy: float = 0.9
    concentration: float = 2.0
    rho: float = 0.0
    scale: float = 1.0
    schedule: tuple[float, ...] | None = None
    seed: int = 0

    def __post_init__(self):
        if self.schedule is not None:
            object.__setattr__(self, "schedule", tuple(float(x) for x in self.schedule))
        k = self.vocab_size
        problems = []
        if not 1 <= self.num_symbols <= len(ALPHABET):
            problems.append(f"num_symbols must be in [1, {len(ALPHABET)}]")
        if self.num_samples < 1:
            problems.append("num_samples must be >= 1")
        if not 1 <= self.min_length <= self.max_length:
            problems.append("need 1 <= min_length <= max_length")
        if not 1.0 / k < self.accuracy < 1.0:
            problems.append(f"accuracy must lie in (1/K, 1) = ({1.0 / k:.4f}, 1)")
        if not self.concentration > 0:
            problems.append("concentration must be > 0")
        if not 0.0 <= self.rho <= 1.0:
            problems.append("rho must lie in [0, 1]")
        if not (math.isfinite(self.scale) and self.scale > 0):
            problems.append("scale must be > 0")
        if self.schedule is not None and (
            not self.schedule or not all(math.isfinite(x) and x > 0 for x in self.schedule)
        ):
            problems.append("schedule entries must be > 0")
        if not 0 <= self.seed < 2**64:
            problems.append("seed must be a 64-bit unsigned integer")
        if problems:
            raise InvalidInputError("invalid generator config: " + "; ".join(problems))

    @property
    def vocab_size(self) -> int:
        return self.num_symbols + 1

    def vocabulary(self) -> Vocabulary:
        return Vocabulary.from_chars(ALPHABET[: self.num_symbols], eos=EOS)

    def step_scale(self, position: int) -> float:
        if self.schedule is None:
            return self.scale
        return self.scale * self.schedule[min(position, len(self.schedule) - 1)]

    def to_json(self) -> dict:
        d = asdict(self)
        d["schedule"] = list(self.schedule) if self.schedule is not None else None
        return d

    @classmethod
    def from_json(cls, data: dict) -> "GeneratorConfig":
        known = {f for f in cls.__dataclass_fields__}
        extra = set(data) - known
        if extra:
            raise InvalidInputError(f"unknown generator config keys: {sorted(extra)}")
        return cls(**data)

    @classmethod
    def load(cls, path) -> "GeneratorConfig":
        return cls.from_json(json.loads(Path(path).read_text()))


class _Streams:
    """One Philox generator re-keyed per ``(seed, sample, prefix)`` tuple.

    The 128-bit key is a BLAKE2b digest of the little-endian key integers,
    so streams do not depend on platform or generation order.
    """

    def __init__(self):
        self._bits = np.random.Philox(0)
        self._gen = np.random.Generator(self._bits)

    def __call__(self, *key: int) -> np.random.Generator:
        raw = hashlib.blake2b(
            b"".join(int(k).to_bytes(8, "little") for k in key), digest_size=16
        ).digest()
        self._bits.state = {
            "bit_generator": "Philox",
            "state": {
                "counter": np.zeros(4, dtype=np.uint64),
                "key": np.frombuffer(raw, dtype="<u8").astype(np.uint64),
            },
            "buffer": np.zeros(4, dtype=np.uint64),
            "buffer_pos": 4,
            "has_uint32": 0,
            "uinteger": 0,
        }
        return self._gen


_local = threading.local()


def _rng(*key: int) -> np.random.Generator:
    streams = getattr(_local, "streams", None)
    if streams is None:
        streams = _local.streams = _Streams()
    return streams(*key)


@dataclass(eq=False)
class SynthModel:
    """Prefix-dependent logits for one synthetic sample (a ``SequenceModel``)."""

    config: GeneratorConfig
    index: int
    label_ids: tuple[int, ...]
    vocab_size: int = field(init=False)
    max_len: int = field(init=False)

    def __post_init__(self):
        self.vocab_size = self.config.vocab_size
        self.max_len = len(self.label_ids) + 1
        self._cache: dict[tuple[int, ...], np.ndarray] = {}

    @property
    def eos_id(self) -> int:
        return self.config.num_symbols

    def next_logits(self, prefix) -> np.ndarray:
        prefix = tuple(int(t) for t in prefix)
        hit = self._cache.get(prefix)
        if hit is None:
            hit = self._build(prefix)
            hit.flags.writeable = False
            self._cache[prefix] = hit
        return hit

    def _build(self, prefix: tuple[int, ...]) -> np.ndarray:
        cfg = self.config
        k = cfg.vocab_size
        m = len(prefix)
        n_label = len(self.label_ids)
        rng = _rng(cfg.seed, self.index, 1 + m, *prefix)

        lo = 1.0 / k
        mean = (cfg.accuracy - lo) / (1.0 - lo)
        conf = lo + (1.0 - lo) * rng.beta(cfg.concentration * mean, cfg.concentration * (1.0 - mean))
        conf = min(max(conf, lo + 1e-9), 1.0 - 1e-9)
        w = rng.standard_exponential(k - 1)
        rest = np.maximum(w / w.sum() * (1.0 - conf), 1e-300)
        if rest.max() >= conf:
            # pull toward uniform so the drawn confidence stays the argmax
            flat = (1.0 - conf) / (k - 1)
            shrink = (conf * (1.0 - 1e-9) - flat) / (rest.max() - flat)
            rest = flat + shrink * (rest - flat)
        slots = np.concatenate(([conf], rest))

        on_track = m <= n_label and prefix == self.label_ids[:m]
        target = self.label_ids[m] if m < n_label else self.eos_id
        p_hit = conf if on_track else conf * (1.0 - cfg.rho)
        if rng.random() < p_hit:
            t_slot = 0
        else:
            cum = np.cumsum(rest)
            t_slot = 1 + min(int(np.searchsorted(cum, rng.random() * cum[-1], side="right")), k - 2)

        others = [t for t in range(k) if t != target]
        others = [others[i] for i in rng.permutation(len(others))]
        token_at = np.empty(k, dtype=np.int64)
        free = [s for s in range(k) if s != t_slot]
        token_at[t_slot] = target
        token_at[free] = others
        if m < n_label and token_at[0] == self.eos_id:
            # no early stop before the label's end
            swap = [s for s in free if s != 0] or [t_slot]
            j = swap[int(rng.integers(len(swap)))]
            token_at[0], token_at[j] = token_at[j], token_at[0]

        logits = np.empty(k, dtype=np.float64)
        logits[token_at] = np.log(slots) * cfg.step_scale(m)
        return logits

    def greedy_path(self) -> np.ndarray:
        rows, prefix = [], []
        for _ in range(self.max_len):
            z = self.next_logits(prefix)
            rows.append(z)
            tok = int(np.argmax(z))
            if tok == self.eos_id:
                break
            prefix.append(tok)
        return np.stack(rows)


def sample_label(cfg: GeneratorConfig, index: int) -> tuple[int, ...]:
    rng = _rng(cfg.seed, index)
    n = int(rng.integers(cfg.min_length, cfg.max_length + 1))
    return tuple(int(x) for x in rng.integers(0, cfg.num_symbols, size=n))


def make_model(cfg: GeneratorConfig, index: int) -> SynthModel:
    return SynthModel(cfg, index, sample_label(cfg, index))


def sample_id(index: int) -> str:
    return f"s{index:06d}"


def generate_dataset(cfg: GeneratorConfig) -> tuple[Dataset, list[SynthModel]]:
    """Dataset of greedy-path logits plus the stateful model behind each sample."""
    vocab = cfg.vocabulary()
    samples, models = [], []
    for i in range(cfg.num_samples):
        model = make_model(cfg, i)
        label = vocab.decode(model.label_ids)
        samples.append(Sample(sample_id(i), model.greedy_path(), label))
        models.append(model)
    return Dataset(vocab, tuple(samples), {"generator": cfg.to_json()}), models


def models_for(dataset: Dataset) -> list[SynthModel]:
    """Rebuild the stateful models of a dataset produced by :func:`generate_dataset`."""
    raw = dataset.meta.get("generator")
    if raw is None:
        raise InvalidInputError("dataset carries no generator config; stateful models unavailable")
    cfg = GeneratorConfig.from_json(raw)
    models = []
    for s in dataset.samples:
        index = int(s.id.lstrip("s"))
        model = make_model(cfg, index)
        if dataset.vocabulary.decode(model.label_ids) != s.label:
            raise InvalidInputError(f"sample {s.id!r} does not match its generator config")
        models.append(model)
    return models


def independence_gap(dataset: Dataset) -> tuple[float, float]:
    """Word accuracy versus the accuracy implied by per-position marginals.

    Returns ``(empirical word accuracy, mean over samples of the product of
    per-position greedy correctness rates)``. The two agree when decoding
    steps are independent.
    """
    vocab = dataset.vocabulary
    eos = vocab.eos_id
    hits_by_pos: dict[int, list[bool]] = {}
    per_sample = []
    exact = []
    for s in dataset.samples:
        truth = vocab.encode(s.label) + (eos,)
        pred = tuple(int(i) for i in np.argmax(s.logits, axis=1))
        steps = [j < len(truth) and pred[j] == truth[j] for j in range(len(pred))]
        for j, ok in enumerate(steps):
            hits_by_pos.setdefault(j, []).append(ok)
        per_sample.append(len(steps))
        exact.append(all(steps) and len(pred) == len(truth))
    rate = {j: float(np.mean(v)) for j, v in hits_by_pos.items()}
    implied = [math.prod(rate[j] for j in range(n)) for n in per_sample]
    return float(np.mean(exact)), float(np.mean(implied))


@lru_cache(maxsize=8)
def cached_dataset(cfg: GeneratorConfig) -> tuple[Dataset, list[SynthModel]]:
    return generate_dataset(cfg)
