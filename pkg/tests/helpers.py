"""Shared builders for tests: random record sets and random stateful models."""

import hashlib

import numpy as np

from seqcal.core import EOS, Vocabulary
from seqcal.synth import ALPHABET


def vocab_of(k: int) -> Vocabulary:
    """``k - 1`` letters followed by EOS."""
    return Vocabulary.from_chars(ALPHABET[: k - 1], eos=EOS)


class RandomModel:
    """Prefix-dependent Gaussian logits derived from a hash of ``(seed, prefix)``."""

    def __init__(self, seed: int, vocab_size: int, max_len: int, spread: float = 2.0):
        self.seed = seed
        self.vocab_size = vocab_size
        self.max_len = max_len
        self.spread = spread

    def next_logits(self, prefix):
        key = hashlib.blake2b(repr((self.seed, tuple(prefix))).encode(), digest_size=8).digest()
        rng = np.random.default_rng(int.from_bytes(key, "little"))
        return rng.normal(0.0, self.spread, self.vocab_size)


def random_models(count: int, seed: int = 0, max_k: int = 4, max_len: int = 5):
    rng = np.random.default_rng(seed)
    out = []
    for i in range(count):
        k = int(rng.integers(2, max_k + 1))
        n = int(rng.integers(1, max_len + 1))
        out.append(RandomModel(seed * 100_003 + i, k, n, float(rng.uniform(0.5, 3.0))))
    return out
