"""Levenshtein distance over token sequences."""

from typing import Hashable, Sequence

from . import kernels


def levenshtein(a: Sequence[Hashable], b: Sequence[Hashable]) -> int:
    """Minimum number of insertions, deletions and substitutions turning ``a`` into ``b``.

    Works on any sequences of hashable tokens (strings, tuples of tokens,
    id lists). Uses two DP rows sized by the shorter input.

    >>> levenshtein("COFEEE", "COFFEE")
    1
    >>> levenshtein("kitten", "sitting")
    3
    """
    if len(a) == 0 or len(b) == 0:
        return max(len(a), len(b))
    ids: dict = {}
    ia = [ids.setdefault(t, len(ids)) for t in a]
    ib = [ids.setdefault(t, len(ids)) for t in b]
    return int(kernels.levenshtein_ids(ia, ib))
