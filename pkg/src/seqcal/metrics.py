"""Calibration metrics under equal-mass binning.

Record-level entry points (``ece``, ``ed_ece``, ``brier``,
``reliability_diagram``) take lists of :class:`~seqcal.core.PredictionRecord`.
The ``*_arrays`` variants take plain columns and are what the optimizers
call in their inner loop.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .batch import BatchView
from .core import Dataset, InvalidInputError, PredictionRecord, TemperatureParams

log = logging.getLogger(__name__)

DEFAULT_BINS = 15


class InvalidBinningError(InvalidInputError):
    pass


@dataclass(frozen=True)
class BinningConfig:
    bins: int = DEFAULT_BINS
    strategy: str = "equal-mass"

    def __post_init__(self):
        if self.bins < 1:
            raise InvalidBinningError(f"need at least one bin, got {self.bins}")
        if self.strategy != "equal-mass":
            raise InvalidBinningError(f"unsupported binning strategy {self.strategy!r}")


@dataclass(frozen=True)
class ReliabilityBin:
    count: int
    mean_confidence: float
    accuracy: float
    confidence_range: tuple[float, float]

    @property
    def gap(self) -> float:
        return self.accuracy - self.mean_confidence


def _columns(records: Sequence[PredictionRecord]):
    if len(records) == 0:
        raise InvalidInputError("no records")
    conf = np.fromiter((r.word_confidence for r in records), dtype=np.float64, count=len(records))
    exact = np.fromiter((r.exact_match for r in records), dtype=bool, count=len(records))
    dist = np.fromiter((r.edit_distance for r in records), dtype=np.int64, count=len(records))
    return conf, exact, dist


def bin_sizes(n: int, bins: int) -> np.ndarray:
    """Sizes of ``bins`` contiguous groups over ``n`` items, larger groups first."""
    if bins < 1:
        raise InvalidBinningError(f"need at least one bin, got {bins}")
    if bins > n:
        raise InvalidBinningError(f"{bins} bins requested for {n} records")
    q, r = divmod(n, bins)
    return np.array([q + 1] * r + [q] * (bins - r), dtype=np.int64)


def equal_mass_bins(confidences, bins: int) -> np.ndarray:
    """Bin index of every record after a stable sort by confidence."""
    conf = np.asarray(confidences, dtype=np.float64)
    order = np.argsort(conf, kind="stable")
    labels = np.repeat(np.arange(bins), bin_sizes(len(conf), bins))
    out = np.empty(len(conf), dtype=np.int64)
    out[order] = labels
    return out


def _binned(conf: np.ndarray, hits: np.ndarray, bins: int):
    order = np.argsort(conf, kind="stable")
    sizes = bin_sizes(len(conf), bins)
    edges = np.concatenate(([0], np.cumsum(sizes)[:-1]))
    c = conf[order]
    h = hits[order].astype(np.float64)
    return sizes, edges, c, np.add.reduceat(c, edges), np.add.reduceat(h, edges)


def ece_arrays(conf, hits, bins: int) -> float:
    conf = np.asarray(conf, dtype=np.float64)
    if conf.size == 0:
        raise InvalidInputError("no records")
    _, _, _, csum, hsum = _binned(conf, np.asarray(hits), bins)
    return float(np.sum(np.abs(hsum - csum)) / conf.size)


def brier_arrays(conf, hits) -> float:
    conf = np.asarray(conf, dtype=np.float64)
    if conf.size == 0:
        raise InvalidInputError("no records")
    return float(np.mean((np.asarray(hits, dtype=np.float64) - conf) ** 2))


def ece(records: Sequence[PredictionRecord], cfg: BinningConfig = BinningConfig()) -> float:
    """Expected calibration error against exact word match."""
    conf, exact, _ = _columns(records)
    return ece_arrays(conf, exact, cfg.bins)


def ed_ece(records: Sequence[PredictionRecord], n: int, cfg: BinningConfig = BinningConfig()) -> float:
    """ECE where a record counts as correct when its edit distance is at most ``n``."""
    if n < 0:
        raise InvalidInputError("edit-distance threshold must be >= 0")
    conf, _, dist = _columns(records)
    return ece_arrays(conf, dist <= n, cfg.bins)


def brier(records: Sequence[PredictionRecord]) -> float:
    """Mean squared gap between word confidence and the exact-match indicator."""
    conf, exact, _ = _columns(records)
    return brier_arrays(conf, exact)


def reliability_arrays(conf, hits, bins: int) -> list[ReliabilityBin]:
    conf = np.asarray(conf, dtype=np.float64)
    if conf.size == 0:
        raise InvalidInputError("no records")
    sizes, edges, c, csum, hsum = _binned(conf, np.asarray(hits), bins)
    out = []
    for size, lo, cs, hs in zip(sizes, edges, csum, hsum):
        out.append(
            ReliabilityBin(
                count=int(size),
                mean_confidence=float(cs / size),
                accuracy=float(hs / size),
                confidence_range=(float(c[lo]), float(c[lo + size - 1])),
            )
        )
    return out


def reliability_diagram(
    records: Sequence[PredictionRecord], cfg: BinningConfig = BinningConfig()
) -> list[ReliabilityBin]:
    """Per-bin accuracy and confidence, ordered by confidence."""
    conf, exact, _ = _columns(records)
    return reliability_arrays(conf, exact, cfg.bins)


def _nll_terms(dataset: Dataset | BatchView, params: TemperatureParams, include_eos: bool):
    view = dataset if isinstance(dataset, BatchView) else BatchView(dataset, include_eos)
    logp, lengths = view.teacher_forced_log_probs(params)
    if view.nll_skipped:
        log.warning("nll: skipped %d unalignable samples", len(view.nll_skipped))
    if len(logp) == 0:
        raise InvalidInputError("no sample is alignable with its label")
    return -logp, lengths


def nll_word(dataset: Dataset | BatchView, params: TemperatureParams, include_eos: bool = True) -> float:
    """Mean teacher-forced negative log-likelihood of each label sequence."""
    terms, _ = _nll_terms(dataset, params, include_eos)
    return float(np.sum(terms) / len(terms))


def nll_char(dataset: Dataset | BatchView, params: TemperatureParams, include_eos: bool = True) -> float:
    """Teacher-forced negative log-likelihood averaged per decoding step."""
    terms, lengths = _nll_terms(dataset, params, include_eos)
    return float(np.sum(terms) / np.sum(lengths))
