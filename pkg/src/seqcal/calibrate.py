"""Fitting scalar and step-dependent temperatures to word-level confidences.

Bin memberships make ECE piecewise constant in the temperature, so the
search is derivative free: a log-spaced grid locates the basin and a
golden-section pass refines it. Step-dependent temperatures are fitted
by coordinate descent with the same one-dimensional search.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .batch import WORD, BatchView
from .core import (
    IDENTITY,
    Dataset,
    InvalidInputError,
    ScalarTemperature,
    StepTemperature,
    TemperatureParams,
)
from .metrics import BinningConfig, brier_arrays, ece_arrays, nll_char, nll_word
from .parallel import pmap

T_MIN, T_MAX = 0.05, 20.0
GRID_POINTS = 64
LOG_TOL = 1e-4
STS_TOL = 1e-6
STS_MAX_SWEEPS = 10
DEFAULT_TAU = 5

KINDS = ("ece", "ed-ece", "brier", "nll")


@dataclass(frozen=True)
class Objective:
    kind: str = "ece"
    n: int = 0
    binning: BinningConfig = field(default_factory=BinningConfig)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise InvalidInputError(f"unknown objective {self.kind!r}; expected one of {KINDS}")
        if self.kind == "ed-ece" and self.n < 0:
            raise InvalidInputError("ed-ece threshold must be >= 0")

    @property
    def name(self) -> str:
        return f"ed-ece:{self.n}" if self.kind == "ed-ece" else self.kind

    @classmethod
    def parse(cls, text: str, bins: int = 15) -> "Objective":
        kind, _, arg = text.partition(":")
        return cls(kind, int(arg) if arg else (1 if kind == "ed-ece" else 0), BinningConfig(bins))


@dataclass
class FitReport:
    method: str
    objective: str
    window: int | str
    temps: tuple[float, ...]
    before: float
    after: float
    evaluations: int
    bins: int = 15
    word_ece_before: float | None = None
    word_ece_after: float | None = None

    @property
    def tau(self) -> int:
        return len(self.temps) - 1

    @property
    def params(self) -> TemperatureParams:
        if self.method == "ts":
            return ScalarTemperature(self.temps[0])
        return StepTemperature(self.temps)

    def to_json(self) -> dict:
        out = {
            "method": self.method,
            "objective": self.objective,
            "window": self.window,
            "tau": self.tau,
            "temps": list(self.temps),
            "before": self.before,
            "after": self.after,
            "evaluations": self.evaluations,
            "bins": self.bins,
        }
        if self.word_ece_after is not None:
            out["word_ece_before"] = self.word_ece_before
            out["word_ece_after"] = self.word_ece_after
        return out

    @classmethod
    def from_json(cls, data: dict) -> "FitReport":
        try:
            temps = tuple(float(t) for t in data["temps"])
            method = data["method"]
        except (KeyError, TypeError) as exc:
            raise InvalidInputError(f"malformed fit report: {exc}") from None
        if method not in ("ts", "sts"):
            raise InvalidInputError(f"unknown fit method {method!r}")
        if method == "ts" and len(temps) != 1:
            raise InvalidInputError("a ts fit carries exactly one temperature")
        return cls(
            method=method,
            objective=data.get("objective", "ece"),
            window=data.get("window", WORD),
            temps=temps,
            before=float(data.get("before", math.nan)),
            after=float(data.get("after", math.nan)),
            evaluations=int(data.get("evaluations", 0)),
            bins=int(data.get("bins", 15)),
            word_ece_before=data.get("word_ece_before"),
            word_ece_after=data.get("word_ece_after"),
        )


def _view(dataset: Dataset | BatchView, include_eos: bool = True) -> BatchView:
    if isinstance(dataset, BatchView):
        return dataset
    return BatchView(dataset, include_eos)


def evaluate_objective(
    dataset: Dataset | BatchView,
    params: TemperatureParams,
    obj: Objective,
    window=WORD,
) -> float:
    """Objective value of the records produced under ``params``.

    ``window`` selects word records (``"word"``) or sliding windows of
    that many steps. The NLL objective is teacher forced: window 1 gives
    the per-character average, anything else the per-word average.
    """
    view = _view(dataset)
    if obj.kind == "nll":
        return nll_char(view, params) if window == 1 else nll_word(view, params)
    rec = view.records(params, window)
    conf = rec.confidence
    if obj.kind == "brier":
        return brier_arrays(conf, rec.exact_match)
    hits = rec.exact_match if obj.kind == "ece" else rec.edit_distance <= obj.n
    return ece_arrays(conf, hits, min(obj.binning.bins, len(conf)))


# --------------------------------------------------------------------------
# one-dimensional search
# --------------------------------------------------------------------------

INV_PHI = (math.sqrt(5.0) - 1.0) / 2.0


def golden_section(f: Callable[[float], float], lo: float, hi: float, tol: float = LOG_TOL):
    """Minimise ``f`` on ``[lo, hi]``; returns ``(x, f(x), evaluations)``."""
    a, b = lo, hi
    c = b - INV_PHI * (b - a)
    d = a + INV_PHI * (b - a)
    fc, fd = f(c), f(d)
    evals = 2
    while b - a > tol:
        if fc <= fd:
            b, d, fd = d, c, fc
            c = b - INV_PHI * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + INV_PHI * (b - a)
            fd = f(d)
        evals += 1
    return (c, fc, evals) if fc <= fd else (d, fd, evals)


def log_grid(points: int = GRID_POINTS, lo: float = T_MIN, hi: float = T_MAX) -> np.ndarray:
    return np.geomspace(lo, hi, points)


def _line_search(f: Callable[[float], float], anchor: float):
    """Grid + golden-section minimisation of ``f`` over log-temperature.

    ``anchor`` is always a candidate; ties go to the point nearest it in
    log space. Returns ``(t, value, evaluations)``.
    """
    grid = np.unique(np.append(log_grid(), anchor))
    logs = np.log(grid)
    values = pmap(f, grid)
    evals = len(grid)
    vals = np.asarray(values)
    best = min(range(len(grid)), key=lambda i: (vals[i], abs(logs[i] - math.log(anchor))))
    lo = logs[max(best - 1, 0)]
    hi = logs[min(best + 1, len(grid) - 1)]
    best_t, best_v = float(grid[best]), float(vals[best])
    if hi > lo:
        x, v, n = golden_section(lambda u: f(math.exp(u)), lo, hi)
        evals += n
        if v < best_v:
            best_t, best_v = math.exp(x), v
    return best_t, best_v, evals


# --------------------------------------------------------------------------
# fitting
# --------------------------------------------------------------------------


def fit_scalar(
    dataset: Dataset | BatchView, obj: Objective = Objective(), window=WORD
) -> FitReport:
    """Fit one temperature minimising ``obj`` on the given records."""
    view = _view(dataset)

    def f(t: float) -> float:
        return evaluate_objective(view, ScalarTemperature(t), obj, window)

    before = f(1.0)
    t, after, evals = _line_search(f, 1.0)
    return FitReport("ts", obj.name, window, (t,), before, after, evals + 1, obj.binning.bins)


def fit_sts(
    dataset: Dataset | BatchView,
    obj: Objective = Objective(),
    tau: int = DEFAULT_TAU,
    window=WORD,
) -> FitReport:
    """Fit ``tau + 1`` step temperatures by coordinate descent.

    Starts from the scalar fit and sweeps positions in ascending order;
    stops once a sweep improves the objective by less than 1e-6 or after
    ten sweeps.
    """
    if tau < 0:
        raise InvalidInputError("tau must be >= 0")
    view = _view(dataset)
    scalar = fit_scalar(view, obj, window)
    temps = [scalar.temps[0]] * (tau + 1)
    current = evaluate_objective(view, StepTemperature(tuple(temps)), obj, window)
    evals = scalar.evaluations + 1
    for _ in range(STS_MAX_SWEEPS):
        start = current
        for j in range(tau + 1):

            def f(t: float, j=j) -> float:
                trial = list(temps)
                trial[j] = t
                return evaluate_objective(view, StepTemperature(tuple(trial)), obj, window)

            t, v, n = _line_search(f, temps[j])
            evals += n
            if v < current:
                temps[j], current = t, v
        if start - current < STS_TOL:
            break
    return FitReport("sts", obj.name, window, tuple(temps), scalar.before, current, evals, obj.binning.bins)


def ngram_records(dataset: Dataset | BatchView, params: TemperatureParams, n=WORD):
    """Sliding-window records (column form) of width ``n`` over each decoded word.

    ``n=1`` yields one record per decoding step; ``n="word"`` (or any
    ``n`` at least the decoded length) yields the word record itself.
    """
    if n != WORD and int(n) < 1:
        raise InvalidInputError("window must be >= 1 or 'word'")
    return _view(dataset).records(params, n)


def fit_windowed(dataset: Dataset | BatchView, obj: Objective = Objective(), n=WORD) -> FitReport:
    """Scalar fit on window-``n`` records, reporting word-level ECE before and after."""
    view = _view(dataset)
    rep = fit_scalar(view, obj, n)
    word_obj = Objective("ece", binning=obj.binning)
    rep.word_ece_before = evaluate_objective(view, IDENTITY, word_obj)
    rep.word_ece_after = evaluate_objective(view, rep.params, word_obj)
    return rep


@dataclass(frozen=True)
class LengthRow:
    length: int
    count: int
    temperature: float
    ece: float
    is_argmin: bool


def stratify_by_length(
    dataset: Dataset | BatchView, temps: Sequence[float], cfg: BinningConfig = BinningConfig()
) -> list[LengthRow]:
    """Word ECE per label length at each temperature; flags each length's best T."""
    if len(temps) == 0:
        raise InvalidInputError("no temperatures given")
    view = _view(dataset)
    lengths = np.array([len(s.label) for s in view.dataset.samples])
    groups = {int(L): np.flatnonzero(lengths == L) for L in np.unique(lengths)}
    per_t = [view.word_records(ScalarTemperature(float(t))) for t in temps]
    rows = []
    for L, idx in sorted(groups.items()):
        if idx.size == 0:
            continue
        bins = min(cfg.bins, idx.size)
        vals = [ece_arrays(r.confidence[idx], r.exact_match[idx], bins) for r in per_t]
        best = int(np.argmin(vals))
        for i, (t, v) in enumerate(zip(temps, vals)):
            rows.append(LengthRow(L, int(idx.size), float(t), float(v), i == best))
    return rows


def length_argmins(rows: Sequence[LengthRow]) -> dict[int, float]:
    return {r.length: r.temperature for r in rows if r.is_argmin}


__all__ = [
    "Objective",
    "FitReport",
    "evaluate_objective",
    "fit_scalar",
    "fit_sts",
    "fit_windowed",
    "ngram_records",
    "stratify_by_length",
    "LengthRow",
    "golden_section",
]
