"""Command-line pipeline: synth, calibrate, evaluate, reliability, stratify, beam.

Exit codes: 0 on success, 2 on invalid input or usage, 1 on internal errors.
"""

from __future__ import annotations

import argparse
import logging
import sys

from . import io
from .batch import WORD, BatchView
from .calibrate import (
    DEFAULT_TAU,
    FitReport,
    Objective,
    evaluate_objective,
    fit_scalar,
    fit_sts,
    fit_windowed,
    stratify_by_length,
)
from .core import IDENTITY, InvalidInputError
from .decode import beam_accuracy_experiment
from .metrics import DEFAULT_BINS, BinningConfig, reliability_arrays
from .synth import GeneratorConfig, generate_dataset, models_for

log = logging.getLogger("seqcal")

DEFAULT_METRICS = "ece,ed-ece:1,ed-ece:2,brier,nll"

EPILOG = """\
CSV outputs:
  reliability  bin_index,count,conf_low,conf_high,mean_confidence,accuracy
  stratify     length,count,temperature,ece,is_argmin
  beam         method,width,calibrated,accuracy,delta

Set SEQCAL_THREADS to cap worker threads (default: all cores).
"""


class UsageError(InvalidInputError):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(f"{self.prog}: {message}")


def _csv_list(text: str, cast):
    try:
        return [cast(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise UsageError(f"cannot parse list {text!r}") from None


def _window(text: str):
    if text == WORD:
        return WORD
    try:
        n = int(text)
    except ValueError:
        raise UsageError(f"--window must be a positive integer or 'word', got {text!r}") from None
    if n < 1:
        raise UsageError("--window must be >= 1")
    return n


def _load_fit(path) -> FitReport:
    return FitReport.from_json(io.read_json(path))


# --------------------------------------------------------------------------
# subcommands
# --------------------------------------------------------------------------


def cmd_synth(args) -> None:
    cfg = GeneratorConfig.load(args.config)
    dataset, _ = generate_dataset(cfg)
    io.save_dataset(dataset, args.out)


def cmd_calibrate(args) -> None:
    dataset = io.load_dataset(args.data)
    kind = args.objective
    if kind == "ed-ece" and args.n is None:
        raise UsageError("--objective ed-ece requires --n")
    obj = Objective(kind, args.n if kind == "ed-ece" else 0, BinningConfig(args.bins))
    window = _window(args.window)
    view = BatchView(dataset)
    if args.method == "sts":
        if window != WORD:
            raise UsageError("--method sts fits word records only")
        rep = fit_sts(view, obj, args.tau)
    elif window == WORD:
        rep = fit_scalar(view, obj)
    else:
        rep = fit_windowed(view, obj, window)
    io.write_json(rep.to_json(), args.out)


def _metric(view: BatchView, params, name: str, bins: int) -> float:
    if name == "accuracy":
        return float(view.word_records(params).exact_match.mean())
    if name == "nll-char":
        return evaluate_objective(view, params, Objective("nll"), 1)
    try:
        obj = Objective.parse(name, bins)
    except ValueError:
        raise UsageError(f"unknown metric {name!r}") from None
    return evaluate_objective(view, params, obj)


def cmd_evaluate(args) -> None:
    dataset = io.load_dataset(args.data)
    fit = _load_fit(args.fit)
    names = ["accuracy"] + [m for m in _csv_list(args.metrics, str) if m != "accuracy"]
    view = BatchView(dataset)
    before = {m: _metric(view, IDENTITY, m, args.bins) for m in names}
    after = {m: _metric(view, fit.params, m, args.bins) for m in names}
    report = {
        "samples": len(dataset),
        "bins": args.bins,
        "fit": {"method": fit.method, "temps": list(fit.temps)},
        "uncalibrated": before,
        "calibrated": after,
        "delta": {m: after[m] - before[m] for m in names},
    }
    io.write_json(report, args.out)


def cmd_reliability(args) -> None:
    dataset = io.load_dataset(args.data)
    params = _load_fit(args.fit).params if args.fit else IDENTITY
    rec = BatchView(dataset).word_records(params)
    io.write_reliability(args.out, reliability_arrays(rec.confidence, rec.exact_match, args.bins))


def cmd_stratify(args) -> None:
    dataset = io.load_dataset(args.data)
    temps = _csv_list(args.temps, float)
    if not temps or any(t <= 0 for t in temps):
        raise UsageError("--temps needs positive values")
    io.write_stratify(args.out, stratify_by_length(dataset, temps, BinningConfig(args.bins)))


def cmd_beam(args) -> None:
    dataset = io.load_dataset(args.data)
    models = models_for(dataset)
    fit = _load_fit(args.fit) if args.fit else None
    rows = beam_accuracy_experiment(
        models,
        [s.label for s in dataset.samples],
        dataset.vocabulary,
        IDENTITY,
        fit.params if fit else None,
        _csv_list(args.widths, int),
    )
    io.write_beam(args.out, rows, fit.method if fit else "none")


# --------------------------------------------------------------------------
# parser
# --------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="seqcal", description=__doc__, epilog=EPILOG,
                formatter_class=argparse.RawDescriptionHelpFormatter)
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("synth", help="generate a synthetic dataset from a JSON config")
    s.add_argument("--config", required=True)
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_synth)

    c = sub.add_parser("calibrate", help="fit temperatures on a calibration file")
    c.add_argument("--data", required=True)
    c.add_argument("--objective", choices=("ece", "ed-ece", "brier", "nll"), default="ece")
    c.add_argument("--n", type=int, default=None, help="edit-distance threshold for ed-ece")
    c.add_argument("--method", choices=("ts", "sts"), default="ts")
    c.add_argument("--tau", type=int, default=DEFAULT_TAU)
    c.add_argument("--window", default=WORD, help="aggregation window: positive integer or 'word'")
    c.add_argument("--bins", type=int, default=DEFAULT_BINS)
    c.add_argument("--out", required=True)
    c.set_defaults(func=cmd_calibrate)

    e = sub.add_parser("evaluate", help="metrics before and after applying a fit")
    e.add_argument("--data", required=True)
    e.add_argument("--fit", required=True)
    e.add_argument("--metrics", default=DEFAULT_METRICS,
                   help="comma list of ece, ed-ece:N, brier, nll, nll-char, accuracy")
    e.add_argument("--bins", type=int, default=DEFAULT_BINS)
    e.add_argument("--out", required=True)
    e.set_defaults(func=cmd_evaluate)

    r = sub.add_parser("reliability", help="equal-mass reliability diagram as CSV")
    r.add_argument("--data", required=True)
    r.add_argument("--fit")
    r.add_argument("--bins", type=int, default=DEFAULT_BINS)
    r.add_argument("--out", required=True)
    r.set_defaults(func=cmd_reliability)

    t = sub.add_parser("stratify", help="word ECE per label length over a temperature list")
    t.add_argument("--data", required=True)
    t.add_argument("--temps", required=True)
    t.add_argument("--bins", type=int, default=DEFAULT_BINS)
    t.add_argument("--out", required=True)
    t.set_defaults(func=cmd_stratify)

    b = sub.add_parser("beam", help="beam-search accuracy table (synthetic datasets only)")
    b.add_argument("--data", required=True)
    b.add_argument("--fit")
    b.add_argument("--widths", default="1,2,3,4,5")
    b.add_argument("--out", required=True)
    b.set_defaults(func=cmd_beam)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        args.func(args)
    except (InvalidInputError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # noqa: BLE001
        log.exception("internal error")
        print(f"internal error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
