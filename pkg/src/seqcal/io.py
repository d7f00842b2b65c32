"""Line-oriented dataset files and deterministic report writers.

A dataset file holds one JSON object per line. The first line is a header
``{"version": 1, "vocab": [...], "eos": ..., ["unk": ...], ["generator": {...}]}``;
each following line is a sample ``{"id", "label", "logits"}`` with
``logits`` an L x K nested list. Logits are written with 17 significant
digits so a save/load round trip is bit exact. Reports round floats to 12
significant digits, which keeps them byte-stable across kernel backends.
"""

from __future__ import annotations

import csv
import io
import json
import math
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .core import Dataset, InvalidInputError, Sample, Vocabulary
from .metrics import ReliabilityBin

FORMAT_VERSION = 1
REPORT_DIGITS = 12


class DatasetFormatError(InvalidInputError):
    def __init__(self, path, line: int | None, message: str):
        where = f"{path}:{line}" if line is not None else str(path)
        super().__init__(f"{where}: {message}")
        self.path = path
        self.line = line


def _num(x: float) -> str:
    text = format(float(x), ".17g")
    # keep a float literal so "-0" does not come back as the integer 0
    return text if any(c in text for c in ".en") else text + ".0"


def _sample_line(sample: Sample) -> str:
    rows = ",".join("[" + ",".join(map(_num, row)) + "]" for row in sample.logits)
    head = json.dumps({"id": sample.id, "label": list(sample.label)})
    return head[:-1] + ', "logits": [' + rows + "]}"


def save_dataset(dataset: Dataset, path) -> None:
    vocab = dataset.vocabulary
    header: dict = {"version": FORMAT_VERSION, "vocab": list(vocab.symbols), "eos": vocab.eos}
    if vocab.unk is not None:
        header["unk"] = vocab.unk
    if "generator" in dataset.meta:
        header["generator"] = dataset.meta["generator"]
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(json.dumps(header) + "\n")
        for s in dataset.samples:
            fh.write(_sample_line(s) + "\n")


def _parse_header(path, text: str) -> tuple[Vocabulary, dict]:
    try:
        head = json.loads(text)
    except json.JSONDecodeError as exc:
        raise DatasetFormatError(path, 1, f"header is not valid JSON ({exc.msg})") from None
    if not isinstance(head, dict):
        raise DatasetFormatError(path, 1, "header must be a JSON object")
    if head.get("version") != FORMAT_VERSION:
        raise DatasetFormatError(
            path, 1, f"unsupported format version {head.get('version')!r}, expected {FORMAT_VERSION}"
        )
    vocab = head.get("vocab")
    if not isinstance(vocab, list) or not all(isinstance(t, str) for t in vocab):
        raise DatasetFormatError(path, 1, "header 'vocab' must be a list of strings")
    try:
        vocabulary = Vocabulary(tuple(vocab), eos=head.get("eos"), unk=head.get("unk"))
    except InvalidInputError as exc:
        raise DatasetFormatError(path, 1, str(exc)) from None
    meta = {"generator": head["generator"]} if "generator" in head else {}
    return vocabulary, meta


def _parse_sample(path, lineno: int, text: str, vocab: Vocabulary) -> Sample:
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise DatasetFormatError(path, lineno, f"not valid JSON ({exc.msg})") from None
    if not isinstance(obj, dict) or not {"id", "label", "logits"} <= obj.keys():
        raise DatasetFormatError(path, lineno, "sample needs 'id', 'label' and 'logits'")
    label = obj["label"]
    if isinstance(label, str):
        label = list(label)
    if not isinstance(label, list):
        raise DatasetFormatError(path, lineno, "label must be a string or a list of tokens")
    for tok in label:
        if tok not in vocab.index or tok == vocab.eos:
            raise DatasetFormatError(path, lineno, f"label token {tok!r} not in vocabulary")
    rows = obj["logits"]
    if not isinstance(rows, list) or not rows:
        raise DatasetFormatError(path, lineno, "logits must be a non-empty list of rows")
    for j, row in enumerate(rows):
        if not isinstance(row, list) or len(row) != vocab.size:
            width = len(row) if isinstance(row, list) else "non-list"
            raise DatasetFormatError(
                path, lineno, f"logits row {j} has {width} entries, expected {vocab.size}"
            )
    try:
        arr = np.array(rows, dtype=np.float64)
    except (TypeError, ValueError):
        raise DatasetFormatError(path, lineno, "logits must be numbers") from None
    if not np.all(np.isfinite(arr)):
        raise DatasetFormatError(path, lineno, "logits must be finite")
    return Sample(str(obj["id"]), arr, tuple(label))


def load_dataset(path) -> Dataset:
    """Read and validate a dataset file; errors name the offending line."""
    p = Path(path)
    if not p.is_file():
        raise DatasetFormatError(p, None, "no such file")
    with open(p, encoding="utf-8") as fh:
        lines = fh.read().splitlines()
    if not lines or not lines[0].strip():
        raise DatasetFormatError(p, 1, "missing header line")
    vocab, meta = _parse_header(p, lines[0])
    samples = [
        _parse_sample(p, i, text, vocab)
        for i, text in enumerate(lines[1:], start=2)
        if text.strip()
    ]
    if not samples:
        raise DatasetFormatError(p, None, "dataset has no samples")
    seen = set()
    for s in samples:
        if s.id in seen:
            raise DatasetFormatError(p, None, f"duplicate sample id {s.id!r}")
        seen.add(s.id)
    return Dataset(vocab, tuple(samples), meta)


# --------------------------------------------------------------------------
# reports
# --------------------------------------------------------------------------


def rounded(value, digits: int = REPORT_DIGITS):
    """Recursively round floats to ``digits`` significant digits."""
    if isinstance(value, (float, np.floating)):
        x = float(value)
        return float(format(x, f".{digits}g")) if math.isfinite(x) else None
    if isinstance(value, (np.integer,)):
        return int(value)
    if isinstance(value, dict):
        return {k: rounded(v, digits) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [rounded(v, digits) for v in value]
    return value


def write_json(obj, path) -> None:
    Path(path).write_text(json.dumps(rounded(obj), indent=2) + "\n", encoding="utf-8")


def read_json(path):
    p = Path(path)
    if not p.is_file():
        raise InvalidInputError(f"{p}: no such file")
    try:
        return json.loads(p.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise InvalidInputError(f"{p}: not valid JSON ({exc.msg})") from None


def _cell(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return format(float(x), f".{REPORT_DIGITS}g")
    return str(x)


def write_csv(path, header: Sequence[str], rows: Iterable[Sequence]) -> None:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([_cell(x) for x in row])
    Path(path).write_text(buf.getvalue(), encoding="utf-8")


RELIABILITY_COLUMNS = ("bin_index", "count", "conf_low", "conf_high", "mean_confidence", "accuracy")
STRATIFY_COLUMNS = ("length", "count", "temperature", "ece", "is_argmin")
BEAM_COLUMNS = ("method", "width", "calibrated", "accuracy", "delta")


def write_reliability(path, bins: Sequence[ReliabilityBin]) -> None:
    write_csv(
        path,
        RELIABILITY_COLUMNS,
        (
            (i, b.count, b.confidence_range[0], b.confidence_range[1], b.mean_confidence, b.accuracy)
            for i, b in enumerate(bins)
        ),
    )


def write_stratify(path, rows) -> None:
    write_csv(path, STRATIFY_COLUMNS, ((r.length, r.count, r.temperature, r.ece, r.is_argmin) for r in rows))


def write_beam(path, rows, method: str) -> None:
    write_csv(path, BEAM_COLUMNS, ((method, r.width, r.calibrated, r.accuracy, r.delta) for r in rows))
