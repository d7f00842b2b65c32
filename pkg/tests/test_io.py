import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from seqcal.core import Dataset, Sample, Vocabulary
from seqcal.io import DatasetFormatError, load_dataset, read_json, rounded, save_dataset, write_csv
from seqcal.synth import GeneratorConfig, generate_dataset

VOCAB = Vocabulary.from_chars("abc")
wide = st.floats(allow_nan=False, allow_infinity=False, width=64)


@settings(max_examples=40)
@given(st.lists(st.integers(1, 4).flatmap(lambda n: arrays(np.float64, (n, 4), elements=wide)), min_size=1, max_size=5))
def test_round_trip_is_bit_exact(tmp_path_factory, blocks):
    ds = Dataset(VOCAB, tuple(Sample(f"s{i}", b, ("a", "c")[: i % 3]) for i, b in enumerate(blocks)))
    path = tmp_path_factory.mktemp("rt") / "d.jsonl"
    save_dataset(ds, path)
    back = load_dataset(path)
    assert back.vocabulary == ds.vocabulary
    for x, y in zip(ds, back):
        assert x.id == y.id and x.label == y.label
        assert x.logits.tobytes() == y.logits.tobytes()


def test_generator_header_survives(tmp_path):
    ds, _ = generate_dataset(GeneratorConfig(num_samples=3, seed=1))
    save_dataset(ds, tmp_path / "d.jsonl")
    assert load_dataset(tmp_path / "d.jsonl").meta["generator"] == ds.meta["generator"]


def _write(tmp_path, lines):
    p = tmp_path / "d.jsonl"
    p.write_text("\n".join(lines) + "\n")
    return p


HEADER = json.dumps({"version": 1, "vocab": ["a", "b", "</s>"], "eos": "</s>"})


@pytest.mark.parametrize(
    "lines, fragment",
    [
        ([HEADER, '{"id": "x", "label": "a", "logits": [[1, 2]]}'], ":2: logits row 0 has 2 entries"),
        ([HEADER], "no samples"),
        ([HEADER.replace('"version": 1', '"version": 2')], ":1: unsupported format version"),
        ([HEADER, '{"id": "x", "label": "z", "logits": [[1, 2, 3]]}'], ":2: label token 'z'"),
        ([HEADER, '{"id": "x", "label": "a", "logits": [[1, 2, 3]]}', "{oops"], ":3: not valid JSON"),
        ([HEADER, '{"id": "x", "label": "a"}'], ":2: sample needs"),
        ([HEADER, '{"id": "x", "label": "a", "logits": [[1, "q", 3]]}'], ":2: logits must be numbers"),
        ([HEADER, '{"id": "x", "label": "a", "logits": [[1, 2, 3]]}', '{"id": "x", "label": "a", "logits": [[1, 2, 3]]}'], "duplicate"),
        (['{"version": 1, "vocab": ["a"], "eos": "</s>"}'], ":1:"),
        ([""], ":1: missing header"),
    ],
)
def test_malformed_files_cite_lines(tmp_path, lines, fragment):
    with pytest.raises(DatasetFormatError) as err:
        load_dataset(_write(tmp_path, lines))
    assert fragment in str(err.value)


def test_missing_file(tmp_path):
    with pytest.raises(DatasetFormatError):
        load_dataset(tmp_path / "nope.jsonl")
    with pytest.raises(ValueError):
        read_json(tmp_path / "nope.json")


def test_token_list_labels(tmp_path):
    p = _write(tmp_path, [HEADER, '{"id": "x", "label": ["a", "b"], "logits": [[1, 2, 3]]}'])
    assert load_dataset(p).samples[0].label == ("a", "b")


def test_rounding_is_recursive():
    assert rounded({"a": [0.1 + 0.2, np.float64(1 / 3)], "b": np.int64(3), "c": "x"}) == {
        "a": [0.3, 0.333333333333],
        "b": 3,
        "c": "x",
    }
    assert rounded(float("nan")) is None


def test_csv_cells(tmp_path):
    write_csv(tmp_path / "o.csv", ["a", "b", "c"], [[1, 0.1 + 0.2, True]])
    assert (tmp_path / "o.csv").read_text() == "a,b,c\n1,0.3,1\n"
