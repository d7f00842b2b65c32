"""Confidence calibration for autoregressive sequence decoders."""

from .batch import WORD, BatchView
from .calibrate import (
    FitReport,
    Objective,
    evaluate_objective,
    fit_scalar,
    fit_sts,
    fit_windowed,
    ngram_records,
    stratify_by_length,
)
from .core import (
    EOS,
    IDENTITY,
    Dataset,
    InvalidInputError,
    PredictionRecord,
    Sample,
    ScalarTemperature,
    StepTemperature,
    Vocabulary,
    predict,
    softmax,
    word_confidence,
)
from .decode import (
    ContractViolationError,
    Hypothesis,
    SearchSpaceError,
    StoredLogitsModel,
    beam_accuracy_experiment,
    beam_search,
    exhaustive_decode,
    greedy_decode,
)
from .editdist import levenshtein
from .io import DatasetFormatError, load_dataset, save_dataset
from .metrics import BinningConfig, brier, ece, ed_ece, nll_char, nll_word, reliability_diagram
from .synth import GeneratorConfig, generate_dataset

__version__ = "0.1.0"

__all__ = [
    "FitReport",
    "Objective",
    "evaluate_objective",
    "fit_scalar",
    "fit_sts",
    "fit_windowed",
    "ngram_records",
    "stratify_by_length",
    "EOS",
    "IDENTITY",
    "Dataset",
    "InvalidInputError",
    "PredictionRecord",
    "Sample",
    "ScalarTemperature",
    "StepTemperature",
    "Vocabulary",
    "predict",
    "softmax",
    "word_confidence",
    "ContractViolationError",
    "Hypothesis",
    "SearchSpaceError",
    "StoredLogitsModel",
    "beam_accuracy_experiment",
    "beam_search",
    "exhaustive_decode",
    "greedy_decode",
    "WORD",
    "BatchView",
    "levenshtein",
    "DatasetFormatError",
    "load_dataset",
    "save_dataset",
    "BinningConfig",
    "brier",
    "ece",
    "ed_ece",
    "nll_char",
    "nll_word",
    "reliability_diagram",
    "GeneratorConfig",
    "generate_dataset",
]
