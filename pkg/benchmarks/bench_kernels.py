"""Compare the compiled kernels with the numpy fallback.

    python benchmarks/bench_kernels.py [--repeat 5]

Times each kernel on a synthetic workload sized like a 10k-sample
calibration set, plus one full scalar fit through each backend.
"""

import argparse
import os
import subprocess
import sys
import timeit

import numpy as np

from seqcal import _pykernels

try:
    from seqcal import _ckernels
except ImportError:
    _ckernels = None

FIT_SNIPPET = """
import time
from seqcal.batch import BatchView
from seqcal.calibrate import fit_scalar
from seqcal.kernels import BACKEND
from seqcal.synth import GeneratorConfig, generate_dataset
view = BatchView(generate_dataset(GeneratorConfig(num_samples=5000, num_symbols=10,
                                                  min_length=6, max_length=16, scale=2.0, seed=1))[0])
t0 = time.perf_counter()
fit_scalar(view)
print(BACKEND, time.perf_counter() - t0)
"""


def workloads(rng):
    rows = rng.normal(0, 3, (110_000, 11))
    inv = np.full(len(rows), 0.5)
    tokens = rng.integers(0, 11, len(rows))
    lengths = rng.integers(6, 17, 10_000)
    starts = np.concatenate(([0], np.cumsum(lengths)[:-1]))
    values = rng.normal(-0.1, 0.05, int(lengths.sum()))
    words = [(list(rng.integers(0, 10, 12)), list(rng.integers(0, 10, 12))) for _ in range(2_000)]
    return {
        "step_log_confidence": lambda k: k.step_log_confidence(rows, inv),
        "token_log_prob": lambda k: k.token_log_prob(rows, inv, tokens),
        "segment_sums": lambda k: k.segment_sums(values, starts, lengths),
        "levenshtein x2000": lambda k: [
            k.levenshtein(np.asarray(a, dtype=np.int64), np.asarray(b, dtype=np.int64))
            if k is _ckernels else k.levenshtein(a, b)
            for a, b in words
        ],
    }


def main():
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    if _ckernels is None:
        print("compiled extension not built; nothing to compare")
        return 1
    print(f"{'kernel':<22}{'cython ms':>12}{'python ms':>12}{'speedup':>10}")
    for name, fn in workloads(np.random.default_rng(0)).items():
        c = min(timeit.repeat(lambda: fn(_ckernels), number=1, repeat=args.repeat)) * 1e3
        p = min(timeit.repeat(lambda: fn(_pykernels), number=1, repeat=args.repeat)) * 1e3
        print(f"{name:<22}{c:>12.2f}{p:>12.2f}{p / c:>9.1f}x")
    print("\nfull scalar fit, 5000 samples:")
    for flag in ("0", "1"):
        env = dict(os.environ, SEQCAL_PURE_PYTHON=flag)
        out = subprocess.run([sys.executable, "-c", FIT_SNIPPET], env=env, capture_output=True, text=True, check=True)
        backend, seconds = out.stdout.split()
        print(f"  {backend:<8}{float(seconds):8.2f} s")
    return 0


if __name__ == "__main__":
    sys.exit(main())
