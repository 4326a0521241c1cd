"""Compare the compiled kernels against the NumPy fallback.

Usage: python3 benchmarks/bench_kernels.py [--repeat N]
"""

import argparse
import os
import subprocess
import sys
import timeit

import numpy as np

from edgedelta import _kernels_py

try:
    from edgedelta import _ckernels
except ImportError:
    _ckernels = None


def cases(rng):
    proj = rng.standard_normal((64, 128))
    xs = rng.standard_normal((2000, 128))
    vecs = rng.standard_normal((10_000, 128))
    rows = rng.choice(10_000, size=200, replace=False).astype(np.intp)
    n = 10_001
    ins = rng.uniform(0, 60, n)
    hits = rng.integers(0, 5, n).astype(np.int64)
    ids = np.arange(n, dtype=np.int64)
    alive = np.ones(n, dtype=np.uint8)
    return {
        "simhash64 x1": lambda k: k.simhash64(proj, xs[0]),
        "simhash64_batch x2000": lambda k: k.simhash64_batch(proj, xs),
        "best_match 200 rows": lambda k: k.best_match(vecs, rows, xs[0]),
        "evict_argmax 10k slots": lambda k: k.evict_argmax(ins, hits, ids, alive, 61.0, 0.3, 0.7),
    }


def end_to_end(pure: bool) -> float:
    env = dict(os.environ, EDGEDELTA_PURE_PYTHON="1" if pure else "0")
    code = ("import time; from edgedelta.domain import SimConfig; from edgedelta.engine import run; "
            "t=time.perf_counter(); [run(SimConfig(seed=s)) for s in range(5)]; print(time.perf_counter()-t)")
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True)
    return float(out.stdout) / 5


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--repeat", type=int, default=200)
    args = ap.parse_args()
    if _ckernels is None:
        print("compiled core not built; nothing to compare")
        return 1
    print(f"{'kernel':28s} {'python us':>11s} {'cython us':>11s} {'speedup':>8s}")
    for name, fn in cases(np.random.default_rng(0)).items():
        tp = min(timeit.repeat(lambda: fn(_kernels_py), number=1, repeat=args.repeat)) * 1e6
        tc = min(timeit.repeat(lambda: fn(_ckernels), number=1, repeat=args.repeat)) * 1e6
        print(f"{name:28s} {tp:11.1f} {tc:11.1f} {tp / tc:7.1f}x")
    tp, tc = end_to_end(True), end_to_end(False)
    print(f"{'full run (150 agents, 60 s)':28s} {tp * 1e6:11.0f} {tc * 1e6:11.0f} {tp / tc:7.1f}x")
    return 0


if __name__ == "__main__":
    sys.exit(main())
