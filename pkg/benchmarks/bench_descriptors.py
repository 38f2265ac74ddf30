#!/usr/bin/env python3
"""Benchmark the descriptor kernels: compiled extension vs NumPy fallback.

Times full LDP-TOP / LBP-TOP extraction on random volumes shaped like the
tracked face patches the pipeline produces. Run from the repository root:

    python benchmarks/bench_descriptors.py [--volumes N] [--shape HxWxK]
"""

import argparse
import sys
import time
from pathlib import Path

import numpy as np

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "src"))

from facetex import descriptors as D  # noqa: E402


def time_one(fn, volumes, repeats=3):
    best = []
    for _ in range(repeats):
        start = time.perf_counter()
        for volume in volumes:
            fn(volume)
        best.append((time.perf_counter() - start) / len(volumes))
    return min(best)


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--volumes", type=int, default=20)
    parser.add_argument("--shape", default="64x64x60")
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args(argv)
    shape = tuple(int(p) for p in args.shape.split("x"))
    if len(shape) != 3:
        parser.error("--shape must be HxWxK")

    rng = np.random.default_rng(args.seed)
    volumes = [
        rng.integers(0, 256, size=shape, dtype=np.uint8)
        for _ in range(args.volumes)
    ]
    backends = D.available_backends()
    if "compiled" not in backends:
        print("note: compiled backend not built; run `python setup.py build_ext --inplace`")

    jobs = {
        "ldp-top direct": lambda v, m: D.ldp_top(v, "direct", backend=m),
        "ldp-top bidirectional": lambda v, m: D.ldp_top(v, "bidirectional", backend=m),
        "lbp-top": lambda v, m: D.lbp_top(v, backend=m),
    }
    print(f"volume {args.shape}, {args.volumes} volumes, best of 3")
    header = f"{'descriptor':<24}" + "".join(f"{name:>14}" for name in backends)
    if len(backends) == 2:
        header += f"{'speedup':>10}"
    print(header)
    for label, job in jobs.items():
        times = {}
        for name, module in backends.items():
            times[name] = time_one(lambda v, m=module: job(v, m), volumes)
        row = f"{label:<24}" + "".join(
            f"{times[name] * 1000:>11.2f} ms" for name in backends
        )
        if "compiled" in times and "python" in times:
            row += f"{times['python'] / times['compiled']:>9.1f}x"
        print(row)

    # sanity: identical outputs on the benchmark inputs
    if len(backends) == 2:
        sample = volumes[0]
        a = D.ldp_top(sample, "direct", backend=backends["compiled"]).values
        b = D.ldp_top(sample, "direct", backend=backends["python"]).values
        assert np.array_equal(a, b), "backends disagree"
        print("backends agree bit-exactly on the benchmark inputs")
    return 0


if __name__ == "__main__":
    sys.exit(main())
