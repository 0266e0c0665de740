"""Benchmark the numba kernels against their pure-numpy fallbacks.

Usage: python benchmarks/bench_kernels.py [--repeats N]
Requires numba (run without MAPSTORY_DISABLE_NUMBA so both paths exist).
"""
from __future__ import annotations

import argparse
import time

import numpy as np

from mapstory import kernels


def best_of(fn, args, repeats: int) -> float:
    fn(*args)  # warm up / JIT compile outside the timed region
    timings = []
    for _ in range(repeats):
        start = time.perf_counter()
        fn(*args)
        timings.append(time.perf_counter() - start)
    return min(timings)


def fmt(seconds: float) -> str:
    if seconds < 1e-3:
        return f"{seconds * 1e6:8.1f} µs"
    return f"{seconds * 1e3:8.2f} ms"


def main() -> None:
    parser = argparse.ArgumentParser()
    parser.add_argument("--repeats", type=int, default=7)
    args = parser.parse_args()

    if kernels.backend() != "numba":
        raise SystemExit("numba path unavailable; unset MAPSTORY_DISABLE_NUMBA")

    rng = np.random.default_rng(0)
    cases = []

    for side in (128, 768):
        img = rng.integers(0, 256, size=(side, side, 3), dtype=np.uint8)
        cases.append(
            (f"image features {side}x{side}",
             kernels._image_raw_features_loops, kernels._image_raw_features_numpy,
             (img, 8, 6))
        )

    for length in (64, 4096):
        data = rng.integers(0, 256, size=length, dtype=np.uint8)
        cases.append(
            (f"ngram counts len={length}",
             kernels._ngram_counts_loops, kernels._ngram_counts_numpy,
             (data, 1, 3, 256))
        )

    for n, m, d in ((1, 27, 64), (512, 27, 64), (2048, 64, 64)):
        a = rng.standard_normal((n, d))
        b = rng.standard_normal((m, d))
        cases.append(
            (f"cosine matrix {n}x{m} d={d}",
             kernels._cosine_matrix_loops, kernels._cosine_matrix_numpy,
             (a, b))
        )

    print(f"{'kernel':<28} {'numba':>12} {'numpy':>12} {'speedup':>9}")
    print("-" * 64)
    for name, jit_fn, np_fn, call_args in cases:
        t_jit = best_of(jit_fn, call_args, args.repeats)
        t_np = best_of(np_fn, call_args, args.repeats)
        print(f"{name:<28} {fmt(t_jit)} {fmt(t_np)} {t_np / t_jit:8.2f}x")


if __name__ == "__main__":
    main()
