"""Timing comparison of the compiled and numpy kernel backends.

Runs the Monte Carlo channel scan and the section softmax at a few
representative problem sizes and reports wall times plus the agreement
between the two implementations.

Usage: python benchmarks/bench_kernels.py [--mc-samples N] [--repeats K]
"""

import argparse
import time

import numpy as np

from ssvamp import _kernels_py


def load_compiled():
    try:
        from ssvamp import _kernels
    except ImportError:
        return None
    return _kernels


def timeit(fn, repeats):
    best = np.inf
    for _ in range(repeats):
        t0 = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t0)
    return best, out


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--mc-samples", type=int, default=100_000)
    ap.add_argument("--repeats", type=int, default=5)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    compiled = load_compiled()
    if compiled is None:
        print("compiled extension not available; timing numpy backend only")

    rng = np.random.default_rng(args.seed)
    print(f"{'kernel':34s} {'numpy':>10s} {'compiled':>10s} {'speedup':>8s}")
    for B in (4, 16, 64):
        n = args.mc_samples - args.mc_samples % 2
        half = rng.normal(size=(n // 2, B))
        Z = np.empty((n, B))
        Z[0::2], Z[1::2] = half, -half
        sigmas = np.geomspace(0.05, 2.0, 64)

        t_py, out_py = timeit(lambda: _kernels_py.channel_scan(Z, sigmas),
                              args.repeats)
        label = f"channel_scan B={B} n={n} grid=64"
        if compiled is None:
            print(f"{label:34s} {t_py:9.4f}s {'-':>10s} {'-':>8s}")
        else:
            t_cy, out_cy = timeit(lambda: compiled.channel_scan(Z, sigmas),
                                  args.repeats)
            diff = max(np.abs(a - b).max() for a, b in zip(out_py, out_cy))
            print(f"{label:34s} {t_py:9.4f}s {t_cy:9.4f}s "
                  f"{t_py / t_cy:7.2f}x  (max diff {diff:.1e})")

    for L, B in ((2 ** 12, 4), (2 ** 14, 4), (2 ** 12, 64)):
        r = rng.normal(size=L * B)
        t_py, out_py = timeit(lambda: _kernels_py.section_softmax(r, 0.3, B),
                              args.repeats)
        label = f"section_softmax L={L} B={B}"
        if compiled is None:
            print(f"{label:34s} {t_py:9.4f}s {'-':>10s} {'-':>8s}")
        else:
            t_cy, out_cy = timeit(lambda: compiled.section_softmax(r, 0.3, B),
                                  args.repeats)
            diff = max(np.abs(out_py[0] - out_cy[0]).max(),
                       abs(out_py[1] - out_cy[1]))
            print(f"{label:34s} {t_py:9.4f}s {t_cy:9.4f}s "
                  f"{t_py / t_cy:7.2f}x  (max diff {diff:.1e})")


if __name__ == "__main__":
    main()
