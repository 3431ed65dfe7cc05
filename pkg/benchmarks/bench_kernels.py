"""Benchmark the compiled loop kernels against the pure-numpy fallbacks.

Usage:
    python3 benchmarks/bench_kernels.py [--repeats 5]

The compiled path is what ``MEMSTEP_NO_NUMBA`` unset selects at import time;
here both variants are imported explicitly so a single process can time them
side by side.
"""
import argparse
import time

import numpy as np

from memstep._kernels import (
    USE_NUMBA,
    _memory_direct_all_loop,
    _memory_direct_all_np,
    _p_laplacian_apply_loop,
    _p_laplacian_apply_np,
)

try:
    from numba import njit
except ImportError:
    njit = None


def _best_of(fn, args, repeats):
    best = float("inf")
    for _ in range(repeats):
        start = time.perf_counter()
        fn(*args)
        best = min(best, time.perf_counter() - start)
    return best


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--repeats", type=int, default=5)
    args = parser.parse_args()

    rng = np.random.default_rng(0)
    rows = []

    for N, d in [(500, 3), (2000, 3), (2000, 32)]:
        u0 = rng.normal(size=d)
        values = rng.normal(size=(N + 1, d))
        gamma = np.exp(-1e-3 * np.arange(1, N + 1))
        variants = {"numpy": _memory_direct_all_np}
        if njit is not None:
            compiled = njit(cache=True)(_memory_direct_all_loop)
            compiled(u0, values, gamma, 1e-3)  # compile outside the timing
            variants["numba"] = compiled
        times = {name: _best_of(fn, (u0, values, gamma, 1e-3), args.repeats)
                 for name, fn in variants.items()}
        rows.append((f"memory_direct_all N={N} d={d}", times))

    for m in (64, 1024, 16384):
        v = rng.normal(size=m)
        variants = {"numpy": _p_laplacian_apply_np}
        if njit is not None:
            compiled = njit(cache=True)(_p_laplacian_apply_loop)
            compiled(v, 3.0, 1e-3)
            variants["numba"] = compiled
        times = {name: _best_of(fn, (v, 3.0, 1e-3), args.repeats)
                 for name, fn in variants.items()}
        rows.append((f"p_laplacian_apply m={m}", times))

    print(f"active import-time path: {'numba' if USE_NUMBA else 'numpy'}")
    print(f"{'kernel':<34} {'numpy [ms]':>12} {'numba [ms]':>12} {'speedup':>9}")
    for label, times in rows:
        t_np = times["numpy"] * 1e3
        if "numba" in times:
            t_nb = times["numba"] * 1e3
            print(f"{label:<34} {t_np:>12.4f} {t_nb:>12.4f} {t_np / t_nb:>8.1f}x")
        else:
            print(f"{label:<34} {t_np:>12.4f} {'n/a':>12} {'n/a':>9}")


if __name__ == "__main__":
    main()
