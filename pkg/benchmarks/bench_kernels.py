#!/usr/bin/env python3
"""Benchmark the compiled kernels against the pure-Python twins.

Run:  python3 benchmarks/bench_kernels.py [--steps 131072] [--repeat 5]

Both backends are imported directly (no environment juggling) and their
outputs are compared bit-for-bit before timing.
"""
import argparse
import time

import numpy as np

from cirsqrt.kernels import _ref

try:
    from cirsqrt.kernels import _fast
except ImportError:
    _fast = None


def time_fn(fn, *args, repeat: int) -> float:
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best


def main() -> None:
    ap = argparse.ArgumentParser()
    ap.add_argument("--steps", type=int, default=2**17)
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()

    n = args.steps
    rng = np.random.default_rng(12345)
    dw = rng.normal(0.0, np.sqrt(1.0 / n), size=n)
    out_a = np.empty(n + 1)
    out_b = np.empty(n + 1)
    y_a, l_a = np.empty(n + 1), np.empty(n + 1)
    y_b, l_b = np.empty(n + 1), np.empty(n + 1)

    rows = []
    for name, args_ in (
        ("euler_full_truncation", (1.0, 0.5, 0.5, 2.0, 1.0 / n, dw)),
        ("skorokhod_rou", (1.0, 0.5, 2.0, 1.0 / n, dw)),
    ):
        ref_fn = getattr(_ref, name)
        if name == "euler_full_truncation":
            t_ref = time_fn(ref_fn, *args_, out_a, repeat=args.repeat)
        else:
            t_ref = time_fn(ref_fn, *args_, y_a, l_a, repeat=args.repeat)
        if _fast is not None:
            fast_fn = getattr(_fast, name)
            if name == "euler_full_truncation":
                t_fast = time_fn(fast_fn, *args_, out_b, repeat=args.repeat)
                assert np.array_equal(out_a, out_b), "backends disagree"
            else:
                t_fast = time_fn(fast_fn, *args_, y_b, l_b, repeat=args.repeat)
                assert np.array_equal(y_a, y_b) and np.array_equal(l_a, l_b)
            rows.append((name, t_ref, t_fast, t_ref / t_fast))
        else:
            rows.append((name, t_ref, float("nan"), float("nan")))

    print(f"steps = {n}, best of {args.repeat}")
    print(f"{'kernel':28s} {'python':>12s} {'cython':>12s} {'speedup':>9s}")
    for name, t_ref, t_fast, speedup in rows:
        print(f"{name:28s} {t_ref * 1e3:10.2f}ms {t_fast * 1e3:10.2f}ms {speedup:8.1f}x")
    if _fast is None:
        print("(compiled backend not built; pip install -e . rebuilds it)")


if __name__ == "__main__":
    main()
