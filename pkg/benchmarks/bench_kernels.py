#!/usr/bin/env python3
"""Compare the compiled kernels against the NumPy fallback.

Times the two hot kernels (PSF convolution and the cap-and-sum pass the
cap optimizer runs per candidate m) on realistic workloads, checks the
backends agree bit-for-bit, and prints a small table.

Run from the repository root:  python benchmarks/bench_kernels.py
"""

import time

import numpy as np

from gazedp import _kernels_py
from gazedp.kernels import BACKEND, psf_weights

try:
    from gazedp import _native
except ImportError:
    _native = None


def best_of(fn, repeats=5):
    times = []
    for _ in range(repeats):
        start = time.perf_counter()
        fn()
        times.append(time.perf_counter() - start)
    return min(times)


def row(label, pure_s, native_s):
    if native_s is None:
        print(f"{label:<44} {pure_s * 1e3:>9.2f} ms {'-':>12}")
    else:
        print(f"{label:<44} {pure_s * 1e3:>9.2f} ms {native_s * 1e3:>9.2f} ms"
              f"  x{pure_s / native_s:.2f}")


def main():
    rng = np.random.default_rng(0)
    print(f"active backend: {BACKEND}")
    if _native is None:
        print("native extension not built; showing NumPy fallback only\n")
    header = f"{'kernel / workload':<44} {'numpy':>12} {'native':>12}"
    print(header)
    print("-" * len(header))

    for h, w, sigma in ((300, 300, 3.0), (525, 840, 8.0), (1050, 1680, 12.0)):
        values = rng.random((h, w))
        weights = psf_weights(sigma)
        contig = np.ascontiguousarray(values)
        pure = best_of(lambda: _kernels_py.conv_separable(values, weights), 3)
        native = None
        if _native is not None:
            native = best_of(lambda: _native.conv_separable(contig, weights), 3)
            assert np.array_equal(_kernels_py.conv_separable(values, weights),
                                  _native.conv_separable(contig, weights))
        row(f"conv_separable {w}x{h}, psf sigma {sigma:g}", pure, native)

    for n, r, m in ((50, 90_000, 3), (500, 17_640, 2), (5000, 1764, 4)):
        stack = np.ascontiguousarray(
            rng.integers(0, 8, size=(n, r)).astype(np.int64))
        pure = best_of(lambda: _kernels_py.capped_column_sums(stack, m))
        native = None
        if _native is not None:
            native = best_of(lambda: _native.capped_column_sums(stack, m))
            assert np.array_equal(_kernels_py.capped_column_sums(stack, m),
                                  _native.capped_column_sums(stack, m))
        row(f"capped_column_sums n={n} r={r} m={m}", pure, native)


if __name__ == "__main__":
    main()
