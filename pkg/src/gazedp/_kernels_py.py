"""NumPy implementations of the hot kernels.

These are the fallback used when the compiled gazedp._native module is
unavailable.  Per-element accumulation order (ascending tap index) is
kept identical to the native loops so both backends produce bit-equal
results.
"""

import numpy as np


def conv_separable(values: np.ndarray, weights: np.ndarray) -> np.ndarray:
    """Separable truncated-kernel convolution with zero padding.

    values: (h, w) float64; weights: (2*radius+1,) float64.
    """
    tmp = _conv_axis1(values, weights)
    return _conv_axis0(tmp, weights)


def _conv_axis1(src, w):
    h, n = src.shape
    radius = len(w) // 2
    out = np.zeros_like(src)
    for j in range(len(w)):
        off = j - radius
        lo = max(0, -off)
        hi = min(n, n - off)
        if lo < hi:
            out[:, lo:hi] += w[j] * src[:, lo + off:hi + off]
    return out


def _conv_axis0(src, w):
    n, width = src.shape
    radius = len(w) // 2
    out = np.zeros_like(src)
    for j in range(len(w)):
        off = j - radius
        lo = max(0, -off)
        hi = min(n, n - off)
        if lo < hi:
            out[lo:hi, :] += w[j] * src[lo + off:hi + off, :]
    return out


def capped_column_sums(stack: np.ndarray, m: int) -> np.ndarray:
    """Sum of min(count, m) over observers; stack is (n, r) int64."""
    return np.minimum(stack, np.int64(m)).sum(axis=0)
