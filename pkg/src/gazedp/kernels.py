"""Hot-kernel dispatch: compiled extension when available, NumPy otherwise.

The backend is chosen once at import time.  Set GAZEDP_PURE_PYTHON=1 to
force the NumPy fallback even when the extension is built.  Both
backends are bit-compatible; `benchmarks/bench_kernels.py` compares
their speed.
"""

from __future__ import annotations

import math
import os

import numpy as np

from . import _kernels_py
from .errors import ValidationError

if os.environ.get("GAZEDP_PURE_PYTHON") == "1":
    _impl = _kernels_py
    BACKEND = "pure"
else:
    try:
        from . import _native as _impl  # type: ignore[no-redef]
        BACKEND = "native"
    except ImportError:
        _impl = _kernels_py
        BACKEND = "pure"


def psf_weights(sigma: float) -> np.ndarray:
    """1-D Gaussian point-spread weights, truncated at radius ceil(3*sigma).

    The kernel is not renormalized; its center tap is exactly 1.
    """
    if not (sigma > 0) or not math.isfinite(sigma):
        raise ValidationError(f"psf sigma must be finite and > 0, got {sigma}")
    radius = math.ceil(3.0 * sigma)
    offsets = np.arange(-radius, radius + 1, dtype=np.float64)
    return np.exp(-(offsets ** 2) / (2.0 * sigma * sigma))


def convolve_psf(values: np.ndarray, sigma: float) -> np.ndarray:
    """2-D truncated-Gaussian convolution (zero padding), separably applied."""
    weights = psf_weights(sigma)
    values = np.ascontiguousarray(values, dtype=np.float64)
    return _impl.conv_separable(values, weights)


def capped_column_sums(stack: np.ndarray, m: int) -> np.ndarray:
    """Per-pixel sums of min(count, m) across observers.

    stack is (n, r) int64; the result is exact (integer arithmetic).
    """
    if m < 1:
        raise ValidationError(f"cap must be >= 1, got {m}")
    stack = np.ascontiguousarray(stack, dtype=np.int64)
    return _impl.capped_column_sums(stack, int(m))
