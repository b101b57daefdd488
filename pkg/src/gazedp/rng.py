"""Seeded, counter-based random streams.

All randomness in the package flows through Philox (a counter-based
generator) keyed by a 64-bit seed plus an integer stream path.  Noise
fields are drawn in a single vectorized call in row-major pixel order,
so the value at pixel index p is a fixed function of (seed, path, p):
results do not depend on how callers later traverse or parallelize the
pixels, and identical seeds reproduce identical bits.

Distinct purposes (gaussian noise, laplacian noise, selection, audit
trials, sweep trials) use distinct leading path elements so streams
never collide.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ValidationError

_MASK64 = (1 << 64) - 1

# Leading stream-path elements, one per purpose.
STREAM_GAUSSIAN = 1
STREAM_LAPLACIAN = 2
STREAM_SELECTION = 3
STREAM_AUDIT = 4
STREAM_SWEEP = 5


@dataclass(frozen=True)
class Seed:
    """A 64-bit seed value; wider ints are masked down."""

    value: int

    def __post_init__(self):
        if not isinstance(self.value, (int, np.integer)):
            raise ValidationError("seed must be an integer")
        object.__setattr__(self, "value", int(self.value) & _MASK64)


def as_seed(seed: Seed | int) -> Seed:
    return seed if isinstance(seed, Seed) else Seed(seed)


def substream(seed: Seed | int, *path: int) -> np.random.Generator:
    """Independent generator for (seed, path)."""
    ss = np.random.SeedSequence(entropy=as_seed(seed).value,
                                spawn_key=tuple(int(p) for p in path))
    return np.random.Generator(np.random.Philox(ss))


def derive_seed(seed: Seed | int, *path: int) -> Seed:
    """A child seed usable wherever an independent 64-bit seed is needed."""
    ss = np.random.SeedSequence(entropy=as_seed(seed).value,
                                spawn_key=tuple(int(p) for p in path))
    return Seed(int(ss.generate_state(1, np.uint64)[0]))


def gaussian_field(seed: Seed | int, path: tuple[int, ...], sigma: float,
                   shape: tuple[int, ...]) -> np.ndarray:
    """I.i.d. zero-mean Gaussian noise with standard deviation sigma."""
    if sigma < 0 or not math.isfinite(sigma):
        raise ValidationError(f"noise level must be finite and >= 0, got {sigma}")
    return sigma * substream(seed, *path).standard_normal(shape)


def laplace_field(seed: Seed | int, path: tuple[int, ...], sigma: float,
                  shape: tuple[int, ...]) -> np.ndarray:
    """I.i.d. zero-mean Laplace noise with standard deviation sigma.

    The Laplace scale is sigma / sqrt(2), so the drawn values have
    standard deviation exactly sigma.
    """
    if sigma < 0 or not math.isfinite(sigma):
        raise ValidationError(f"noise level must be finite and >= 0, got {sigma}")
    scale = sigma / math.sqrt(2.0)
    return scale * substream(seed, *path).laplace(0.0, 1.0, shape)
