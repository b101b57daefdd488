"""Release mechanisms for aggregated gaze maps and their noise calibrations.

Five mechanisms are provided: the noise-free average, random selection
with and without replacement, and the Gaussian and Laplacian additive
mechanisms.  Only the additive mechanisms carry a privacy guarantee;
the calibrations return the minimal noise level for a requested
(epsilon, delta):

    gaussian:   sigma_N = (m / (n*eps)) * sqrt(r * (eps/2 + ln(r/delta)))
    laplacian:  sigma_L = sqrt(2) * m * r / (eps * n),  delta = 0

where n is the observer count, r the pixel count and m the per-pixel
cap applied to every observer's map.  "Noise level" is always the
standard deviation of the per-pixel noise; for the Laplacian this means
scale b = sigma_L / sqrt(2).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from . import rng
from .core import AggregateMap, GazeCollection, aggregate
from .errors import GaussianDeltaError, ValidationError

GAUSSIAN = "gaussian"
LAPLACIAN = "laplacian"

#: Named privacy presets: epsilon by name, delta always n^(-3/2).
PRESET_EPSILON = {"okay": 3.0, "good": 1.0}


@dataclass(frozen=True)
class PrivacyLevel:
    """An (epsilon, delta) differential-privacy target."""

    epsilon: float
    delta: float

    def __post_init__(self):
        if not self.epsilon > 0:
            raise ValidationError(f"epsilon must be > 0, got {self.epsilon}")
        if not (0 <= self.delta < 1):
            raise ValidationError(
                f"delta must lie in [0, 1), got {self.delta}")


def privacy_preset(name: str, n: int) -> PrivacyLevel:
    """Named level with the delta = n^(-3/2) rule.

    okay -> (3, n^(-3/2)); good -> (1, n^(-3/2)).  n = 1 makes delta = 1
    and is rejected.
    """
    if name not in PRESET_EPSILON:
        raise ValidationError(
            f"unknown privacy preset {name!r}; expected one of "
            f"{sorted(PRESET_EPSILON)}")
    if n < 1:
        raise ValidationError(f"observer count must be >= 1, got {n}")
    return PrivacyLevel(PRESET_EPSILON[name], float(n) ** -1.5)


class CalibrationParams(NamedTuple):
    epsilon: float
    delta: float
    n: int
    r: int
    m: int


@dataclass(frozen=True)
class NoiseCalibration:
    """A mechanism kind plus the noise level derived for given parameters."""

    kind: str
    sigma: float
    derived_from: CalibrationParams

    def __post_init__(self):
        if self.kind not in (GAUSSIAN, LAPLACIAN):
            raise ValidationError(f"unknown mechanism kind {self.kind!r}")
        if self.sigma < 0:
            raise ValidationError(f"sigma must be >= 0, got {self.sigma}")

    def scaled(self, factor: float) -> "NoiseCalibration":
        """Same parameters with the noise level multiplied by factor.

        Factors below 1 void the privacy guarantee; this exists for
        auditing deliberately under-noised mechanisms.
        """
        if factor < 0:
            raise ValidationError("scale factor must be >= 0")
        return NoiseCalibration(self.kind, self.sigma * factor,
                                self.derived_from)


def _check_counts(n: int, r: int, m: int) -> None:
    if n < 1:
        raise ValidationError(f"observer count must be >= 1, got {n}")
    if r < 1:
        raise ValidationError(f"pixel count must be >= 1, got {r}")
    if m < 1:
        raise ValidationError(f"cap must be >= 1, got {m}")


def calibrate_gaussian(level: PrivacyLevel, n: int, r: int,
                       m: int) -> NoiseCalibration:
    """Minimal Gaussian noise level for (epsilon, delta)-privacy.

    sigma = (m / (n*eps)) * sqrt(r * (eps/2 + ln(r/delta))).  Requires
    delta > 0; epsilon = inf is accepted as the no-noise limit.
    """
    _check_counts(n, r, m)
    if level.delta == 0:
        raise GaussianDeltaError(
            "delta = 0 is not achievable with Gaussian noise; "
            "use calibrate_laplacian")
    if math.isinf(level.epsilon):
        sigma = 0.0
    else:
        sigma = (m / (n * level.epsilon)) * math.sqrt(
            r * (level.epsilon / 2.0 + math.log(r / level.delta)))
    return NoiseCalibration(
        GAUSSIAN, sigma,
        CalibrationParams(level.epsilon, level.delta, n, r, m))


def calibrate_laplacian(epsilon: float, n: int, r: int,
                        m: int) -> NoiseCalibration:
    """Minimal Laplacian noise level for (epsilon, 0)-privacy.

    sigma = sqrt(2) * m * r / (eps * n).
    """
    if not epsilon > 0:
        raise ValidationError(f"epsilon must be > 0, got {epsilon}")
    _check_counts(n, r, m)
    sigma = 0.0 if math.isinf(epsilon) else math.sqrt(2.0) * m * r / (epsilon * n)
    return NoiseCalibration(
        LAPLACIAN, sigma, CalibrationParams(epsilon, 0.0, n, r, m))


@dataclass(frozen=True)
class SelectionConfig:
    """Random-selection parameters: sample floor(c*n) maps."""

    c: float
    with_replacement: bool = False

    def __post_init__(self):
        if not (0 < self.c <= 1):
            raise ValidationError(
                f"sampling fraction must lie in (0, 1], got {self.c}")

    def selected_count(self, n: int) -> int:
        k = math.floor(self.c * n)
        if k < 1:
            raise ValidationError(
                f"c*n = {self.c * n:.3g} selects no maps; need c*n >= 1")
        return k


def mech_noise_free(c: GazeCollection) -> AggregateMap:
    """Release the aggregated gaze map as-is (no privacy)."""
    return aggregate(c)


def mech_random_select(c: GazeCollection, sel: SelectionConfig,
                       seed: rng.Seed | int) -> AggregateMap:
    """Average floor(c*n) uniformly sampled maps (no meaningful privacy).

    Without replacement the sampled indices are distinct; either way the
    output is normalized by the selected count.
    """
    k = sel.selected_count(c.n)
    gen = rng.substream(seed, rng.STREAM_SELECTION)
    idx = gen.choice(c.n, size=k, replace=sel.with_replacement)
    total = np.zeros(c.grid.shape, dtype=np.int64)
    for i in idx:
        total += c.maps[int(i)].counts
    return AggregateMap(c.grid, total / k, normalization=k)


def add_calibrated_noise(agg: AggregateMap, cal: NoiseCalibration,
                         seed: rng.Seed | int) -> AggregateMap:
    """Add i.i.d. per-pixel noise at the calibrated level to an aggregate.

    This is the shared noising step of the additive mechanisms; outputs
    are intentionally unclamped.
    """
    if cal.kind == GAUSSIAN:
        noise = rng.gaussian_field(seed, (rng.STREAM_GAUSSIAN,), cal.sigma,
                                   agg.grid.shape)
    else:
        noise = rng.laplace_field(seed, (rng.STREAM_LAPLACIAN,), cal.sigma,
                                  agg.grid.shape)
    return AggregateMap(agg.grid, agg.values + noise, agg.normalization)


def mech_gaussian(c: GazeCollection, cal: NoiseCalibration,
                  seed: rng.Seed | int) -> AggregateMap:
    """Aggregate plus i.i.d. Gaussian noise with std cal.sigma per pixel."""
    if cal.kind != GAUSSIAN:
        raise ValidationError(
            f"mech_gaussian needs a gaussian calibration, got {cal.kind}")
    return add_calibrated_noise(aggregate(c), cal, seed)


def mech_laplacian(c: GazeCollection, cal: NoiseCalibration,
                   seed: rng.Seed | int) -> AggregateMap:
    """Aggregate plus i.i.d. Laplace noise with std cal.sigma per pixel."""
    if cal.kind != LAPLACIAN:
        raise ValidationError(
            f"mech_laplacian needs a laplacian calibration, got {cal.kind}")
    return add_calibrated_noise(aggregate(c), cal, seed)
