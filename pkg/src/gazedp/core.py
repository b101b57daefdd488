"""Grid data model: gaze maps, collections, aggregation, heatmap rendering.

Pixel indexing is row-major with the origin at the top-left; a map with
grid (width, height) is stored as an (height, width) array whose
row-major flattening gives the pixel order used everywhere else.

All types are immutable after construction (arrays are copied and
marked read-only) and all operations are pure functions.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import Iterable, Sequence

import numpy as np

from . import kernels
from .errors import GridMismatchError, ValidationError


@dataclass(frozen=True)
class GridSpec:
    """Pixel grid dimensions; r is the total pixel count."""

    width: int
    height: int

    def __post_init__(self):
        if self.width < 1 or self.height < 1:
            raise ValidationError(
                f"grid must be at least 1x1, got {self.width}x{self.height}")

    @property
    def r(self) -> int:
        return self.width * self.height

    @property
    def shape(self) -> tuple[int, int]:
        """(height, width), the numpy array shape of one map."""
        return (self.height, self.width)


@dataclass(frozen=True)
class Fixation:
    """A single gaze landing point; weight counts repeated looks."""

    x: float
    y: float
    weight: int = 1

    def __post_init__(self):
        if not (np.isfinite(self.x) and np.isfinite(self.y)):
            raise ValidationError(f"fixation coordinates must be finite, "
                                  f"got ({self.x}, {self.y})")
        if int(self.weight) != self.weight or self.weight < 1:
            raise ValidationError(f"fixation weight must be a positive "
                                  f"integer, got {self.weight}")


def _freeze(arr: np.ndarray) -> np.ndarray:
    out = np.array(arr, copy=True)
    out.setflags(write=False)
    return out


@dataclass(frozen=True)
class GazeMap:
    """One observer's per-pixel look counts."""

    grid: GridSpec
    counts: np.ndarray

    def __post_init__(self):
        counts = np.asarray(self.counts)
        if not np.issubdtype(counts.dtype, np.integer):
            if not np.all(counts == np.floor(counts)):
                raise ValidationError("gaze counts must be integers")
        counts = counts.astype(np.int64)
        if counts.shape != self.grid.shape:
            raise ValidationError(
                f"counts shape {counts.shape} does not match grid "
                f"{self.grid.shape}")
        if np.any(counts < 0):
            raise ValidationError("gaze counts must be nonnegative")
        object.__setattr__(self, "counts", _freeze(counts))

    @property
    def max_count(self) -> int:
        return int(self.counts.max())

    @property
    def total(self) -> int:
        return int(self.counts.sum())


@dataclass(frozen=True)
class GazeCollection:
    """Ordered collection of n gaze maps on a shared grid."""

    grid: GridSpec
    maps: tuple[GazeMap, ...]

    def __post_init__(self):
        maps = tuple(self.maps)
        if len(maps) < 1:
            raise ValidationError("a gaze collection needs at least one map")
        for i, g in enumerate(maps):
            if g.grid != self.grid:
                raise GridMismatchError(
                    f"map {i} has grid {g.grid}, expected {self.grid}")
        object.__setattr__(self, "maps", maps)

    @property
    def n(self) -> int:
        return len(self.maps)

    @cached_property
    def g_max(self) -> int:
        """Largest per-pixel count over all observers."""
        return max(g.max_count for g in self.maps)

    def counts_stack(self) -> np.ndarray:
        """(n, r) int64 matrix of flattened counts (row-major pixels)."""
        return np.stack([g.counts.ravel() for g in self.maps])


def collection_from_counts(grid: GridSpec,
                           counts: Iterable[np.ndarray]) -> GazeCollection:
    return GazeCollection(grid, tuple(GazeMap(grid, c) for c in counts))


@dataclass(frozen=True)
class AggregateMap:
    """Observer-normalized average map; real-valued, possibly noisy."""

    grid: GridSpec
    values: np.ndarray
    normalization: int

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.float64)
        if values.shape != self.grid.shape:
            raise ValidationError(
                f"values shape {values.shape} does not match grid "
                f"{self.grid.shape}")
        if self.normalization < 1:
            raise ValidationError("normalization must be >= 1")
        object.__setattr__(self, "values", _freeze(values))


@dataclass(frozen=True)
class Heatmap:
    """Max-normalized rendering intensities plus the PSF bandwidth used."""

    grid: GridSpec
    intensities: np.ndarray
    psf_sigma: float

    def __post_init__(self):
        intensities = np.asarray(self.intensities, dtype=np.float64)
        if intensities.shape != self.grid.shape:
            raise ValidationError(
                f"intensities shape {intensities.shape} does not match grid "
                f"{self.grid.shape}")
        object.__setattr__(self, "intensities", _freeze(intensities))


def rasterize_fixations(fixations: Sequence[Fixation],
                        grid: GridSpec) -> GazeMap:
    """Bin fixations onto the grid; coordinates bin by floor.

    Rejects the first out-of-bounds fixation by index.  Total weight is
    preserved: sum(counts) == sum(weights).
    """
    counts = np.zeros(grid.shape, dtype=np.int64)
    if fixations:
        xs = np.floor([f.x for f in fixations]).astype(np.int64)
        ys = np.floor([f.y for f in fixations]).astype(np.int64)
        ws = np.asarray([f.weight for f in fixations], dtype=np.int64)
        bad = np.nonzero((xs < 0) | (xs >= grid.width)
                         | (ys < 0) | (ys >= grid.height))[0]
        if bad.size:
            i = int(bad[0])
            raise ValidationError(
                f"fixation {i} at ({fixations[i].x}, {fixations[i].y}) is "
                f"outside the {grid.width}x{grid.height} grid")
        np.add.at(counts, (ys, xs), ws)
    return GazeMap(grid, counts)


def cap_gaze_map(g: GazeMap, m: int) -> GazeMap:
    """Clip every pixel count at m (the per-observer sensitivity cap)."""
    if m < 1:
        raise ValidationError(f"cap must be >= 1, got {m}")
    return GazeMap(g.grid, np.minimum(g.counts, np.int64(m)))


def cap_collection(c: GazeCollection, m: int) -> GazeCollection:
    return GazeCollection(c.grid, tuple(cap_gaze_map(g, m) for g in c.maps))


def aggregate(c: GazeCollection) -> AggregateMap:
    """Average of the member maps: values[p] = (1/n) * sum_i counts_i[p]."""
    total = np.zeros(c.grid.shape, dtype=np.int64)
    for g in c.maps:
        total += g.counts
    return AggregateMap(c.grid, total / c.n, normalization=c.n)


def convolve_heatmap(a: AggregateMap, psf_sigma: float,
                     clamp_negative: bool = False) -> Heatmap:
    """Render an aggregate map as a heatmap.

    Each output pixel accumulates value * exp(-d^2 / (2 sigma^2)) over
    source pixels, with the kernel truncated at radius ceil(3*sigma)
    and zero padding at the borders; the result is divided by its
    global maximum (all-zero maps stay all-zero).

    clamp_negative zeroes negative input values first; this is the
    optional rendering-path clamp for noisy aggregates and is required
    for the intensities to land in [0, 1].
    """
    values = a.values
    if clamp_negative:
        values = np.maximum(values, 0.0)
    conv = kernels.convolve_psf(values, psf_sigma)
    peak = conv.max()
    if peak > 0:
        conv = conv / peak
    else:
        conv = np.zeros_like(conv)
    return Heatmap(a.grid, conv, psf_sigma)


def downsample_gaze_map(g: GazeMap, factor: int) -> GazeMap:
    """Block-sum the counts by an integer factor (counts are preserved).

    Both grid dimensions must be divisible by the factor.
    """
    if factor < 1:
        raise ValidationError(f"downsample factor must be >= 1, got {factor}")
    h, w = g.grid.shape
    if h % factor or w % factor:
        raise ValidationError(
            f"grid {w}x{h} is not divisible by downsample factor {factor}")
    blocks = g.counts.reshape(h // factor, factor, w // factor, factor)
    return GazeMap(GridSpec(w // factor, h // factor), blocks.sum(axis=(1, 3)))


def downsample_collection(c: GazeCollection, factor: int) -> GazeCollection:
    maps = tuple(downsample_gaze_map(g, factor) for g in c.maps)
    return GazeCollection(maps[0].grid, maps)
