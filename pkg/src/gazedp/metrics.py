"""Utility metrics (MSE, Pearson CC) and the privacy-utility sweep."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from . import rng
from .core import (AggregateMap, GazeCollection, Heatmap, aggregate,
                   cap_collection, convolve_heatmap)
from .errors import GridMismatchError, ValidationError, ZeroVarianceError
from .mechanisms import (GAUSSIAN, LAPLACIAN, PrivacyLevel, add_calibrated_noise,
                         calibrate_gaussian, calibrate_laplacian)


@dataclass(frozen=True)
class UtilityScore:
    mse: float
    cc: float


@dataclass(frozen=True)
class SweepRow:
    """Per-(mechanism, epsilon) summary of `trials` noisy releases."""

    kind: str
    epsilon: float
    sigma: float
    mse_mean: float
    mse_std: float
    cc_mean: float
    cc_std: float
    trials: int


def _pixels(x: AggregateMap | Heatmap) -> np.ndarray:
    if isinstance(x, AggregateMap):
        return x.values
    if isinstance(x, Heatmap):
        return x.intensities
    raise ValidationError(f"expected an aggregate map or heatmap, got {type(x)}")


def _check_same_grid(a, b) -> None:
    if a.grid != b.grid:
        raise GridMismatchError(f"grids differ: {a.grid} vs {b.grid}")


def mse(a: AggregateMap | Heatmap, b: AggregateMap | Heatmap) -> float:
    """Mean squared per-pixel difference."""
    _check_same_grid(a, b)
    diff = _pixels(a) - _pixels(b)
    return float(np.mean(diff * diff))


def cc(a: AggregateMap | Heatmap, b: AggregateMap | Heatmap) -> float:
    """Pearson correlation over pixels; both inputs need nonzero variance."""
    _check_same_grid(a, b)
    x = _pixels(a).ravel()
    y = _pixels(b).ravel()
    xc = x - x.mean()
    yc = y - y.mean()
    sx = float(xc @ xc)
    sy = float(yc @ yc)
    if sx == 0.0 or sy == 0.0:
        raise ZeroVarianceError(
            "correlation is undefined for a constant map")
    return float((xc @ yc) / math.sqrt(sx * sy))


def score(noisy: AggregateMap | Heatmap,
          reference: AggregateMap | Heatmap) -> UtilityScore:
    return UtilityScore(mse=mse(noisy, reference), cc=cc(noisy, reference))


def tradeoff_sweep(c: GazeCollection, epsilons: Sequence[float], m: int,
                   trials: int, seed: rng.Seed | int,
                   kinds: Iterable[str] = (GAUSSIAN, LAPLACIAN),
                   replicate: int = 1,
                   score_heatmaps: bool = False,
                   psf_sigma: float | None = None) -> list[SweepRow]:
    """Measure utility of noisy releases across privacy levels.

    For each (kind, epsilon), calibrates the noise for n = replicate *
    len(c) observers with delta = n^(-3/2) (Gaussian) or delta = 0
    (Laplacian), generates `trials` independent noisy releases, and
    scores each against the noise-free aggregate.  Rows come back
    sorted by (kind, epsilon).

    replicate > 1 treats the collection as `replicate` copies of every
    map: the aggregate is unchanged, only the calibration's n grows.
    epsilon = inf is accepted as a no-noise control row.  Scoring is on
    aggregate maps unless score_heatmaps is set, in which case both
    sides are rendered with psf_sigma first.
    """
    if trials < 2:
        raise ValidationError(f"need at least 2 trials, got {trials}")
    if replicate < 1:
        raise ValidationError(f"replicate must be >= 1, got {replicate}")
    if score_heatmaps and psf_sigma is None:
        raise ValidationError("score_heatmaps requires psf_sigma")
    kinds = tuple(kinds)
    for kind in kinds:
        if kind not in (GAUSSIAN, LAPLACIAN):
            raise ValidationError(f"unknown mechanism kind {kind!r}")

    capped = cap_collection(c, m)
    reference = aggregate(capped)
    n_eff = replicate * c.n
    ref_scored = (convolve_heatmap(reference, psf_sigma)
                  if score_heatmaps else reference)

    rows = []
    for kind_index, kind in enumerate(sorted(kinds)):
        for eps_index, epsilon in enumerate(epsilons):
            if kind == GAUSSIAN:
                cal = calibrate_gaussian(
                    PrivacyLevel(epsilon, float(n_eff) ** -1.5),
                    n_eff, c.grid.r, m)
            else:
                cal = calibrate_laplacian(epsilon, n_eff, c.grid.r, m)
            mses = np.empty(trials)
            ccs = np.empty(trials)
            for t in range(trials):
                trial_seed = rng.derive_seed(
                    seed, rng.STREAM_SWEEP, kind_index, eps_index, t)
                noisy = add_calibrated_noise(reference, cal, trial_seed)
                scored = (convolve_heatmap(noisy, psf_sigma)
                          if score_heatmaps else noisy)
                mses[t] = mse(scored, ref_scored)
                ccs[t] = cc(scored, ref_scored)
            rows.append(SweepRow(
                kind=kind,
                epsilon=float(epsilon),
                sigma=cal.sigma,
                mse_mean=float(mses.mean()),
                mse_std=float(mses.std(ddof=1)),
                cc_mean=float(ccs.mean()),
                cc_std=float(ccs.std(ddof=1)),
                trials=trials,
            ))
    rows.sort(key=lambda row: (row.kind, row.epsilon))
    return rows


SWEEP_CSV_HEADER = "kind,epsilon,sigma,mse_mean,mse_std,cc_mean,cc_std,trials"


def sweep_to_csv(rows: Sequence[SweepRow]) -> str:
    """Serialize sweep rows; floats use repr so round-trips are exact."""
    lines = [SWEEP_CSV_HEADER]
    for row in rows:
        lines.append(",".join([
            row.kind, repr(row.epsilon), repr(row.sigma),
            repr(row.mse_mean), repr(row.mse_std),
            repr(row.cc_mean), repr(row.cc_std), str(row.trials),
        ]))
    return "\n".join(lines) + "\n"
