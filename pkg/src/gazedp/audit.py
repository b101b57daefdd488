"""Privacy audits: reconstruction, selection distinguishers, DP checking.

Three executable negative/positive results:

* The noise-free release leaks everything: with the aggregate and the
  other n-1 maps, the withheld map is n*G - sum(others), recovered
  exactly.

* Random selection leaks: on the worst-case input (single pixel, every
  non-target map zero) the event {output >= 1/k} fires with probability
  k/n without replacement and 1 - (1 - 1/n)^k with replacement when the
  target looked, and never fires otherwise, so an adversary's advantage
  stays bounded away from zero no matter how large epsilon is.

* The additive mechanisms can be checked empirically: Monte Carlo
  estimates of Pr[output_1 >= t] under the extremal neighboring pair
  (all-m target map vs all-zero, zero background) are compared against
  the (epsilon, delta) inequality over a grid of threshold events in
  both tail directions and both dataset orderings.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import rng
from .core import AggregateMap, GazeCollection, GazeMap
from .errors import (GridMismatchError, InsufficientTrialsError,
                     ValidationError)
from .mechanisms import (GAUSSIAN, LAPLACIAN, NoiseCalibration,
                         SelectionConfig)

_THRESHOLD_COUNT = 200
_THRESHOLD_SPAN_SIGMAS = 6.0


@dataclass(frozen=True)
class AttackReport:
    """Outcome of an attack run against one mechanism."""

    mechanism: str
    trials: int
    advantage: float | None = None
    exact_recovery: bool | None = None
    looked_frequency: float | None = None
    not_looked_frequency: float | None = None
    notes: str = ""


@dataclass(frozen=True)
class DpAuditReport:
    """Empirical check of the (epsilon, delta) inequality.

    worst_margin is max over tested events S and both orderings of
    Pr^[M(D) in S] - e^eps * Pr^[M(D') in S] - delta; it is a Monte
    Carlo estimate with standard error worst_margin_se.
    """

    epsilon: float
    delta: float
    worst_margin: float
    worst_margin_se: float
    trials: int
    event_family: str
    notes: str = ""

    def violates(self, z: float = 3.0) -> bool:
        """True when the worst margin exceeds z standard errors above 0."""
        return self.worst_margin > z * self.worst_margin_se


def reconstruct_noise_free(released: AggregateMap,
                           others: GazeCollection | Sequence[GazeMap],
                           n: int) -> GazeMap:
    """Recover the withheld observer's map from a noise-free release.

    others holds the n-1 known maps (any order); it may be empty when
    n = 1.  The result is rounded to the nearest integer to absorb
    floating-point error in the released average.
    """
    maps = tuple(others.maps) if isinstance(others, GazeCollection) else tuple(others)
    if n < 1:
        raise ValidationError(f"observer count must be >= 1, got {n}")
    if len(maps) != n - 1:
        raise ValidationError(
            f"expected {n - 1} known maps for n = {n}, got {len(maps)}")
    if released.normalization != n:
        raise ValidationError(
            f"released map is normalized by {released.normalization}, "
            f"but n = {n}")
    for i, g in enumerate(maps):
        if g.grid != released.grid:
            raise GridMismatchError(
                f"known map {i} has grid {g.grid}, expected {released.grid}")
    recovered = n * released.values
    for g in maps:
        recovered = recovered - g.counts
    return GazeMap(released.grid, np.rint(recovered).astype(np.int64))


def attack_random_selection(c: GazeCollection, sel: SelectionConfig,
                            target_index: int, trials: int,
                            seed: rng.Seed | int) -> AttackReport:
    """Distinguish whether one observer looked, under random selection.

    Synthesizes the worst case internally from sel and n = len(c):
    a single pixel, all non-target maps zero, and the two hypotheses
    target-looked (count 1) vs target-did-not (count 0).  The mechanism
    runs `trials` times under each hypothesis and the report carries
    the frequencies of the event {output >= 1/k} plus the adversary's
    advantage (their absolute difference).
    """
    if trials < 1:
        raise ValidationError(f"trials must be >= 1, got {trials}")
    n = c.n
    if not (0 <= target_index < n):
        raise ValidationError(
            f"target index {target_index} out of range for n = {n}")
    k = sel.selected_count(n)

    gen = rng.substream(seed, rng.STREAM_AUDIT, 0)
    threshold = 1.0 / k

    def run_branch(target_count: int) -> float:
        if sel.with_replacement:
            picks = gen.integers(0, n, size=(trials, k))
            times_selected = (picks == target_index).sum(axis=1)
        else:
            # k smallest of n uniform keys is a uniform k-subset.
            keys = gen.random((trials, n))
            target_rank = (keys < keys[:, [target_index]]).sum(axis=1)
            times_selected = (target_rank < k).astype(np.int64)
        outputs = target_count * times_selected / k
        return float(np.mean(outputs >= threshold))

    freq_looked = run_branch(1)
    freq_not = run_branch(0)
    name = "rs2" if sel.with_replacement else "rs1"
    return AttackReport(
        mechanism=name,
        trials=trials,
        advantage=abs(freq_looked - freq_not),
        looked_frequency=freq_looked,
        not_looked_frequency=freq_not,
        notes=f"event: output >= 1/{k} on the single pixel",
    )


def _tail_probabilities(sorted_samples: np.ndarray,
                        thresholds: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """(Pr^[x >= t], Pr^[x <= t]) for every threshold, from one sample."""
    t = sorted_samples.size
    below = np.searchsorted(sorted_samples, thresholds, side="left")
    at_or_below = np.searchsorted(sorted_samples, thresholds, side="right")
    return (t - below) / t, at_or_below / t


def audit_additive_mechanism(kind: str, cal: NoiseCalibration, n: int,
                             r: int, m: int, trials: int,
                             seed: rng.Seed | int) -> DpAuditReport:
    """Monte Carlo check of the (epsilon, delta) inequality.

    Samples the mechanism's output on the extremal neighboring pair
    (target map all-m vs all-zero, all other maps zero) and evaluates
    threshold events {output_1 >= t} and {output_1 <= t} over a grid of
    200 thresholds spanning both hypothesis means +/- 6 sigma, in both
    dataset orderings.  The target (epsilon, delta) comes from the
    calibration's derived_from parameters.

    Requires trials >= 100/delta when delta > 0 so the additive slack
    is resolvable; pure (delta = 0) targets skip that check.
    """
    if kind not in (GAUSSIAN, LAPLACIAN):
        raise ValidationError(f"unknown mechanism kind {kind!r}")
    if kind != cal.kind:
        raise ValidationError(
            f"calibration is for {cal.kind}, audit requested {kind}")
    if trials < 1:
        raise ValidationError(f"trials must be >= 1, got {trials}")
    if n < 1 or r < 1 or m < 1:
        raise ValidationError(f"need n, r, m >= 1, got ({n}, {r}, {m})")
    if cal.sigma <= 0:
        raise ValidationError("audit needs a positive noise level")
    epsilon = cal.derived_from.epsilon
    delta = cal.derived_from.delta
    if delta > 0 and trials < 100.0 / delta:
        raise InsufficientTrialsError(
            f"{trials} trials cannot resolve delta = {delta:g}; "
            f"need at least {int(np.ceil(100.0 / delta))}")

    # Aggregate means of the two neighboring datasets.
    mean_d = m / n       # target map all-m, background zero
    mean_dprime = 0.0

    field = rng.gaussian_field if kind == GAUSSIAN else rng.laplace_field
    out_d = mean_d + field(seed, (rng.STREAM_AUDIT, 1, 0), cal.sigma,
                           (trials, r))[:, 0]
    out_dp = mean_dprime + field(seed, (rng.STREAM_AUDIT, 1, 1), cal.sigma,
                                 (trials, r))[:, 0]
    out_d.sort()
    out_dp.sort()

    lo = min(mean_d, mean_dprime) - _THRESHOLD_SPAN_SIGMAS * cal.sigma
    hi = max(mean_d, mean_dprime) + _THRESHOLD_SPAN_SIGMAS * cal.sigma
    thresholds = np.linspace(lo, hi, _THRESHOLD_COUNT)

    ge_d, le_d = _tail_probabilities(out_d, thresholds)
    ge_dp, le_dp = _tail_probabilities(out_dp, thresholds)

    amp = np.exp(epsilon)
    worst = -np.inf
    worst_se = 0.0
    for p1, p2 in ((ge_d, ge_dp), (le_d, le_dp),
                   (ge_dp, ge_d), (le_dp, le_d)):
        margins = p1 - amp * p2 - delta
        i = int(np.argmax(margins))
        if margins[i] > worst:
            worst = float(margins[i])
            var = (p1[i] * (1 - p1[i]) + amp * amp * p2[i] * (1 - p2[i]))
            worst_se = float(np.sqrt(var / trials))

    report = DpAuditReport(
        epsilon=epsilon,
        delta=delta,
        worst_margin=worst,
        worst_margin_se=worst_se,
        trials=trials,
        event_family=(f"{_THRESHOLD_COUNT} thresholds on pixel 1, "
                      f"both tails, both orderings, span +/- "
                      f"{_THRESHOLD_SPAN_SIGMAS:g} sigma"),
        notes=(f"{kind} sigma={cal.sigma:.6g}, worst-case pair all-{m} vs "
               f"all-0 over {n} observers, r={r}"),
    )
    return report
