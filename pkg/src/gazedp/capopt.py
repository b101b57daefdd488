"""Cap selection: minimize the expected MSE of the Gaussian release.

Capping at m biases the aggregate (counts above m are lost) but lets
the mechanism run at noise level sigma_N = m * sigma_star, so smaller
caps mean less noise.  The expected MSE against the uncapped noise-free
aggregate decomposes exactly into the two effects:

    E[MSE] = m^2 * sigma_star^2
             + (1/r) * sum_j (capped_aggregate(j) - aggregate(j))^2

The optimizer evaluates this for every m from 1 to g_max (the largest
per-pixel count of any observer) and returns the minimizer, breaking
ties toward the smallest m.  Total work is Theta(g_max * n * r).

sigma_star is the caller's noise factor; deriving it from the m = 1
Gaussian calibration (sigma is linear in m) is the intended use.
"""

from __future__ import annotations

from dataclasses import dataclass
from types import MappingProxyType
from typing import Mapping

import numpy as np

from . import kernels
from .core import GazeCollection
from .errors import ValidationError


@dataclass(frozen=True)
class CapSearchResult:
    """Outcome of the cap search, including the full expected-MSE table.

    work_elements counts individual per-pixel cap-and-sum operations
    actually performed, for complexity checks.
    """

    m_star: int
    expected_mse_by_m: Mapping[int, float]
    g_max: int
    sigma_star: float
    work_elements: int

    def __post_init__(self):
        object.__setattr__(self, "expected_mse_by_m",
                           MappingProxyType(dict(self.expected_mse_by_m)))


def _validate_sigma_star(sigma_star: float) -> None:
    if sigma_star < 0 or not np.isfinite(sigma_star):
        raise ValidationError(
            f"sigma_star must be finite and >= 0, got {sigma_star}")


def expected_mse(c: GazeCollection, m: int, sigma_star: float) -> float:
    """Closed-form expected MSE of the Gaussian release at cap m.

    The collection must hold the uncapped original maps; the reference
    is their aggregate.
    """
    if m < 1:
        raise ValidationError(f"cap must be >= 1, got {m}")
    _validate_sigma_star(sigma_star)
    stack = c.counts_stack()
    reference = stack.sum(axis=0) / c.n
    capped = kernels.capped_column_sums(stack, m) / c.n
    bias = float(np.mean((capped - reference) ** 2))
    return (m * sigma_star) ** 2 + bias


def optimize_cap(c: GazeCollection, sigma_star: float) -> CapSearchResult:
    """Evaluate expected_mse for m = 1..g_max and return the minimizer.

    Ties break toward the smallest m.  An all-zero collection is
    degenerate: any cap is vacuous, so m_star = 1 with an empty table.
    """
    _validate_sigma_star(sigma_star)
    stack = c.counts_stack()
    g_max = int(stack.max())
    if g_max == 0:
        return CapSearchResult(1, {}, 0, sigma_star, 0)

    reference = stack.sum(axis=0) / c.n
    table: dict[int, float] = {}
    work = 0
    best_m = 1
    best = np.inf
    for m in range(1, g_max + 1):
        capped = kernels.capped_column_sums(stack, m) / c.n
        work += stack.size
        mse = (m * sigma_star) ** 2 + float(np.mean((capped - reference) ** 2))
        table[m] = mse
        if mse < best:
            best = mse
            best_m = m
    return CapSearchResult(best_m, table, g_max, sigma_star, work)
