import math

import numpy as np
import pytest

from gazedp import (GazeCollection, GazeMap, GridSpec, PrivacyLevel,
                    ValidationError, calibrate_gaussian, expected_mse,
                    optimize_cap)

from conftest import random_collection


def capped_bias_oracle(c, m):
    """(1/r) * sum_j (capped_aggregate(j) - aggregate(j))^2, via plain numpy."""
    stack = np.stack([g.counts.ravel() for g in c.maps]).astype(float)
    reference = stack.sum(axis=0) / c.n
    capped = np.minimum(stack, m).sum(axis=0) / c.n
    return float(np.mean((capped - reference) ** 2))


class TestExpectedMse:
    def test_zero_when_uncapped_and_noiseless(self, small_collection):
        g_max = small_collection.g_max
        assert expected_mse(small_collection, g_max, 0.0) == 0.0
        assert expected_mse(small_collection, g_max + 3, 0.0) == 0.0

    def test_pure_noise_term_above_gmax(self, small_collection):
        m = small_collection.g_max + 1
        assert expected_mse(small_collection, m, 0.25) == \
            pytest.approx((m * 0.25) ** 2, rel=1e-12)

    def test_matches_monte_carlo(self, rng):
        c = random_collection(rng, n=5, width=4, height=3, max_count=4)
        m, sigma_star = 2, 0.3
        stack = np.stack([g.counts.ravel() for g in c.maps]).astype(float)
        reference = stack.sum(axis=0) / c.n
        capped = np.minimum(stack, m).sum(axis=0) / c.n
        trials = 100_000
        noise = rng.normal(0.0, m * sigma_star, size=(trials, capped.size))
        mses = np.mean((capped + noise - reference) ** 2, axis=1)
        se = mses.std(ddof=1) / math.sqrt(trials)
        assert abs(expected_mse(c, m, sigma_star) - mses.mean()) <= 3 * se

    def test_parameter_validation(self, small_collection):
        with pytest.raises(ValidationError):
            expected_mse(small_collection, 0, 1.0)
        with pytest.raises(ValidationError):
            expected_mse(small_collection, 1, -1.0)

    def test_decomposition(self, rng):
        c = random_collection(rng, n=7, width=5, height=5, max_count=6)
        previous_bias = math.inf
        for m in range(1, c.g_max + 2):
            for sigma_star in (0.0, 0.2, 1.1):
                total = expected_mse(c, m, sigma_star)
                bias = capped_bias_oracle(c, m)
                assert total == pytest.approx(
                    (m * sigma_star) ** 2 + bias, rel=1e-12, abs=1e-15)
            assert bias <= previous_bias + 1e-15
            previous_bias = bias


class TestOptimizeCap:
    def test_pure_bias_minimization_without_noise(self, small_collection):
        result = optimize_cap(small_collection, 0.0)
        assert result.m_star == small_collection.g_max

    def test_matches_bruteforce(self, rng):
        for _ in range(25):
            c = random_collection(rng, n=int(rng.integers(2, 8)),
                                  width=int(rng.integers(2, 6)),
                                  height=int(rng.integers(2, 6)),
                                  max_count=6)
            sigma_star = float(rng.uniform(0.0, 1.0))
            result = optimize_cap(c, sigma_star)
            # independent brute force over the same closed form
            candidates = {m: expected_mse(c, m, sigma_star)
                          for m in range(1, c.g_max + 1)}
            best = min(candidates.values())
            expect = min(m for m, v in candidates.items() if v == best)
            assert result.m_star == expect
            assert result.expected_mse_by_m == candidates

    def test_five_observer_cap_one(self):
        # five observers, every pixel looked at most once, noise factor
        # from the eps = 1.5 calibration at matching (n, r)
        grid = GridSpec(8, 8)
        rng = np.random.default_rng(5)
        maps = tuple(GazeMap(grid, rng.integers(0, 2, size=grid.shape))
                     for _ in range(5))
        c = GazeCollection(grid, maps)
        level = PrivacyLevel(1.5, 5.0 ** -1.5)
        sigma_star = calibrate_gaussian(level, 5, grid.r, 1).sigma
        assert optimize_cap(c, sigma_star).m_star == 1

    def test_degenerate_all_zero(self):
        grid = GridSpec(3, 3)
        c = GazeCollection(grid, (GazeMap(grid, np.zeros(grid.shape, int)),))
        result = optimize_cap(c, 0.5)
        assert result.m_star == 1
        assert result.g_max == 0
        assert dict(result.expected_mse_by_m) == {}

    def test_reproducible_table(self, small_collection):
        a = optimize_cap(small_collection, 0.4)
        b = optimize_cap(small_collection, 0.4)
        assert a.m_star == b.m_star
        assert dict(a.expected_mse_by_m) == dict(b.expected_mse_by_m)

    def test_ties_break_to_smallest(self):
        # all counts equal 2: bias is zero for m >= 2 and the noise term
        # grows, so m=2 wins; with sigma_star=0 everything above 1 ties
        # at zero and the smallest wins
        grid = GridSpec(2, 2)
        c = GazeCollection(grid, (GazeMap(grid, np.full(grid.shape, 2)),))
        assert optimize_cap(c, 0.0).m_star == 2
        table = optimize_cap(c, 0.0).expected_mse_by_m
        assert table[2] == 0.0

    def test_work_scales_linearly(self, rng):
        def build(g_max, n, r):
            grid = GridSpec(r, 1)
            maps = []
            for i in range(n):
                counts = rng.integers(0, g_max + 1, size=(1, r))
                counts[0, 0] = g_max  # pin the loop bound
                maps.append(GazeMap(grid, counts))
            return GazeCollection(grid, tuple(maps))

        base = optimize_cap(build(4, 6, 32), 0.1).work_elements
        assert optimize_cap(build(8, 6, 32), 0.1).work_elements <= 2.2 * base
        assert optimize_cap(build(4, 12, 32), 0.1).work_elements <= 2.2 * base
        assert optimize_cap(build(4, 6, 64), 0.1).work_elements <= 2.2 * base
