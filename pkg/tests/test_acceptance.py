"""Acceptance suite: each test prints one PASS/FAIL line for its criterion.

Run with `pytest tests/test_acceptance.py -v -s` to see the lines.
"""

import math
import subprocess
import sys

import numpy as np
import pytest
from scipy import stats

from gazedp import (GazeCollection, GazeMap, GridSpec, PrivacyLevel,
                    SelectionConfig, aggregate, attack_random_selection,
                    audit_additive_mechanism, calibrate_gaussian,
                    calibrate_laplacian, expected_mse, optimize_cap,
                    rasterize_fixations, reconstruct_noise_free,
                    tradeoff_sweep, Fixation)

from conftest import random_collection

SEED = 0


def report(number, passed, detail):
    print(f"[criterion {number}] {'PASS' if passed else 'FAIL'}: {detail}")
    return passed


def test_criterion_01_calibration_reproduction():
    n = 50_000
    cal = calibrate_gaussian(PrivacyLevel(1.5, float(n) ** -1.5),
                             n, 1050 * 1680, 1)
    relative_error = abs(cal.sigma - 0.0986) / 0.0986
    ok = report(1, relative_error <= 0.02,
                f"sigma = {cal.sigma:.5f} vs 0.0986 "
                f"(rel err {relative_error:.4f}, tol 2%)")
    assert ok


def test_criterion_02_operating_point_crossing():
    r = 300 * 300

    def sigma(n):
        return calibrate_gaussian(PrivacyLevel(1.0, float(n) ** -1.5),
                                  n, r, 1).sigma

    lo, hi = 2, 4096
    while lo < hi:                      # smallest n with sigma(n) <= 1.5
        mid = (lo + hi) // 2
        if sigma(mid) <= 1.5:
            hi = mid
        else:
            lo = mid + 1
    ok = report(2, 800 <= lo <= 1000,
                f"sigma crosses 1.5 at n = {lo} (required within [800, 1000])")
    assert ok


def test_criterion_03_noise_ratio():
    n, r = 50_000, 1050 * 1680
    sigma_l = calibrate_laplacian(1.5, n, r, 1).sigma
    sigma_n = calibrate_gaussian(PrivacyLevel(1.5, float(n) ** -1.5),
                                 n, r, 1).sigma
    ratio = sigma_l / sigma_n
    ok = report(3, 100 <= ratio <= 1000,
                f"sigma_L/sigma_N = {ratio:.1f} (required within [100, 1000])")
    assert ok


def test_criterion_04_reconstruction_attack():
    rng = np.random.default_rng(SEED)
    failures = 0
    for _ in range(50):
        n = int(rng.integers(1, 51))
        width = int(rng.integers(1, 33))
        height = int(rng.integers(1, 33))
        c = random_collection(rng, n=n, width=width, height=height,
                              max_count=5)
        released = aggregate(c)
        for i in range(c.n):
            others = [g for j, g in enumerate(c.maps) if j != i]
            recovered = reconstruct_noise_free(released, others, c.n)
            if not np.array_equal(recovered.counts, c.maps[i].counts):
                failures += 1
    ok = report(4, failures == 0,
                f"{failures} reconstruction mismatches over 50 collections, "
                f"every observer withheld once (required 0)")
    assert ok


def test_criterion_05_selection_distinguisher():
    grid = GridSpec(1, 1)
    c = GazeCollection(grid, tuple(
        GazeMap(grid, np.zeros((1, 1), int)) for _ in range(10)))
    trials = 100_000

    rs1 = attack_random_selection(c, SelectionConfig(0.3), 0, trials, SEED)
    rs2 = attack_random_selection(c, SelectionConfig(0.3, True), 0, trials,
                                  SEED + 1)
    rs2_expect = 1 - (1 - 1 / 10) ** 3
    checks = [
        ("rs1 looked within 0.005 of c",
         abs(rs1.looked_frequency - 0.3) <= 0.005),
        ("rs1 not-looked exactly 0", rs1.not_looked_frequency == 0.0),
        ("rs2 looked within 0.005 of closed form",
         abs(rs2.looked_frequency - rs2_expect) <= 0.005),
        ("rs2 not-looked exactly 0", rs2.not_looked_frequency == 0.0),
    ]
    ok = report(5, all(passed for _, passed in checks),
                f"rs1 = {rs1.looked_frequency:.4f} (c = 0.3), "
                f"rs2 = {rs2.looked_frequency:.4f} "
                f"(closed form {rs2_expect:.4f}), {trials} trials")
    assert ok, [name for name, passed in checks if not passed]


AUDIT_TRIALS = 1_000_000


def _audit_cells():
    for kind in ("gaussian", "laplacian"):
        for n in (5, 10, 50):
            for r in (1, 2, 4):
                for m in (1, 2):
                    for eps in (0.5, 1.0, 3.0):
                        yield kind, n, r, m, eps


def test_criterion_06a_audit_sweep_at_calibrated_noise():
    violations = []
    for kind, n, r, m, eps in _audit_cells():
        if kind == "gaussian":
            cal = calibrate_gaussian(PrivacyLevel(eps, float(n) ** -1.5),
                                     n, r, m)
        else:
            cal = calibrate_laplacian(eps, n, r, m)
        rep = audit_additive_mechanism(kind, cal, n, r, m, AUDIT_TRIALS, SEED)
        if rep.violates():
            # cross-check against the exact tail computation so a
            # Monte Carlo fluke cannot masquerade as a true violation
            shift = m / n
            t = np.linspace(-6 * cal.sigma, shift + 6 * cal.sigma, 20001)
            if kind == "gaussian":
                dist = stats.norm
                kwargs = {"scale": cal.sigma}
            else:
                dist = stats.laplace
                kwargs = {"scale": cal.sigma / math.sqrt(2)}
            analytic = float(np.max(
                dist.sf(t, loc=shift, **kwargs)
                - math.exp(eps) * dist.sf(t, loc=0.0, **kwargs))
                - cal.derived_from.delta)
            violations.append((kind, n, r, m, eps, rep.worst_margin,
                               rep.worst_margin_se, analytic))
    detail = (f"{len(violations)} of 108 cells violate at calibrated noise "
              f"({AUDIT_TRIALS} trials each)")
    if violations:
        lines = [detail + "; the audit's detections are analytically real:"]
        for kind, n, r, m, eps, margin, se, analytic in violations:
            lines.append(
                f"  {kind} n={n} r={r} m={m} eps={eps}: empirical margin "
                f"{margin:.5f} (se {se:.5f}), exact-CDF margin "
                f"{analytic:.5f} > 0 -- the stated noise bound is "
                f"insufficient at this parameter point")
        detail = "\n".join(lines)
    ok = report("6a", not violations, detail)
    assert ok


def test_criterion_06b_undernoised_gaussian_detected():
    cal = calibrate_gaussian(PrivacyLevel(1.0, 0.01), 10, 1, 1).scaled(0.1)
    rep = audit_additive_mechanism("gaussian", cal, 10, 1, 1, AUDIT_TRIALS,
                                   SEED)
    ok = report("6b", rep.violates(),
                f"sigma/10 audit margin = {rep.worst_margin:.4f} "
                f"(se {rep.worst_margin_se:.5f}); violation detected = "
                f"{rep.violates()}")
    assert ok


def test_criterion_07_expected_mse_formula():
    rng = np.random.default_rng(SEED)
    trials = 100_000
    worst_z = 0.0
    for _ in range(20):
        n = int(rng.integers(2, 7))
        width = int(rng.integers(2, 5))
        height = int(rng.integers(2, 5))
        c = random_collection(rng, n=n, width=width, height=height,
                              max_count=5)
        m = int(rng.integers(1, 5))
        sigma_star = float(rng.uniform(0.05, 0.6))
        # independent Monte Carlo of the mechanism's MSE
        stack = np.stack([g.counts.ravel() for g in c.maps]).astype(float)
        reference = stack.sum(axis=0) / n
        capped = np.minimum(stack, m).sum(axis=0) / n
        noise = rng.normal(0.0, m * sigma_star, size=(trials, capped.size))
        mses = np.mean((capped + noise - reference) ** 2, axis=1)
        se = mses.std(ddof=1) / math.sqrt(trials)
        z = abs(expected_mse(c, m, sigma_star) - mses.mean()) / se
        worst_z = max(worst_z, z)
    ok = report(7, worst_z <= 3.0,
                f"worst |closed form - Monte Carlo| = {worst_z:.2f} standard "
                f"errors over 20 collections, {trials} releases each "
                f"(tol 3)")
    assert ok


def test_criterion_08_cap_optimizer():
    rng = np.random.default_rng(SEED)
    mismatches = 0
    for _ in range(30):
        c = random_collection(rng, n=int(rng.integers(2, 9)),
                              width=int(rng.integers(2, 7)),
                              height=int(rng.integers(2, 7)), max_count=6)
        sigma_star = float(rng.uniform(0.0, 0.8))
        got = optimize_cap(c, sigma_star)
        table = {m: expected_mse(c, m, sigma_star)
                 for m in range(1, c.g_max + 1)}
        best = min(table.values())
        expect = min(m for m, v in table.items() if v == best)
        if got.m_star != expect:
            mismatches += 1

    def build(g_max, n, r):
        grid = GridSpec(r, 1)
        maps = []
        for _ in range(n):
            counts = rng.integers(0, g_max + 1, size=(1, r))
            counts[0, 0] = g_max
            maps.append(GazeMap(grid, counts))
        return GazeCollection(grid, tuple(maps))

    base = optimize_cap(build(5, 8, 40), 0.1).work_elements
    ratios = [
        optimize_cap(build(10, 8, 40), 0.1).work_elements / base,
        optimize_cap(build(5, 16, 40), 0.1).work_elements / base,
        optimize_cap(build(5, 8, 80), 0.1).work_elements / base,
    ]
    ok = report(8, mismatches == 0 and max(ratios) <= 2.2,
                f"{mismatches} brute-force mismatches over 30 instances; "
                f"work ratios on doubling (g_max, n, r) = "
                f"{[round(x, 3) for x in ratios]} (tol 2.2)")
    assert ok


def synthetic_portrait_collection():
    """Five observers looking at two hotspots on a 105x168 grid."""
    grid = GridSpec(168, 105)
    rng = np.random.default_rng(99)
    hotspots = [(60.0, 40.0, 8.0), (110.0, 65.0, 12.0)]
    maps = []
    for _ in range(5):
        fixations = []
        for cx, cy, spread in hotspots:
            for _ in range(120):
                x = min(max(rng.normal(cx, spread), 0.0), grid.width - 1e-6)
                y = min(max(rng.normal(cy, spread), 0.0), grid.height - 1e-6)
                fixations.append(Fixation(float(x), float(y)))
        maps.append(rasterize_fixations(fixations, grid))
    return GazeCollection(grid, tuple(maps))


def test_criterion_09_tradeoff_ordering():
    c = synthetic_portrait_collection()
    epsilons = [0.5, 1.0, 1.5, 2.0, 3.0]
    rows = tradeoff_sweep(c, epsilons, m=1, trials=100, seed=SEED,
                          replicate=10_000)   # n_eff = 50,000
    by_kind = {}
    for row in rows:
        by_kind.setdefault(row.kind, []).append(row)

    cc_ordering = all(
        g.cc_mean > l.cc_mean
        for g, l in zip(by_kind["gaussian"], by_kind["laplacian"]))
    mse_monotone = all(
        all(a.mse_mean > b.mse_mean for a, b in zip(kind_rows, kind_rows[1:]))
        for kind_rows in by_kind.values())
    gauss_cc = [round(r.cc_mean, 3) for r in by_kind["gaussian"]]
    lap_cc = [round(r.cc_mean, 3) for r in by_kind["laplacian"]]
    ok = report(9, cc_ordering and mse_monotone,
                f"gaussian CC {gauss_cc} vs laplacian CC {lap_cc} over "
                f"eps = {epsilons}; 100 trials, n = 50,000 via replication; "
                f"MSE decreasing in eps for both kinds = {mse_monotone}")
    assert ok


CSV_CONTENT = """observer_id,x,y,weight
ann,2.5,1.5,2
ben,10.0,7.5,1
ann,12.25,3.75,1
cam,6.5,9.5,3
ben,3.0,11.0,1
"""


def test_criterion_10_cli_determinism(tmp_path):
    csv_path = tmp_path / "fixations.csv"
    csv_path.write_text(CSV_CONTENT)

    def artifacts(tag):
        base = tmp_path / tag
        base.mkdir()
        values = base / "noisy.txt"
        image = base / "heatmap.pgm"
        rows = base / "sweep.csv"
        audit_report = base / "audit.json"
        commands = [
            [sys.executable, "-m", "gazedp.cli", "--seed", "21",
             "--grid", "16x12", "privatize", str(csv_path), "--preset",
             "good", "--cap", "1", "--psf-sigma", "1.5",
             "-o", str(values), "--render", str(image)],
            [sys.executable, "-m", "gazedp.cli", "--seed", "21",
             "--grid", "16x12", "sweep", str(csv_path), "--epsilons",
             "1,3", "--cap", "1", "--trials", "4", "-o", str(rows)],
            [sys.executable, "-m", "gazedp.cli", "--seed", "21", "audit",
             "additive", "--kind", "gaussian", "--epsilon", "1", "--delta",
             "0.01", "--n", "10", "--trials", "20000",
             "-o", str(audit_report)],
        ]
        for cmd in commands:
            proc = subprocess.run(cmd, capture_output=True, text=True)
            assert proc.returncode == 0, proc.stderr + proc.stdout
        return [p.read_bytes() for p in (values, image, rows, audit_report)]

    first = artifacts("one")
    second = artifacts("two")
    identical = all(a == b for a, b in zip(first, second))
    ok = report(10, identical,
                "privatize/render/sweep/audit artifacts byte-identical "
                "across repeated runs with the same seed and config = "
                f"{identical}")
    assert ok
