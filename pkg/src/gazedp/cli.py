"""Command-line surface for the privacy-preserving heatmap pipeline.

Exit codes: 0 success, 2 validation/parse error, 3 when an audit
detects a privacy violation.
"""

from __future__ import annotations

import functools
import json
import math
import os
import sys
from dataclasses import asdict

import click
import numpy as np

from . import audit as audit_mod
from . import capopt, io, metrics
from . import mechanisms as mech
from .core import (GazeCollection, GridSpec, aggregate, cap_collection,
                   convolve_heatmap, downsample_collection,
                   rasterize_fixations)
from .errors import GazeDPError, ValidationError
from .rng import Seed

EXIT_VALIDATION = 2
EXIT_VIOLATION = 3


def _fail(message: str, code: int = EXIT_VALIDATION):
    click.echo(f"error: {message}", err=True)
    sys.exit(code)


def handle_errors(fn):
    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except GazeDPError as exc:
            _fail(str(exc))
        except OSError as exc:
            _fail(str(exc), code=1)
    return wrapper


def _as_int(value, what: str) -> int:
    try:
        return int(value)
    except (TypeError, ValueError) as exc:
        raise ValidationError(f"{what} must be an integer, got {value!r}") \
            from exc


def _parse_grid(text: str) -> GridSpec:
    try:
        w, h = text.lower().split("x")
        return GridSpec(int(w), int(h))
    except (ValueError, TypeError) as exc:
        raise ValidationError(f"bad grid {text!r}; expected WxH") from exc


class Settings:
    """Merged group options + JSON config; flags beat config."""

    def __init__(self, seed, config_path, grid_text):
        self.config = {}
        if config_path:
            with open(config_path, encoding="utf-8") as fh:
                self.config = json.load(fh)
        self._seed_flag = seed
        self._grid_flag = grid_text

    @property
    def seed(self) -> Seed:
        if self._seed_flag is not None:
            return Seed(self._seed_flag)
        return Seed(_as_int(self.config.get("seed", 0), "seed"))

    def grid(self) -> GridSpec:
        if self._grid_flag:
            return _parse_grid(self._grid_flag)
        raw = self.config.get("grid")
        if raw is None:
            raise ValidationError("a grid is required (--grid WxH or config)")
        if isinstance(raw, str):
            return _parse_grid(raw)
        try:
            return GridSpec(_as_int(raw["width"], "grid width"),
                            _as_int(raw["height"], "grid height"))
        except (KeyError, TypeError) as exc:
            raise ValidationError(
                f"bad grid config {raw!r}; expected 'WxH' or "
                f"{{\"width\": W, \"height\": H}}") from exc

    def get(self, key, flag_value, default=None):
        if flag_value is not None:
            return flag_value
        return self.config.get(key, default)

    def output_path(self, key, flag_value):
        if flag_value is not None:
            return flag_value
        return self.config.get("output", {}).get(key)

    def privacy(self, preset, epsilon, delta):
        """Resolve the privacy request; exactly one of preset/explicit."""
        conf = self.config.get("privacy", {})
        preset = preset if preset is not None else conf.get("preset")
        epsilon = epsilon if epsilon is not None else conf.get("epsilon")
        delta = delta if delta is not None else conf.get("delta")
        if preset is not None and epsilon is not None:
            raise ValidationError(
                "give either a privacy preset or an explicit epsilon, not both")
        if preset is None and epsilon is None:
            raise ValidationError(
                "a privacy level is required (--preset or --epsilon)")
        return preset, epsilon, delta


@click.group()
@click.option("--seed", type=int, default=None,
              help="64-bit seed; every run with the same seed and config "
                   "produces byte-identical artifacts.")
@click.option("--config", "config_path",
              type=click.Path(exists=True, dir_okay=False), default=None,
              help="JSON run configuration; flags override its fields.")
@click.option("--grid", "grid_text", default=None, metavar="WxH",
              help="Grid dimensions, e.g. 300x300.")
@click.pass_context
def main(ctx, seed, config_path, grid_text):
    """Differentially private aggregated gaze heatmaps."""
    try:
        ctx.obj = Settings(seed, config_path, grid_text)
    except (OSError, json.JSONDecodeError) as exc:
        _fail(f"cannot read config: {exc}")


def _load_collection(settings, input_csv, downsample=None) -> GazeCollection:
    grid = settings.grid()
    observers = io.load_fixations(input_csv)
    maps = tuple(rasterize_fixations(fx, grid) for fx in observers.values())
    collection = GazeCollection(grid, maps)
    factor = settings.get("downsample", downsample)
    if factor is not None and _as_int(factor, "downsample") > 1:
        collection = downsample_collection(collection, _as_int(factor, "downsample"))
    return collection


def _sanitize(name: str) -> str:
    return "".join(ch if ch.isalnum() or ch in "-_" else "_" for ch in name)


@main.command()
@click.argument("input_csv", type=click.Path(exists=True, dir_okay=False))
@click.argument("out_dir", type=click.Path(file_okay=False))
@click.pass_obj
@handle_errors
def rasterize(settings, input_csv, out_dir):
    """Bin a fixation CSV into one gaze-map file per observer."""
    grid = settings.grid()
    observers = io.load_fixations(input_csv)
    os.makedirs(out_dir, exist_ok=True)
    for index, (observer, fixations) in enumerate(observers.items()):
        g = rasterize_fixations(fixations, grid)
        path = os.path.join(out_dir, f"gaze_{index:03d}_{_sanitize(observer)}.txt")
        io.save_gaze_map(g, path)
        click.echo(f"{observer}: {g.total} looks -> {path}")


@main.command("aggregate")
@click.argument("map_files", nargs=-1, required=True,
                type=click.Path(exists=True, dir_okay=False))
@click.option("-o", "--output", type=click.Path(dir_okay=False), default=None)
@click.option("--cap", "cap_m", type=int, default=None,
              help="Cap each map at m before averaging.")
@click.option("--downsample", type=int, default=None)
@click.pass_obj
@handle_errors
def aggregate_cmd(settings, map_files, output, cap_m, downsample):
    """Average gaze-map files into a value map."""
    maps = [io.load_gaze_map(p) for p in map_files]
    collection = GazeCollection(maps[0].grid, tuple(maps))
    factor = settings.get("downsample", downsample)
    if factor is not None and _as_int(factor, "downsample") > 1:
        collection = downsample_collection(collection, _as_int(factor, "downsample"))
    cap_m = settings.get("cap", cap_m)
    if cap_m is not None and cap_m != "auto":
        collection = cap_collection(collection, _as_int(cap_m, "cap"))
    out = settings.output_path("values", output)
    if out is None:
        raise ValidationError("an output path is required (-o)")
    io.save_value_map(aggregate(collection), out)
    click.echo(f"aggregated {collection.n} maps -> {out}")


def _resolve_level(preset, epsilon, delta, n_eff):
    if preset is not None:
        return mech.privacy_preset(preset, n_eff)
    delta = float(n_eff) ** -1.5 if delta is None else float(delta)
    return mech.PrivacyLevel(float(epsilon), delta)


def _calibrate(kind, level, n, r, m):
    if kind == mech.GAUSSIAN:
        return mech.calibrate_gaussian(level, n, r, m)
    return mech.calibrate_laplacian(level.epsilon, n, r, m)


@main.command()
@click.argument("input_csv", type=click.Path(exists=True, dir_okay=False))
@click.option("-o", "--output", type=click.Path(dir_okay=False), default=None,
              help="Noisy value-map output path.")
@click.option("--mechanism", "kind",
              type=click.Choice([mech.GAUSSIAN, mech.LAPLACIAN]), default=None)
@click.option("--preset", type=click.Choice(sorted(mech.PRESET_EPSILON)),
              default=None)
@click.option("--epsilon", type=float, default=None)
@click.option("--delta", type=float, default=None)
@click.option("--cap", "cap_m", default=None,
              help="Per-observer pixel cap, or 'auto' to optimize it.")
@click.option("--downsample", type=int, default=None)
@click.option("--replicate", type=int, default=None,
              help="Treat the data as this many copies of every observer.")
@click.option("--psf-sigma", type=float, default=None)
@click.option("--render", "render_path", type=click.Path(dir_okay=False),
              default=None, help="Also render the noisy heatmap here.")
@click.pass_obj
@handle_errors
def privatize(settings, input_csv, output, kind, preset, epsilon, delta,
              cap_m, downsample, replicate, psf_sigma, render_path):
    """Full pipeline: rasterize, cap, aggregate, add calibrated noise."""
    collection = _load_collection(settings, input_csv, downsample)
    kind = settings.get("mechanism", kind, mech.GAUSSIAN)
    replicate = _as_int(settings.get("replicate", replicate, 1) or 1, "replicate")
    n_eff = collection.n * replicate
    r = collection.grid.r
    preset, epsilon, delta = settings.privacy(preset, epsilon, delta)
    level = _resolve_level(preset, epsilon, delta, n_eff)

    cap_m = settings.get("cap", cap_m, "auto")
    if cap_m == "auto":
        if kind != mech.GAUSSIAN:
            raise ValidationError(
                "cap 'auto' optimizes the Gaussian expected MSE; "
                "give an explicit --cap for the laplacian mechanism")
        sigma_star = mech.calibrate_gaussian(level, n_eff, r, 1).sigma
        result = capopt.optimize_cap(collection, sigma_star)
        m = result.m_star
        click.echo(f"cap auto: m = {m} (searched 1..{result.g_max})")
    else:
        m = _as_int(cap_m, "cap")

    capped = cap_collection(collection, m)
    cal = _calibrate(kind, level, n_eff, r, m)
    click.echo(f"calibrated sigma: {cal.sigma!r} "
               f"(kind={kind}, epsilon={level.epsilon}, "
               f"delta={cal.derived_from.delta}, n={n_eff}, r={r}, m={m})")

    noisy = mech.add_calibrated_noise(aggregate(capped), cal, settings.seed)
    out = settings.output_path("values", output)
    if out is None:
        raise ValidationError("an output path is required (-o)")
    io.save_value_map(noisy, out)
    click.echo(f"noisy aggregate -> {out}")

    render_path = settings.output_path("image", render_path)
    if render_path:
        sigma = settings.get("psf_sigma", psf_sigma)
        if sigma is None:
            raise ValidationError("--psf-sigma is required to render")
        io.render_heatmap(
            convolve_heatmap(noisy, float(sigma), clamp_negative=True),
            render_path)
        click.echo(f"heatmap -> {render_path}")


@main.command("optimize-cap")
@click.argument("input_csv", type=click.Path(exists=True, dir_okay=False))
@click.option("--preset", type=click.Choice(sorted(mech.PRESET_EPSILON)),
              default=None)
@click.option("--epsilon", type=float, default=None)
@click.option("--delta", type=float, default=None)
@click.option("--downsample", type=int, default=None)
@click.option("--replicate", type=int, default=None)
@click.option("-o", "--output", type=click.Path(dir_okay=False), default=None,
              help="Write the search result as JSON.")
@click.pass_obj
@handle_errors
def optimize_cap_cmd(settings, input_csv, preset, epsilon, delta, downsample,
                     replicate, output):
    """Choose the cap minimizing the Gaussian expected MSE."""
    collection = _load_collection(settings, input_csv, downsample)
    replicate = _as_int(settings.get("replicate", replicate, 1) or 1, "replicate")
    n_eff = collection.n * replicate
    preset, epsilon, delta = settings.privacy(preset, epsilon, delta)
    level = _resolve_level(preset, epsilon, delta, n_eff)
    sigma_star = mech.calibrate_gaussian(level, n_eff, collection.grid.r, 1).sigma
    result = capopt.optimize_cap(collection, sigma_star)
    for m, value in result.expected_mse_by_m.items():
        marker = "  <-- m*" if m == result.m_star else ""
        click.echo(f"m={m}: expected MSE {value!r}{marker}")
    click.echo(f"m_star = {result.m_star} (sigma* = {sigma_star!r})")
    out = settings.output_path("report", output)
    if out:
        payload = {"m_star": result.m_star, "g_max": result.g_max,
                   "sigma_star": result.sigma_star,
                   "expected_mse_by_m": {str(k): v for k, v in
                                         result.expected_mse_by_m.items()}}
        _write_json(payload, out)


@main.group("audit")
def audit_group():
    """Attacks and empirical privacy checks (exit 3 on violation)."""


@audit_group.command("reconstruction")
@click.argument("input_csv", type=click.Path(exists=True, dir_okay=False))
@click.option("--target-index", type=int, default=0, show_default=True)
@click.option("-o", "--output", type=click.Path(dir_okay=False), default=None)
@click.pass_obj
@handle_errors
def audit_reconstruction(settings, input_csv, target_index, output):
    """Recover one observer's map from the noise-free release."""
    collection = _load_collection(settings, input_csv)
    if not (0 <= target_index < collection.n):
        raise ValidationError(
            f"target index {target_index} out of range for n = {collection.n}")
    released = mech.mech_noise_free(collection)
    others = [g for i, g in enumerate(collection.maps) if i != target_index]
    recovered = audit_mod.reconstruct_noise_free(released, others, collection.n)
    exact = bool(np.array_equal(recovered.counts,
                                collection.maps[target_index].counts))
    report = audit_mod.AttackReport(
        mechanism="noise-free", trials=1, exact_recovery=exact,
        notes=f"withheld observer {target_index} of {collection.n}")
    _emit_attack_report(settings, report, output)
    if exact:
        click.echo("violation: withheld gaze map recovered exactly")
        sys.exit(EXIT_VIOLATION)
    click.echo("no exact recovery")


@audit_group.command("selection")
@click.option("--n", "n_observers", type=int, required=True)
@click.option("--c", "fraction", type=float, required=True)
@click.option("--with-replacement/--without-replacement", default=False)
@click.option("--target-index", type=int, default=0, show_default=True)
@click.option("--trials", type=int, default=None)
@click.option("--delta", type=float, default=None,
              help="Claimed delta to test against; default n^(-3/2).")
@click.option("-o", "--output", type=click.Path(dir_okay=False), default=None)
@click.pass_obj
@handle_errors
def audit_selection(settings, n_observers, fraction, with_replacement,
                    target_index, trials, delta, output):
    """Distinguisher attack on the random-selection mechanisms."""
    trials = _as_int(settings.get("trials", trials, 100_000), "trials")
    grid = GridSpec(1, 1)
    collection = GazeCollection(
        grid, tuple(rasterize_fixations([], grid) for _ in range(n_observers)))
    sel = mech.SelectionConfig(fraction, with_replacement)
    report = audit_mod.attack_random_selection(
        collection, sel, target_index, trials, settings.seed)
    _emit_attack_report(settings, report, output)
    delta = float(n_observers) ** -1.5 if delta is None else delta
    se = math.sqrt(max(report.looked_frequency
                       * (1 - report.looked_frequency), 1.0 / trials) / trials)
    if report.looked_frequency > delta + 3 * se:
        click.echo(f"violation: event frequency {report.looked_frequency} "
                   f"exceeds claimed delta {delta:g}")
        sys.exit(EXIT_VIOLATION)
    click.echo("no violation detected")


@audit_group.command("additive")
@click.option("--kind", type=click.Choice([mech.GAUSSIAN, mech.LAPLACIAN]),
              default=mech.GAUSSIAN, show_default=True)
@click.option("--epsilon", type=float, required=True)
@click.option("--delta", type=float, default=None,
              help="Required for gaussian; laplacian is delta = 0.")
@click.option("--n", "n_observers", type=int, required=True)
@click.option("--r", "pixels", type=int, default=1, show_default=True)
@click.option("--m", "cap_m", type=int, default=1, show_default=True)
@click.option("--trials", type=int, default=None)
@click.option("--sigma-scale", type=float, default=1.0, show_default=True,
              help="Multiply the calibrated noise level (audit under-noised "
                   "mechanisms with values < 1).")
@click.option("-o", "--output", type=click.Path(dir_okay=False), default=None)
@click.pass_obj
@handle_errors
def audit_additive(settings, kind, epsilon, delta, n_observers, pixels,
                   cap_m, trials, sigma_scale, output):
    """Monte Carlo check of the (epsilon, delta) inequality."""
    trials = _as_int(settings.get("trials", trials, 1_000_000), "trials")
    if kind == mech.GAUSSIAN:
        if delta is None:
            raise ValidationError("--delta is required for the gaussian audit")
        cal = mech.calibrate_gaussian(mech.PrivacyLevel(epsilon, delta),
                                      n_observers, pixels, cap_m)
    else:
        cal = mech.calibrate_laplacian(epsilon, n_observers, pixels, cap_m)
    cal = cal.scaled(sigma_scale)
    report = audit_mod.audit_additive_mechanism(
        kind, cal, n_observers, pixels, cap_m, trials, settings.seed)
    click.echo(f"worst margin {report.worst_margin!r} "
               f"(se {report.worst_margin_se!r}, {report.trials} trials)")
    out = settings.output_path("report", output)
    if out:
        _write_json(asdict(report), out)
    if report.violates():
        click.echo("violation: the (epsilon, delta) inequality fails")
        sys.exit(EXIT_VIOLATION)
    click.echo("no violation detected")


@main.command("sweep")
@click.argument("input_csv", type=click.Path(exists=True, dir_okay=False))
@click.option("-o", "--output", type=click.Path(dir_okay=False), default=None)
@click.option("--epsilons", default="0.5,1,2,3", show_default=True,
              help="Comma-separated epsilon values.")
@click.option("--kinds", default=f"{mech.GAUSSIAN},{mech.LAPLACIAN}",
              show_default=True)
@click.option("--cap", "cap_m", type=int, default=None)
@click.option("--trials", type=int, default=None)
@click.option("--downsample", type=int, default=None)
@click.option("--replicate", type=int, default=None)
@click.option("--score-heatmaps", is_flag=True, default=False)
@click.option("--psf-sigma", type=float, default=None)
@click.pass_obj
@handle_errors
def sweep(settings, input_csv, output, epsilons, kinds, cap_m, trials,
          downsample, replicate, score_heatmaps, psf_sigma):
    """Privacy-utility sweep; writes one CSV row per (kind, epsilon)."""
    collection = _load_collection(settings, input_csv, downsample)
    trials = _as_int(settings.get("trials", trials, 100), "trials")
    cap_m = _as_int(settings.get("cap", cap_m, 1), "cap")
    replicate = _as_int(settings.get("replicate", replicate, 1) or 1, "replicate")
    try:
        eps_values = [float(e) for e in str(epsilons).split(",") if e.strip()]
    except ValueError as exc:
        raise ValidationError(f"bad epsilon list {epsilons!r}") from exc
    kind_list = [k.strip() for k in str(kinds).split(",") if k.strip()]
    psf = settings.get("psf_sigma", psf_sigma)
    rows = metrics.tradeoff_sweep(
        collection, eps_values, cap_m, trials, settings.seed,
        kinds=kind_list, replicate=replicate,
        score_heatmaps=score_heatmaps,
        psf_sigma=float(psf) if psf is not None else None)
    text = metrics.sweep_to_csv(rows)
    out = settings.output_path("csv", output)
    if out is None:
        click.echo(text, nl=False)
    else:
        with open(out, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        click.echo(f"{len(rows)} rows -> {out}")


@main.command("render")
@click.argument("value_map", type=click.Path(exists=True, dir_okay=False))
@click.option("-o", "--output", type=click.Path(dir_okay=False), required=True)
@click.option("--psf-sigma", type=float, default=None)
@click.option("--clamp/--no-clamp", default=True, show_default=True,
              help="Zero negative values before convolving.")
@click.pass_obj
@handle_errors
def render(settings, value_map, output, psf_sigma, clamp):
    """Convolve a value map with the PSF and write a PGM/PNG image."""
    a = io.load_value_map(value_map)
    sigma = settings.get("psf_sigma", psf_sigma)
    if sigma is None:
        raise ValidationError("--psf-sigma is required")
    io.render_heatmap(convolve_heatmap(a, float(sigma), clamp_negative=clamp),
                      output)
    click.echo(f"heatmap -> {output}")


def _emit_attack_report(settings, report, output):
    out = settings.output_path("report", output)
    click.echo(f"{report.mechanism}: advantage={report.advantage} "
               f"exact_recovery={report.exact_recovery} "
               f"looked={report.looked_frequency} "
               f"not_looked={report.not_looked_frequency}")
    if out:
        _write_json(asdict(report), out)


def _write_json(payload, path):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


if __name__ == "__main__":
    main()
