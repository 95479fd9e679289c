"""Command-line entry point: ``inducedfringes {simulate,analyze,sweep,equivalence}``.

Every subcommand reads an optional config file (``--config`` or the
``INDUCEDFRINGES_CONFIG`` environment variable), applies ``--set KEY=VALUE``
overrides and then its own flags, and writes results atomically under the
output directory. Identical inputs give byte-identical outputs.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

import numpy as np

from ._io import atomic_write_text
from .analysis import (
    analyze_image,
    fit_equivalent_wavelength,
    write_estimate_csv,
    write_extrema_csv,
    write_fits_csv,
)
from .biphoton import equivalent_wavelength
from .config import parse_config
from .exceptions import ConfigError, ImageFormatError
from .imaging import add_shot_noise, read_image, render_image, write_image
from .optics import (
    DEFOCUS_VALIDITY_LIMIT,
    defocus_to_distance,
    displaced_lens_field,
    field_mismatch,
    fresnel_propagate,
    kernel_test_field,
)

logger = logging.getLogger("inducedfringes")

DEFAULT_RATIOS = (1e-4, 1e-3, 0.01, 0.03, 0.06, 0.1, 0.2, 0.5)
EQUIVALENCE_WAIST_UM = 100.0
MISMATCH_LIMIT = 0.05
EQUIVALENCE_COLUMNS = ("delta_m", "ratio", "mismatch")
A_VS_D_COLUMNS = ("run", "d_mm", "a_per_m2", "sigma_a_per_m2", "a_theory_per_m2")
ESTIMATES_COLUMNS = ("run", "lambda_eq_m", "sigma_m", "lambda_theory_m", "ratio")


class UsageError(Exception):
    pass


def _float_list(text):
    try:
        values = [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None
    if not values:
        raise argparse.ArgumentTypeError("empty list")
    return values


def _int_list(text):
    try:
        values = [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None
    if not values or min(values) < 0:
        raise argparse.ArgumentTypeError("seeds must be non-negative integers")
    return values


def _num(x):
    return repr(float(x))


def _csv(header, rows):
    return "\n".join(",".join(str(v) for v in row) for row in [header, *rows]) + "\n"


def _load_config(args, extra=()):
    overrides = list(args.set or [])
    if getattr(args, "output_dir", None):
        overrides.append(f"run.output_dir={args.output_dir}")
    if getattr(args, "transmission", None) is not None:
        overrides.append(f"transfer.transmission={args.transmission!r}")
    if getattr(args, "noise_free", False):
        overrides.append("run.noise_seed=none")
    overrides.extend(extra)
    return parse_config(args.config, overrides)


def _frame_name(cfg, phi0_deg=None):
    t = cfg.transfer
    if t.phase_kind == "defocus":
        stem = f"frame_d{t.defocus_distance * 1e3:g}mm"
    else:
        stem = f"frame_{t.phase_kind}"
    if t.transmission != 1.0:
        stem += f"_t{t.transmission:g}"
    if phi0_deg is not None:
        stem += f"_phi{phi0_deg:g}deg"
    return stem + ".pgm"


def _render(cfg, seed):
    img = render_image(cfg.optical, cfg.amplitude(), cfg.transfer, cfg.camera)
    return img if seed is None else add_shot_noise(img, seed)


def cmd_simulate(cfg, phase_scan=None):
    """Render one frame, or one frame per ``phi0`` in ``phase_scan`` (degrees).

    Scan frame ``i`` gets noise seed ``noise_seed + i``. Returns the written
    image paths.
    """
    out = cfg.output_dir
    out.mkdir(parents=True, exist_ok=True)
    if not phase_scan:
        return [write_image(_render(cfg, cfg.noise_seed), out / _frame_name(cfg))]
    paths = []
    for i, deg in enumerate(phase_scan):
        frame_cfg = cfg.with_transfer(phi0=float(np.radians(deg)))
        seed = None if cfg.noise_seed is None else cfg.noise_seed + i
        paths.append(write_image(_render(frame_cfg, seed), out / _frame_name(frame_cfg, deg)))
    return paths


def _expand(paths):
    files = []
    for p in map(Path, paths):
        if p.is_dir():
            files.extend(sorted(p.glob("*.pgm")))
        else:
            files.append(p)
    return files


def _summary(results, est, lam_theory, skipped):
    lines = [f"images analyzed: {len(results)}", f"images skipped: {skipped}", ""]
    lines.append("d_mm  a_per_m2  sigma_a_per_m2  residual_rms  extrema")
    for d, an in results:
        lines.append(f"{d * 1e3:g}  {an.fit.a:.6g}  {an.fit.sigma_a:.3g}  {an.fit.residual_rms:.3g}  {len(an.extrema)}")
    lines.append("")
    if est is not None:
        consistent = abs(est.intercept) <= 3 * est.intercept_sigma
        lines += [
            f"lambda_eq estimate: {est.lambda_eq * 1e9:.3f} nm +- {est.sigma * 1e9:.3f} nm",
            f"lambda_eq theory (lambda_s^2/lambda_i): {lam_theory * 1e9:.3f} nm",
            f"ratio estimate/theory: {est.lambda_eq / lam_theory:.5f}",
            f"intercept: {est.intercept:.4g} +- {est.intercept_sigma:.3g} m^-2 "
            f"(within 3 sigma of zero: {'yes' if consistent else 'no'})",
        ]
    else:
        lines.append(f"lambda_eq theory (lambda_s^2/lambda_i): {lam_theory * 1e9:.3f} nm")
        lines.append("lambda_eq estimate: not available (needs images at two or more distinct d)")
    return "\n".join(lines) + "\n"


def _common_value(images, key, fallback):
    values = {img.metadata.get(key) for img in images if img.metadata.get(key) is not None}
    if len(values) > 1:
        raise ConfigError(f"images disagree on {key}: {sorted(values)}")
    return float(values.pop()) if values else fallback


def analyze_images(items, cfg, out_dir, skipped=0):
    """Analyze images and write the CSVs and ``summary.txt``.

    ``items`` holds ``(label, d, image)`` triples. Returns ``(estimate,
    results, lambda_theory, written_paths)``; the estimate is None when
    fewer than two distinct ``d`` values survive extraction.
    """
    s = cfg.analysis
    results = []
    for label, d, img in sorted(items, key=lambda item: (item[1], item[0])):
        try:
            an = analyze_image(img, bin_width=s.bin_width, smooth_half_width=s.smooth_half_width,
                               prominence=s.prominence, search_px=s.center_search_px, step_px=s.center_step_px)
        except ValueError as exc:
            logger.warning("skipping %s: %s", label, exc)
            skipped += 1
            continue
        results.append((d, an))

    out_dir.mkdir(parents=True, exist_ok=True)
    written = [out_dir / "extrema.csv", out_dir / "fits.csv"]
    write_extrema_csv(written[0], [(d, an.extrema) for d, an in results])
    write_fits_csv(written[1], [(d, an.fit) for d, an in results])

    images = [img for _, _, img in items]
    f_c = _common_value(images, "f_c_m", cfg.optical.f_c)
    lam_s = _common_value(images, "lambda_s_m", cfg.optical.lambda_s)
    lam_i = _common_value(images, "lambda_i_m", cfg.optical.lambda_i)
    lam_theory = equivalent_wavelength(lam_s, lam_i)

    est = None
    if len({d for d, _ in results}) >= 2:
        est = fit_equivalent_wavelength([(d, an.fit) for d, an in results], f_c)
        written.append(out_dir / "estimate.csv")
        write_estimate_csv(written[-1], est)
    written.append(out_dir / "summary.txt")
    atomic_write_text(written[-1], _summary(results, est, lam_theory, skipped))
    return est, results, lam_theory, written


def cmd_analyze(paths, cfg, d_mm=None):
    files = _expand(paths)
    if d_mm is not None and len(d_mm) != len(files):
        raise UsageError(f"--d-mm lists {len(d_mm)} values for {len(files)} images")
    items, skipped = [], 0
    for i, path in enumerate(files):
        try:
            img = read_image(path)
        except (ImageFormatError, OSError) as exc:
            logger.warning("skipping %s: %s", path, exc)
            skipped += 1
            continue
        d = d_mm[i] * 1e-3 if d_mm is not None else img.metadata.get("d_m")
        if not d or d <= 0:
            logger.warning("skipping %s: no positive propagation distance (use --d-mm)", path)
            skipped += 1
            continue
        items.append((str(path), float(d), img))
    return analyze_images(items, cfg, cfg.output_dir, skipped)


def cmd_sweep(cfg, d_list, seeds):
    """Simulate and analyze every ``d`` for each seed (``None`` = noise-free).

    Each run goes to its own subdirectory (``noise_free`` or ``seed_<n>``);
    frame ``i`` of a noisy run uses seed ``seed + i``. Aggregated
    ``a_vs_d.csv`` and ``estimates.csv`` are written at the top level.
    """
    if len(set(d_list)) < 2:
        raise UsageError("sweep needs at least two distinct --d-mm values")
    a_rows, est_rows, written, estimates = [], [], [], []
    for seed in seeds:
        label = "noise_free" if seed is None else f"seed_{seed}"
        run_dir = cfg.output_dir / label
        run_dir.mkdir(parents=True, exist_ok=True)
        items = []
        for i, d in enumerate(d_list):
            frame_cfg = cfg.with_transfer(phase_kind="defocus", defocus_distance=d * 1e-3)
            path = write_image(_render(frame_cfg, None if seed is None else seed + i),
                               run_dir / _frame_name(frame_cfg))
            written.append(path)
            items.append((str(path), d * 1e-3, read_image(path)))
        est, results, lam_theory, paths = analyze_images(items, cfg, run_dir)
        written += paths
        for d, an in results:
            a_theory = d / (2 * cfg.optical.f_c**2 * lam_theory)
            a_rows.append([label, repr(round(d * 1e3, 9)), _num(an.fit.a), _num(an.fit.sigma_a), _num(a_theory)])
        if est is None:
            raise ConfigError(f"{label}: fewer than two distances produced usable fringes")
        estimates.append((label, est, lam_theory))
        est_rows.append([label, _num(est.lambda_eq), _num(est.sigma), _num(lam_theory),
                         _num(est.lambda_eq / lam_theory)])
    written.append(cfg.output_dir / "a_vs_d.csv")
    atomic_write_text(written[-1], _csv(A_VS_D_COLUMNS, a_rows))
    written.append(cfg.output_dir / "estimates.csv")
    atomic_write_text(written[-1], _csv(ESTIMATES_COLUMNS, est_rows))
    return estimates, written


def cmd_equivalence(ratios, f_idler, waist, k, out_dir):
    """Mismatch between the displaced-lens and free-space kernels for each ``delta**2/f**2``.

    Returns ``(rows, ok)``; ``ok`` is False if any ratio within the validity
    limit reaches :data:`MISMATCH_LIMIT` or a row could not be computed.
    """
    rows, ok = [], True
    for ratio in ratios:
        delta = f_idler * np.sqrt(ratio)
        try:
            u0 = kernel_test_field(waist, delta, f_idler, k)
            mismatch = field_mismatch(
                displaced_lens_field(u0, delta, f_idler, k),
                fresnel_propagate(u0, defocus_to_distance(delta, f_idler), k),
            )
        except ValueError as exc:
            logger.error("delta^2/f^2 = %g: %s", ratio, exc)
            mismatch, ok = float("nan"), False
        if ratio <= DEFOCUS_VALIDITY_LIMIT and not mismatch < MISMATCH_LIMIT:
            ok = False
        rows.append((delta, ratio, mismatch))
    out_dir.mkdir(parents=True, exist_ok=True)
    path = out_dir / "equivalence.csv"
    atomic_write_text(path, _csv(EQUIVALENCE_COLUMNS, [[_num(v) for v in r] for r in rows]))
    return rows, ok, path


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="config file (default: $INDUCEDFRINGES_CONFIG, else built-in defaults)")
    common.add_argument("--set", action="append", metavar="KEY=VALUE", help="override one config key; repeatable")
    common.add_argument("--output-dir", help="output directory (config key run.output_dir)")
    common.add_argument("-v", "--verbose", action="store_true")

    noise = argparse.ArgumentParser(add_help=False)
    group = noise.add_mutually_exclusive_group()
    group.add_argument("--seed", type=_int_list, help="shot-noise seed(s), comma-separated for sweep")
    group.add_argument("--noise-free", action="store_true", help="skip shot noise")

    p = argparse.ArgumentParser(prog="inducedfringes", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("simulate", parents=[common, noise], help="render fringe frames")
    s.add_argument("--d-mm", type=float, help="defocus propagation distance (config key transfer.d_mm)")
    s.add_argument("--phase-scan", type=_float_list, metavar="DEG,...", help="render one frame per phi0 (degrees)")
    s.add_argument("--transmission", type=float, help="idler amplitude transmission (transfer.transmission)")

    a = sub.add_parser("analyze", parents=[common], help="extract rings and estimate lambda_eq")
    a.add_argument("paths", nargs="+", help="image files or directories of .pgm files")
    a.add_argument("--d-mm", type=_float_list, metavar="D,...", help="propagation distance per image, in order")

    w = sub.add_parser("sweep", parents=[common, noise], help="simulate and analyze a set of distances")
    w.add_argument("--d-mm", type=_float_list, required=True, metavar="D,...")
    w.add_argument("--transmission", type=float)

    e = sub.add_parser("equivalence", parents=[common], help="compare the two defocus kernels")
    e.add_argument("--ratios", type=_float_list, metavar="R,...", help="delta^2/f^2 values")
    e.add_argument("--f-idler-mm", type=float, help="idler 4f focal length (default from config)")
    e.add_argument("--waist-um", type=float, default=EQUIVALENCE_WAIST_UM, help="test beam waist")
    return p


def _run(args):
    if args.command == "simulate":
        extra = []
        if args.d_mm is not None:
            extra.append(f"transfer.d_mm={args.d_mm!r}")
        if args.seed is not None:
            if len(args.seed) != 1:
                raise UsageError("simulate takes a single --seed")
            extra.append(f"run.noise_seed={args.seed[0]}")
        cfg = _load_config(args, extra)
        if args.d_mm is not None and cfg.transfer.phase_kind != "defocus":
            raise UsageError("--d-mm needs transfer.kind = defocus")
        for path in cmd_simulate(cfg, args.phase_scan):
            print(path)
        return 0

    if args.command == "analyze":
        cfg = _load_config(args)
        est, results, lam_theory, written = cmd_analyze(args.paths, cfg, args.d_mm)
        for path in written:
            print(path)
        if est is None:
            print(f"error: {len(results)} usable image(s); the lambda_eq estimate needs two or more distinct d",
                  file=sys.stderr)
            return 1
        print(f"lambda_eq = {est.lambda_eq * 1e9:.3f} +- {est.sigma * 1e9:.3f} nm "
              f"(theory {lam_theory * 1e9:.3f} nm, ratio {est.lambda_eq / lam_theory:.5f})")
        return 0

    if args.command == "sweep":
        cfg = _load_config(args)
        if args.seed is not None:
            seeds = args.seed
        else:
            seeds = [cfg.noise_seed]
        estimates, written = cmd_sweep(cfg, args.d_mm, seeds)
        for path in written:
            print(path)
        for label, est, lam_theory in estimates:
            print(f"{label}: lambda_eq = {est.lambda_eq * 1e9:.3f} +- {est.sigma * 1e9:.3f} nm "
                  f"(theory {lam_theory * 1e9:.3f} nm, ratio {est.lambda_eq / lam_theory:.5f})")
        return 0

    cfg = _load_config(args)
    f_idler = cfg.optical.f_idler if args.f_idler_mm is None else args.f_idler_mm * 1e-3
    if not f_idler > 0 or not args.waist_um > 0:
        raise UsageError("--f-idler-mm and --waist-um must be positive")
    ratios = args.ratios or list(DEFAULT_RATIOS)
    if min(ratios) <= 0:
        raise UsageError("ratios must be positive")
    rows, ok, path = cmd_equivalence(ratios, f_idler, args.waist_um * 1e-6, cfg.optical.k_i, cfg.output_dir)
    print(path)
    for delta, ratio, mismatch in rows:
        print(f"delta = {delta * 1e3:.4g} mm  delta^2/f^2 = {ratio:g}  mismatch = {mismatch:.4g}")
    if not ok:
        print(f"error: mismatch reached {MISMATCH_LIMIT} within delta^2/f^2 <= {DEFOCUS_VALIDITY_LIMIT}",
              file=sys.stderr)
        return 1
    return 0


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s: %(message)s")
    try:
        return _run(args)
    except UsageError as exc:
        parser.error(str(exc))
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
