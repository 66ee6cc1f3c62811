"""Command-line interface.

Exit codes: 0 success, 1 an expectation failed, 2 configuration error,
3 numerical failure (non-finite integrand, solver nonconvergence).

Raster images are binary PGM (header ``P5\\n<W> <H>\\n255\\n``; occupied
pixels 0, empty 255) or PPM (``P6``, occupied RGB 24,54,120 on white),
chosen by the --out suffix; the first image row is the top edge.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
from pathlib import Path

import numpy as np

from . import config as cfg
from .expr import ExpressionError, parse_number
from .fibers import MAPS, estimate_p_P, fiber_count
from .gallery import PROFILES, builtin_specs, nonreal_line, real_line, real_plane, run_gallery
from .limits import NoFarSamples, log_limit_set
from .measure import (
    MissingMultiplicity,
    NumericalError,
    classify_finiteness,
    integrate_pullback,
)
from .planes import chart_sampler, expected_counts, is_real, volume_certificate
from .raster import RasterError, raster_hypersurface, raster_pushforward
from .sampling import BoxSampler
from .torus import check_jacobian_identity

EXIT_OK, EXIT_FAIL, EXIT_CONFIG, EXIT_NUMERIC = 0, 1, 2, 3
SEED_ENV = "AMOEBA_SEED"


class UsageError(ValueError):
    pass


# --------------------------------------------------------------------------
# Helpers
# --------------------------------------------------------------------------


def _floats(text: str, count: int | None = None) -> list[float]:
    try:
        vals = [float(v) for v in text.replace(" ", "").split(",") if v]
    except ValueError as exc:
        raise UsageError(f"expected comma-separated numbers, got {text!r}") from exc
    if count is not None and len(vals) != count:
        raise UsageError(f"expected {count} numbers, got {text!r}")
    return vals


def _resolution(text: str) -> tuple[int, int]:
    parts = text.lower().split("x")
    try:
        w, h = (int(parts[0]), int(parts[-1]))
    except ValueError as exc:
        raise UsageError(f"resolution must look like 512 or 640x480, got {text!r}") from exc
    return w, h


def _complexes(text: str) -> list[complex]:
    try:
        return [parse_number(v) for v in text.split(",")]
    except ExpressionError as exc:
        raise UsageError(f"bad complex number in {text!r}: {exc}") from exc


def _seed(args) -> int:
    env = os.environ.get(SEED_ENV)
    if env is not None and env.strip():
        try:
            return int(env)
        except ValueError as exc:
            raise UsageError(f"{SEED_ENV} must be an integer, got {env!r}") from exc
    return args.seed


def builtin_configs() -> dict[str, dict]:
    planes = {"real-line": real_line, "nonreal-line": nonreal_line, "real-plane": real_plane}
    out = {}
    for name, spec in builtin_specs().items():
        out[name] = cfg.plane_to_dict(planes[name]()) if name in planes else cfg.variety_to_dict(spec)
    return out


def _load(args) -> cfg.Config:
    if getattr(args, "builtin", None):
        known = builtin_configs()
        if args.builtin not in known:
            raise UsageError(f"unknown builtin {args.builtin!r}; choose from {', '.join(known)}")
        return cfg.from_dict(known[args.builtin])
    if not getattr(args, "spec", None):
        raise UsageError("give --spec FILE or --builtin NAME")
    return cfg.load(args.spec)


def _emit(obj, out: str | None) -> None:
    text = json.dumps(obj, indent=2, sort_keys=True, default=_default)
    if out:
        Path(out).write_text(text + "\n")
    else:
        print(text)


def _default(x):
    if isinstance(x, complex):
        return [x.real, x.imag]
    if isinstance(x, np.generic):
        return x.item()
    if isinstance(x, np.ndarray):
        return x.tolist()
    return str(x)


# --------------------------------------------------------------------------
# Subcommands
# --------------------------------------------------------------------------


def cmd_volume(args) -> int:
    conf = _load(args)
    spec = conf.require_variety()
    seed = _seed(args)
    if args.ladder:
        radii = _floats(args.ladder)
        v = classify_finiteness(spec, radii, args.samples, seed, jobs=args.jobs)
        _emit({"spec": spec.name, "seed": seed, **v.to_dict()}, args.out)
        if args.expect_kind:
            return EXIT_OK if v.kind == args.expect_kind else EXIT_FAIL
        return EXIT_OK
    kind = args.sampler
    if kind == "auto":
        kind = "chart" if conf.plane is not None else "box"
    if kind == "chart":
        if conf.plane is None:
            raise UsageError("--sampler chart needs a plane config")
        sampler = chart_sampler(conf.plane)
    else:
        warp = None if args.warp == 0 else args.warp
        sampler = BoxSampler([r.clip(args.box) for r in spec.domain], warp=warp)
    est = integrate_pullback(spec, args.target, args.samples, seed, sampler, multiplicity=args.multiplicity, jobs=args.jobs)
    report = {"spec": spec.name, **est.to_dict()}
    code = EXIT_OK
    if args.expect is not None:
        ok = est.within(args.expect, args.nsigma)
        report["expected"] = args.expect
        report["within_tolerance"] = ok
        code = EXIT_OK if ok else EXIT_FAIL
    _emit(report, args.out)
    return code


def cmd_fibers(args) -> int:
    conf = _load(args)
    spec = conf.require_variety()
    seed = _seed(args)
    if args.at is None:
        est = estimate_p_P(spec, args.probes, args.starts, seed)
        _emit({"spec": spec.name, "seed": seed, **est.to_dict()}, args.out)
        return EXIT_OK
    t = _complexes(args.at)
    if len(t) != spec.k:
        raise UsageError(f"--at needs k={spec.k} values")
    values = spec.jet(t).value
    target = np.log(np.abs(values)) if args.map == "log" else np.angle(values)
    rep = fiber_count(spec, args.map, target, args.starts, seed, known=t)
    _emit({"spec": spec.name, "seed": seed, **rep.to_dict()}, args.out)
    if rep.regularity == "undetermined":
        return EXIT_NUMERIC
    if args.expect_count is not None and rep.count != args.expect_count:
        return EXIT_FAIL
    return EXIT_OK


def cmd_limitset(args) -> int:
    conf = _load(args)
    spec = conf.require_variety()
    seed = _seed(args)
    radii = _floats(args.radii)
    ls = log_limit_set(spec, radii, args.samples, math.radians(args.tol_deg), seed)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow([f"u{i + 1}" for i in range(spec.n)] + ["weight", "spread", "rationality", "arc_id"])
    for row in ls.to_rows():
        w.writerow([f"{v:.12g}" for v in row["direction"]] + [row["weight"], f"{row['spread']:.6g}", row["rationality"], row["arc_id"]])
    if args.out:
        Path(args.out).write_text(buf.getvalue())
    else:
        sys.stdout.write(buf.getvalue())
    if args.png:
        from .figures import limit_set_figure

        limit_set_figure(ls, args.png, spec.name)
    summary = ls.summary()
    print(json.dumps({"points": summary["points"], "arcs": summary["arcs"], "far_samples": summary["far_samples"]}), file=sys.stderr)
    code = EXIT_OK
    if args.expect_points is not None and summary["points"] != args.expect_points:
        code = EXIT_FAIL
    if args.expect_arcs is not None and summary["arcs"] != args.expect_arcs:
        code = EXIT_FAIL
    return code


def cmd_raster(args) -> int:
    conf = _load(args)
    seed = _seed(args)
    res = _resolution(args.res)
    if args.bounds:
        bounds = list(args.bounds)
    else:
        bounds = [0.0, 2 * math.pi, 0.0, 2 * math.pi] if args.mode == "coamoeba" else [-6.0, 6.0, -6.0, 6.0]
    if conf.kind == "polynomial":
        if args.mode != "amoeba":
            raise UsageError("polynomial rasters support --mode amoeba only")
        h = raster_hypersurface(conf.polynomial, bounds, res, args.samples, seed)
        grid, extra = h.grid, {"skipped_columns": h.skipped}
    else:
        pair = tuple(int(v) - 1 for v in _floats(args.pair, 2))
        grid = raster_pushforward(conf.require_variety(), args.mode, bounds, res, args.samples, seed, pair=pair, jobs=args.jobs)
        extra = {"pair": [p + 1 for p in pair]}
    grid.write(args.out)
    if args.png:
        from .figures import raster_figure

        labels = ("x1", "x2") if args.mode == "amoeba" else ("theta1", "theta2")
        raster_figure(grid, args.png, f"{conf.name} {args.mode}", labels)
    _emit({"spec": conf.name, "seed": seed, "out": str(args.out), **grid.summary(), **extra}, args.report)
    return EXIT_OK


def cmd_plane(args) -> int:
    if args.coeffs:
        text = args.coeffs
        if Path(text).is_file():
            text = Path(text).read_text()
        try:
            body = json.loads(text)
        except json.JSONDecodeError as exc:
            raise UsageError(f"--coeffs is not valid JSON: {exc.msg}") from exc
        data = body if "plane" in body else {"schema_version": 1, "name": "plane", "plane": body}
        conf = cfg.from_dict(data)
    else:
        conf = _load(args)
    if conf.plane is None:
        raise UsageError("the plane command needs plane coefficients")
    plane = conf.plane
    seed = _seed(args)
    real, scalars = is_real(plane)
    arg_count, log_count = expected_counts(plane)
    report = {
        "name": plane.name,
        "k": plane.k,
        "n": plane.n,
        "real": real,
        "row_scalars": scalars,
        "genericity": plane.genericity(),
        "generic": plane.is_generic(),
        "expected_counts": {"arg": arg_count, "log": log_count},
    }
    code = EXIT_OK
    if args.fibers:
        est = estimate_p_P(conf.variety, args.fibers, seed=seed)
        match = (log_count == "unknown" or all(c == log_count for c in est.log_counts)) and all(c == arg_count for c in est.arg_counts)
        report["fibers"] = {**est.to_dict(), "match_expected": match}
        code = code if match else EXIT_FAIL
    if args.volume:
        if not real or plane.m != 0:
            raise UsageError("--volume needs a real plane with n = 2k")
        cert = volume_certificate(plane, args.samples, seed, jobs=args.jobs)
        report["volume_certificate"] = cert.to_dict()
        code = code if cert.passed else EXIT_FAIL
    _emit(report, args.out)
    return code


def cmd_jacobian(args) -> int:
    conf = _load(args)
    spec = conf.require_variety()
    seed = _seed(args)
    rep = check_jacobian_identity(spec, args.samples, seed)
    _emit(
        {
            "spec": spec.name,
            "seed": seed,
            "samples": rep.samples,
            "max_total_deviation": rep.max_total_deviation,
            "max_minor_deviation": rep.max_minor_deviation,
            "resampled": rep.resampled,
            "passed": rep.passed,
        },
        args.out,
    )
    return EXIT_OK if rep.passed else EXIT_FAIL


def cmd_gallery(args) -> int:
    seed = _seed(args)
    only = args.only.split(",") if args.only else None
    summary = run_gallery(args.out, args.profile, seed, args.jobs, only, log=lambda m: print(m, file=sys.stderr))
    sys.stdout.write(summary.table)
    print(f"total {summary.seconds:.1f}s, exit {summary.exit_code}", file=sys.stderr)
    return summary.exit_code


# --------------------------------------------------------------------------
# Parser
# --------------------------------------------------------------------------


def _spec_args(p: argparse.ArgumentParser) -> None:
    g = p.add_mutually_exclusive_group()
    g.add_argument("--spec", help="JSON config file (validated against the bundled schema)")
    g.add_argument("--builtin", help="built-in example: " + ", ".join(builtin_specs()))


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=0, help=f"random seed (overridden by ${SEED_ENV})")
    common.add_argument("--jobs", type=int, default=1, help="worker threads (default 1)")

    parser = argparse.ArgumentParser(
        prog="amoebakit",
        description="Amoebas, coamoebas, their volumes, fibers and limit sets.",
        epilog=__doc__,
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("volume", parents=[common], help="Monte Carlo amoeba/coamoeba volume or finiteness ladder")
    _spec_args(p)
    p.add_argument("--target", choices=("amoeba", "coamoeba"), default="amoeba")
    p.add_argument("--samples", type=int, default=1_000_000)
    p.add_argument("--box", type=float, default=40.0, help="half-width of the parameter box")
    p.add_argument("--warp", type=float, default=1.0, help="sinh warp scale for the box sampler (0: uniform)")
    p.add_argument("--sampler", choices=("auto", "box", "chart"), default="auto", help="chart: log-polar charts (planes only); auto picks chart for planes")
    p.add_argument("--multiplicity", type=int, default=None, help="override the declared multiplicity")
    p.add_argument("--ladder", help="comma-separated radii: classify convergence instead")
    p.add_argument("--expect", type=float, default=None, help="expected volume; exit 1 if off by > nsigma stderr")
    p.add_argument("--expect-kind", choices=("convergent", "divergent", "inconclusive"))
    p.add_argument("--nsigma", type=float, default=3.0)
    p.add_argument("--out")
    p.set_defaults(func=cmd_volume)

    p = sub.add_parser("fibers", parents=[common], help="fiber cardinalities and the ratios p, P")
    _spec_args(p)
    p.add_argument("--map", choices=MAPS, default="log")
    p.add_argument("--at", help="parameter point t as comma-separated complex numbers, e.g. --at=-0.5+0.87i; the target is its image")
    p.add_argument("--probes", type=int, default=20, help="probe count when --at is absent")
    p.add_argument("--starts", type=int, default=None, help="multistart count (default 64*2^k)")
    p.add_argument("--expect-count", type=int, default=None)
    p.add_argument("--out")
    p.set_defaults(func=cmd_fibers)

    p = sub.add_parser("limitset", parents=[common], help="directions at infinity as CSV")
    _spec_args(p)
    p.add_argument("--radii", default="10,20,40")
    p.add_argument("--samples", type=int, default=200_000)
    p.add_argument("--tol-deg", type=float, default=1.5)
    p.add_argument("--expect-points", type=int, default=None)
    p.add_argument("--expect-arcs", type=int, default=None)
    p.add_argument("--png", help="also render the directions to this PNG")
    p.add_argument("--out")
    p.set_defaults(func=cmd_limitset)

    p = sub.add_parser("raster", parents=[common], help="amoeba/coamoeba image (PGM/PPM)")
    _spec_args(p)
    p.add_argument("--mode", choices=("amoeba", "coamoeba"), default="amoeba")
    p.add_argument("--bounds", nargs=4, type=float, metavar=("X0", "X1", "Y0", "Y1"))
    p.add_argument("--res", default="512", help="WIDTHxHEIGHT or a single size")
    p.add_argument("--samples", type=int, default=2_000_000, help="parameter samples (columns for polynomials)")
    p.add_argument("--pair", default="1,2", help="coordinate pair to project to (1-based)")
    p.add_argument("--out", required=True, help="image path; .ppm gives colour, anything else PGM")
    p.add_argument("--png", help="also render a matplotlib figure to this path")
    p.add_argument("--report", help="write the JSON summary here instead of stdout")
    p.set_defaults(func=cmd_raster)

    p = sub.add_parser("plane", parents=[common], help="affine plane reality, counts and volume certificate")
    _spec_args(p)
    p.add_argument("--coeffs", help='JSON such as {"k":1,"b":["1"],"a":[["1"]]} or a file holding it')
    p.add_argument("--fibers", type=int, default=0, metavar="PROBES", help="check fiber counts at this many probes")
    p.add_argument("--volume", action="store_true", help="run the volume certificate")
    p.add_argument("--samples", type=int, default=1_000_000)
    p.add_argument("--out")
    p.set_defaults(func=cmd_plane)

    p = sub.add_parser("jacobian-check", parents=[common], help="Log/Arg Jacobian identity on random points")
    _spec_args(p)
    p.add_argument("--samples", type=int, default=10_000)
    p.add_argument("--out")
    p.set_defaults(func=cmd_jacobian)

    p = sub.add_parser("gallery", parents=[common], help="run every built-in example")
    p.add_argument("--out", default="gallery-out", help="output directory")
    p.add_argument("--profile", choices=sorted(PROFILES), default="quick")
    p.add_argument("--only", help="comma-separated case names")
    p.set_defaults(func=cmd_gallery)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "jobs", 1) < 1:
        print("error: --jobs must be >= 1", file=sys.stderr)
        return EXIT_CONFIG
    try:
        return args.func(args)
    except (cfg.ConfigError, UsageError, MissingMultiplicity, RasterError, NoFarSamples, ExpressionError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
