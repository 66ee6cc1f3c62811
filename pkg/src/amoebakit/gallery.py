"""Built-in example varieties and the end-to-end gallery run.

Every expectation carries a ``basis``:

* ``reference``: a value or shape stated for the example in the source
  literature (these decide the gallery's exit code);
* ``derived``: computed independently during development;
* ``trivial``: follows directly from the construction.
"""
from __future__ import annotations

import json
import math
import time
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Callable

import numpy as np

from . import figures
from .config import plane_to_dict, variety_to_dict
from .fibers import estimate_p_P
from .limits import angle_between, log_limit_set
from .measure import NumericalError, classify_finiteness, comparison_certificate, integrate_pullback
from .planes import AffinePlaneSpec, chart_sampler, is_real, to_variety, volume_certificate
from .raster import LogPolarCharts, raster_hypersurface, raster_pushforward
from .sampling import stream
from .torus import check_jacobian_identity, density_batch
from .variety import Exclusion, Rect, VarietySpec

PI = math.pi
EXCLUSION = 1e-12
CURVE_LADDER = (5.0, 10.0, 20.0, 40.0)
PLANE_LADDER = (10.0, 1e2, 1e3, 1e4, 1e5, 1e6)

PROFILES = {
    "quick": {
        "identity_samples": 10_000,
        "volume_samples": 200_000,
        "ladder_samples": 100_000,
        "limit_samples": 100_000,
        "probes": 20,
        "raster_res": 512,
        "raster_samples": 2_000_000,
        "raster_area": False,
    },
    "full": {
        "identity_samples": 10_000,
        "volume_samples": 1_000_000,
        "ladder_samples": 200_000,
        "limit_samples": 200_000,
        "probes": 20,
        "raster_res": 1024,
        "raster_samples": 10_000_000,
        "raster_area": True,
    },
}


# --------------------------------------------------------------------------
# Built-in varieties
# --------------------------------------------------------------------------


def real_line() -> AffinePlaneSpec:
    return AffinePlaneSpec(1, [1], [[1]], "real-line")


def nonreal_line() -> AffinePlaneSpec:
    return AffinePlaneSpec(1, [1, 1j], [[1], [2]], "nonreal-line")


def real_plane() -> AffinePlaneSpec:
    return AffinePlaneSpec(2, [1, 2], [[1, 1], [3, -1]], "real-plane")


def exp_curve() -> VarietySpec:
    return VarietySpec.from_strings(
        "exp-curve", 1, ["t1", "exp(t1)"], exclusions=[Exclusion(1, 0j, EXCLUSION)], multiplicity_log=2, tags=("analytic",)
    )


def circle_curve() -> VarietySpec:
    """(cos t, sin t) on the strip 0 <= Re t <= 2pi, zeros of cos and sin removed."""
    return VarietySpec.from_strings(
        "circle-curve",
        1,
        ["cos(t1)", "sin(t1)"],
        domain=[Rect((0.0, 2 * PI))],
        exclusions=[Exclusion(1, complex(j * PI / 2), EXCLUSION) for j in range(5)],
        tags=("algebraic", "real"),
    )


def spatial_curve() -> VarietySpec:
    return VarietySpec.from_strings(
        "spatial-curve",
        1,
        ["t1", "exp(t1)", "t1+1"],
        exclusions=[Exclusion(1, 0j, EXCLUSION), Exclusion(1, -1 + 0j, EXCLUSION)],
        tags=("analytic",),
    )


def builtin_specs() -> dict[str, VarietySpec]:
    return {
        "real-line": to_variety(real_line()),
        "nonreal-line": to_variety(nonreal_line()),
        "real-plane": to_variety(real_plane()),
        "exp-curve": exp_curve(),
        "circle-curve": circle_curve(),
        "spatial-curve": spatial_curve(),
    }


# --------------------------------------------------------------------------
# Results
# --------------------------------------------------------------------------


@dataclass
class Expectation:
    name: str
    basis: str  # reference, derived, trivial
    expected: object
    observed: object
    passed: bool
    tolerance: str = ""


@dataclass
class CaseResult:
    name: str
    status: str = "ok"  # ok, crash
    error: str = ""
    expectations: list[Expectation] = field(default_factory=list)
    data: dict = field(default_factory=dict)
    figures: list[str] = field(default_factory=list)

    def expect(self, name, basis, expected, observed, passed, tolerance=""):
        self.expectations.append(Expectation(name, basis, expected, observed, bool(passed), tolerance))

    @property
    def passed(self) -> bool:
        return self.status == "ok" and all(e.passed for e in self.expectations if e.basis == "reference")


@dataclass
class GalleryCase:
    name: str
    spec: VarietySpec
    plane: AffinePlaneSpec | None
    run: Callable[["GalleryCase", "Context", CaseResult], None]

    def config(self) -> dict:
        return plane_to_dict(self.plane) if self.plane is not None else variety_to_dict(self.spec)


@dataclass
class Context:
    out: Path
    profile: str
    seed: int
    jobs: int = 1
    verdicts: dict = field(default_factory=dict)

    @property
    def budget(self) -> dict:
        return PROFILES[self.profile]


def _round(x, digits: int = 12):
    """Round floats so reports do not depend on the last ulp."""
    if isinstance(x, float):
        return float(f"{x:.{digits}g}")
    if isinstance(x, dict):
        return {k: _round(v, digits) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_round(v, digits) for v in x]
    return x


# --------------------------------------------------------------------------
# Shared steps
# --------------------------------------------------------------------------


def step_identity(case: GalleryCase, ctx: Context, res: CaseResult) -> None:
    rep = check_jacobian_identity(case.spec, ctx.budget["identity_samples"], ctx.seed)
    res.data["jacobian_identity"] = {**asdict(rep), "passed": rep.passed}
    res.expect(
        "Log and Arg generalized Jacobians agree",
        "reference",
        "<= 1e-8",
        max(rep.max_total_deviation, rep.max_minor_deviation),
        rep.passed,
        "relative 1e-8, per minor and total",
    )


def step_finiteness(case: GalleryCase, ctx: Context, res: CaseResult, radii, expected: str) -> None:
    v = classify_finiteness(case.spec, radii, ctx.budget["ladder_samples"], ctx.seed, jobs=ctx.jobs)
    ctx.verdicts[case.name] = v
    res.data["finiteness"] = v.to_dict()
    res.expect("finiteness verdict", "reference", expected, v.kind, v.kind == expected)


def step_limit_set(case: GalleryCase, ctx: Context, res: CaseResult, points: int, arcs: int, targets=None) -> None:
    ls = log_limit_set(case.spec, samples=ctx.budget["limit_samples"], seed=ctx.seed)
    res.data["limit_set"] = {"summary": ls.summary(), "clusters": ls.to_rows()}
    res.expect(
        "limit set shape", "reference", {"points": points, "arcs": arcs},
        {"points": len(ls.points), "arcs": len(ls.arcs)},
        len(ls.points) == points and len(ls.arcs) == arcs,
    )
    if case.spec.has_tag("algebraic"):
        ok = all(p.rationality.rational for p in ls.points) and not ls.arcs
        res.expect("algebraic: rational points only", "reference", True, ok, ok)
    if targets is not None:
        worst = 0.0
        for tgt in targets:
            worst = max(worst, min(angle_between(p.direction, tgt) for p in ls.points) if ls.points else math.inf)
        res.expect(
            "limit points at expected directions", "reference", [list(t) for t in targets],
            [p.direction for p in ls.points], math.degrees(worst) <= 2.0, "2 degrees",
        )
    path = ctx.out / f"{case.name}-limit-set.png"
    figures.limit_set_figure(ls, path, f"{case.name}: directions at infinity")
    res.figures.append(path.name)


def step_fibers(case: GalleryCase, ctx: Context, res: CaseResult, log_count: int | None, arg_count: int | None, unbounded=False) -> None:
    est = estimate_p_P(case.spec, ctx.budget["probes"], seed=ctx.seed)
    res.data["fibers"] = est.to_dict()
    res.data["p"], res.data["P"] = est.p, est.P
    if log_count is not None:
        ok = all(c == log_count for c in est.log_counts)
        res.expect("Log fiber cardinality at regular probes", "reference", log_count, sorted(set(est.log_counts)), ok, "exact")
    if arg_count is not None:
        ok = all(c == arg_count for c in est.arg_counts)
        res.expect("Arg fiber cardinality at regular probes", "reference", arg_count, sorted(set(est.arg_counts)), ok, "exact")
        want = Fraction(arg_count, log_count)
        res.expect("p and P", "reference", [str(want)] * 2, [str(est.p), str(est.P)], est.p == want and est.P == want, "exact")
    if unbounded:
        res.expect("Arg fibers grow with the search box", "reference", True, est.unbounded_suspected, est.unbounded_suspected)


def step_plane_volumes(case: GalleryCase, ctx: Context, res: CaseResult) -> None:
    plane = case.plane
    cert = volume_certificate(plane, ctx.budget["volume_samples"], ctx.seed, jobs=ctx.jobs)
    res.data["volume_certificate"] = cert.to_dict()
    k = plane.k
    rel = cert.amoeba.stderr / cert.amoeba.value
    if ctx.profile == "full":
        res.expect(f"amoeba volume pi^{2 * k}/2^{k}", "reference", cert.amoeba_target, cert.amoeba.value, cert.amoeba_ok, "3 stderr")
        res.expect(f"coamoeba volume pi^{2 * k}", "reference", cert.coamoeba_target, cert.coamoeba.value, cert.coamoeba_ok, "3 stderr")
        limit = 0.015 if k == 1 else 0.05
        res.expect("amoeba stderr budget", "derived", f"<= {limit:.1%}", rel, rel <= limit)
    _comparison(res, cert.amoeba, cert.coamoeba)


def _comparison(res: CaseResult, amoeba, coamoeba) -> None:
    p, P = res.data["p"], res.data["P"]
    rep = comparison_certificate(p, P, amoeba, coamoeba)
    res.data["comparison"] = rep.to_dict()
    res.expect("p vol(coamoeba) <= vol(amoeba) <= P vol(coamoeba)", "reference", True, rep.passed, rep.passed, "3 stderr")


def step_line_rasters(case: GalleryCase, ctx: Context, res: CaseResult) -> None:
    b = ctx.budget
    res_px = (b["raster_res"], b["raster_res"])
    am = raster_pushforward(case.spec, "amoeba", (-6, 6, -6, 6), res_px, b["raster_samples"], ctx.seed, jobs=ctx.jobs)
    co = raster_pushforward(case.spec, "coamoeba", (0, 2 * PI, 0, 2 * PI), res_px, b["raster_samples"], ctx.seed, jobs=ctx.jobs)
    for grid, tag in ((am, "amoeba"), (co, "coamoeba")):
        grid.write(ctx.out / f"{case.name}-{tag}.pgm")
        figures.raster_figure(grid, ctx.out / f"{case.name}-{tag}.png", f"{case.name} {tag}", ("x1", "x2") if tag == "amoeba" else ("theta1", "theta2"))
        res.figures += [f"{case.name}-{tag}.pgm", f"{case.name}-{tag}.png"]
    res.data["raster"] = {"amoeba": am.summary(), "coamoeba": co.summary()}
    if b["raster_area"]:
        for grid, target, tag in ((am, PI**2 / 2, "amoeba"), (co, PI**2, "coamoeba")):
            rel = abs(grid.area_estimate - target) / target
            res.expect(f"{tag} pixel area", "reference", target, grid.area_estimate, rel <= 0.03, "3%")


# --------------------------------------------------------------------------
# Case bodies
# --------------------------------------------------------------------------


def run_real_line(case, ctx, res):
    step_identity(case, ctx, res)
    ok, _ = is_real(case.plane)
    res.expect("reality test", "reference", True, ok, ok)
    step_fibers(case, ctx, res, 2, 1)
    step_plane_volumes(case, ctx, res)
    step_finiteness(case, ctx, res, PLANE_LADDER, "convergent")
    step_limit_set(case, ctx, res, 3, 0, [(-1, 0), (0, -1), (1 / math.sqrt(2), 1 / math.sqrt(2))])
    step_line_rasters(case, ctx, res)


def run_nonreal_line(case, ctx, res):
    step_identity(case, ctx, res)
    ok, _ = is_real(case.plane)
    res.expect("reality test", "reference", False, ok, not ok)
    step_fibers(case, ctx, res, 1, 1)
    sampler = chart_sampler(case.plane)
    n = ctx.budget["volume_samples"]
    am = integrate_pullback(case.spec, "amoeba", n, ctx.seed, sampler, multiplicity=1, jobs=ctx.jobs)
    co = integrate_pullback(case.spec, "coamoeba", n, ctx.seed, sampler, multiplicity=1, jobs=ctx.jobs)
    res.data["volumes"] = {"amoeba": am.to_dict(), "coamoeba": co.to_dict()}
    _comparison(res, am, co)
    step_finiteness(case, ctx, res, PLANE_LADDER, "convergent")
    step_limit_set(case, ctx, res, 4, 0)


def run_real_plane(case, ctx, res):
    step_identity(case, ctx, res)
    res.data["genericity"] = case.plane.genericity()
    res.expect("plane in general position", "derived", "< 1e8", case.plane.genericity(), case.plane.is_generic())
    step_fibers(case, ctx, res, 4, 1)
    step_plane_volumes(case, ctx, res)
    step_finiteness(case, ctx, res, PLANE_LADDER, "convergent")


def run_exp_curve(case, ctx, res):
    step_identity(case, ctx, res)
    values, dz = case.spec.jets(np.array([[1.0 + 0j], [1j]]))
    dl, _ = density_batch(values, dz)
    res.expect("density vanishes at real points", "reference", 0.0, float(dl[0]), dl[0] <= 1e-12)
    res.expect("density at t = i", "derived", 1.0, float(dl[1]), abs(dl[1] - 1) <= 1e-12)
    step_fibers(case, ctx, res, 2, None, unbounded=True)
    step_finiteness(case, ctx, res, CURVE_LADDER, "divergent")
    step_limit_set(case, ctx, res, 1, 1, [(-1, 0)])
    # the amoeba is the region |x2| <= exp(x1)
    b = ctx.budget
    grid = raster_pushforward(
        case.spec, "amoeba", (-3, 3, -20, 20), (512, 512), b["raster_samples"], ctx.seed,
        charts=LogPolarCharts([0j], (-3.5, 3.5)), jobs=ctx.jobs,
    )
    grid.write(ctx.out / "exp-curve.pgm")
    xs = np.linspace(-3, 3, 400)
    figures.raster_figure(
        grid, ctx.out / "exp-curve.png", "amoeba of (t, exp t)",
        overlay=[(xs, np.exp(xs), "r-"), (xs, -np.exp(xs), "r-")],
    )
    res.figures += ["exp-curve.pgm", "exp-curve.png"]
    x0, x1, y0, y1 = grid.bounds
    cx = x0 + (np.arange(grid.width) + 0.5) * (x1 - x0) / grid.width
    cy = y0 + (np.arange(grid.height) + 0.5) * (y1 - y0) / grid.height
    inside = np.abs(cy)[:, None] <= np.exp(cx)[None, :]
    agree = float(np.mean(inside == grid.occupied))
    heights = grid.occupied.sum(axis=0)
    monotone = bool(np.all(np.diff(heights) >= -2))
    res.data["raster"] = {**grid.summary(), "agreement": agree, "monotone": monotone}
    res.expect("raster matches |x2| <= exp(x1)", "reference", ">= 0.97", agree, agree >= 0.97, "pixel agreement")
    res.expect("column heights grow with x1", "reference", True, monotone, monotone)


def run_circle_curve(case, ctx, res):
    step_identity(case, ctx, res)
    step_finiteness(case, ctx, res, CURVE_LADDER, "convergent")
    step_limit_set(case, ctx, res, 3, 0, [(-1, 0), (0, -1), (1 / math.sqrt(2), 1 / math.sqrt(2))])
    b = ctx.budget
    bounds = (-5, 5, -5, 5)
    grid = raster_pushforward(
        case.spec, "amoeba", bounds, (512, 512), b["raster_samples"], ctx.seed,
        charts=LogPolarCharts([complex(j * PI / 2) for j in range(5)], (-7, 2.5)), jobs=ctx.jobs,
    )
    grid.write(ctx.out / "circle-curve.pgm")
    hyp = raster_hypersurface({"0,0": -1, "2,0": 1, "0,2": 1}, bounds, (512, 512), b["raster_samples"] // 4, ctx.seed)
    hyp.grid.write(ctx.out / "circle-hypersurface.pgm")
    figures.raster_figure(grid, ctx.out / "circle-curve.png", "amoeba of (cos t, sin t)")
    res.figures += ["circle-curve.pgm", "circle-hypersurface.pgm", "circle-curve.png"]
    a, h = grid.occupied, hyp.grid.occupied
    jac = float((a & h).sum() / max(1, (a | h).sum()))
    # implicit columns rarely reach deep into thin tentacles, so compare one way
    grown = a.copy()
    grown[1:] |= a[:-1]
    grown[:-1] |= a[1:]
    grown[:, 1:] |= a[:, :-1]
    grown[:, :-1] |= a[:, 1:]
    cover = float((h & grown).sum() / max(1, h.sum()))
    res.data["raster"] = {
        "pushforward": grid.summary(), "hypersurface": hyp.grid.summary(),
        "skipped_columns": hyp.skipped, "jaccard": jac, "implicit_covered": cover,
    }
    res.expect("implicit raster inside parametric raster", "derived", ">= 0.99", cover, cover >= 0.99, "one-cell dilation")


def run_spatial_curve(case, ctx, res):
    step_identity(case, ctx, res)
    step_finiteness(case, ctx, res, CURVE_LADDER, "divergent")
    step_limit_set(case, ctx, res, 2, 1, [(-1, 0, 0), (0, 0, -1)])
    b = ctx.budget
    gen = stream(ctx.seed, 310)
    t = LogPolarCharts([0j, -1 + 0j], (-4, 3.5)).draw(gen, 200_000, 1)
    t = t[case.spec.admissible(t)]
    values, _ = case.spec.jets(t)
    with np.errstate(over="ignore", divide="ignore"):
        logs = np.log(np.abs(values))
    logs = logs[np.all(np.isfinite(logs), axis=1)]
    figures.cloud_figure(logs, ctx.out / "spatial-curve.png", "amoeba of (t, exp t, t+1)")
    res.figures.append("spatial-curve.png")
    for pair in ((0, 1), (0, 2)):
        grid = raster_pushforward(
            case.spec, "amoeba", (-4, 4, -12, 12), (512, 512), b["raster_samples"] // 2, ctx.seed, pair=pair,
            charts=LogPolarCharts([0j, -1 + 0j], (-5, 3)), jobs=ctx.jobs,
        )
        name = f"spatial-curve-x{pair[0] + 1}x{pair[1] + 1}.pgm"
        grid.write(ctx.out / name)
        res.figures.append(name)
        res.data[f"raster_{pair[0] + 1}{pair[1] + 1}"] = grid.summary()


def gallery_cases() -> list[GalleryCase]:
    specs = builtin_specs()
    return [
        GalleryCase("real-line", specs["real-line"], real_line(), run_real_line),
        GalleryCase("nonreal-line", specs["nonreal-line"], nonreal_line(), run_nonreal_line),
        GalleryCase("real-plane", specs["real-plane"], real_plane(), run_real_plane),
        GalleryCase("exp-curve", specs["exp-curve"], None, run_exp_curve),
        GalleryCase("circle-curve", specs["circle-curve"], None, run_circle_curve),
        GalleryCase("spatial-curve", specs["spatial-curve"], None, run_spatial_curve),
    ]


# --------------------------------------------------------------------------
# Driver
# --------------------------------------------------------------------------


@dataclass
class GallerySummary:
    results: list[CaseResult]
    exit_code: int
    table: str
    seconds: float


def _jsonable(x):
    if isinstance(x, Fraction):
        return str(x)
    if isinstance(x, (np.floating,)):
        return float(x)
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, np.bool_):
        return bool(x)
    if isinstance(x, complex):
        return [x.real, x.imag]
    if isinstance(x, np.ndarray):
        return x.tolist()
    raise TypeError(f"not serializable: {type(x).__name__}")


def format_table(results: list[CaseResult]) -> str:
    rows = [("case", "check", "basis", "result")]
    for r in results:
        if r.status != "ok":
            rows.append((r.name, f"crashed: {r.error}", "-", "FAIL"))
        for e in r.expectations:
            rows.append((r.name, e.name, e.basis, "PASS" if e.passed else "FAIL"))
    widths = [max(len(row[i]) for row in rows) for i in range(4)]
    lines = ["  ".join(c.ljust(w) for c, w in zip(row, widths)).rstrip() for row in rows]
    lines.insert(1, "  ".join("-" * w for w in widths))
    return "\n".join(lines) + "\n"


def run_gallery(out_dir, profile: str = "quick", seed: int = 0, jobs: int = 1, only: list[str] | None = None, log=print) -> GallerySummary:
    """Run every built-in case; write figures, results.json and a pass/fail table.

    Exit code: 0 when all reference expectations pass, 1 when one fails or a
    case crashes, 3 when a crash was a numerical failure.
    """
    if profile not in PROFILES:
        raise ValueError(f"profile must be one of {sorted(PROFILES)}")
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    ctx = Context(out, profile, seed, jobs)
    results: list[CaseResult] = []
    numerical = False
    start = time.perf_counter()
    for case in gallery_cases():
        if only and case.name not in only:
            continue
        res = CaseResult(case.name)
        res.data["config"] = case.config()
        t0 = time.perf_counter()
        try:
            case.run(case, ctx, res)
        except NumericalError as exc:
            res.status, res.error = "crash", f"numerical: {exc}"
            numerical = True
        except Exception as exc:  # noqa: BLE001 - reported per case
            res.status, res.error = "crash", f"{type(exc).__name__}: {exc}"
        results.append(res)
        log(f"{case.name}: {'ok' if res.passed else 'FAIL'} ({time.perf_counter() - t0:.1f}s)")
    if ctx.verdicts:
        figures.convergence_figure(ctx.verdicts, out / "finiteness.png")
    payload = {
        "profile": profile,
        "seed": seed,
        "cases": [
            {
                "name": r.name,
                "status": r.status,
                "error": r.error,
                "passed": r.passed,
                "expectations": [asdict(e) for e in r.expectations],
                "data": r.data,
                "figures": r.figures,
            }
            for r in results
        ],
    }
    text = json.dumps(_round(json.loads(json.dumps(payload, default=_jsonable))), indent=2, sort_keys=True)
    (out / "results.json").write_text(text + "\n")
    table = format_table(results)
    (out / "summary.txt").write_text(table)
    if all(r.passed for r in results):
        code = 0
    else:
        code = 3 if numerical and all(r.status != "ok" or r.passed for r in results) else 1
    return GallerySummary(results, code, table, time.perf_counter() - start)
