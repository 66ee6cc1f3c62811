"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

Run with pytest (lines are repeated in the terminal summary) or directly:
``python3 tests/test_acceptance.py``.
"""
from __future__ import annotations

import json
import math
import sys
import time
from fractions import Fraction

import numpy as np
import pytest

from amoebakit.fibers import conjugate_paired, estimate_p_P, fiber_count
from amoebakit.gallery import CURVE_LADDER, PLANE_LADDER, builtin_specs, nonreal_line, real_line, real_plane
from amoebakit.limits import angle_between, log_limit_set
from amoebakit.measure import classify_finiteness, comparison_certificate, integrate_pullback
from amoebakit.planes import chart_sampler, to_variety, volume_certificate
from amoebakit.raster import raster_pushforward
from amoebakit.torus import check_jacobian_identity

SEED = 0
PI = math.pi
LINES = []  # (criterion, passed, detail)


def report(n: int, title: str, passed: bool, detail: str) -> None:
    line = f"{'PASS' if passed else 'FAIL'} criterion {n}: {title} | {detail}"
    LINES.append(line)
    print(line)
    assert passed, line


@pytest.fixture(scope="module")
def specs():
    return builtin_specs()


PLANES = {"real-line": real_line(), "nonreal-line": nonreal_line(), "real-plane": real_plane()}


# ---------------------------------------------------------------- 1


def test_criterion_1_jacobian_identity(specs):
    names = ["real-line", "nonreal-line", "real-plane", "exp-curve", "spatial-curve", "circle-curve"]
    start = time.perf_counter()
    worst_total = worst_minor = 0.0
    for name in names:
        rep = check_jacobian_identity(specs[name], 10_000, SEED)
        worst_total = max(worst_total, rep.max_total_deviation)
        worst_minor = max(worst_minor, rep.max_minor_deviation)
    secs = time.perf_counter() - start
    ok = worst_total <= 1e-8 and worst_minor <= 1e-8 and secs < 10
    report(1, "Log/Arg Jacobian identity", ok, f"{len(names)} specs x 1e4 points, total dev {worst_total:.1e}, minor dev {worst_minor:.1e}, {secs:.1f}s")


# ---------------------------------------------------------------- 2


def test_criterion_2_real_line_volumes(specs):
    start = time.perf_counter()
    cert = volume_certificate(real_line(), 1_000_000, SEED)
    am, co = cert.amoeba, cert.coamoeba
    rel_am, rel_co = am.stderr / am.value, co.stderr / co.value
    spec = specs["real-line"]
    r_am = raster_pushforward(spec, "amoeba", (-6, 6, -6, 6), (1024, 1024), 10_000_000, SEED)
    r_co = raster_pushforward(spec, "coamoeba", (0, 2 * PI, 0, 2 * PI), (1024, 1024), 10_000_000, SEED)
    pix_am = r_am.area_estimate / (PI**2 / 2) - 1
    pix_co = r_co.area_estimate / PI**2 - 1
    secs = time.perf_counter() - start
    ok = (
        am.within(PI**2 / 2, 3) and co.within(PI**2, 3)
        and rel_am <= 0.015 and rel_co <= 0.015
        and abs(pix_am) <= 0.03 and abs(pix_co) <= 0.03
        and secs < 60
    )
    report(
        2, "real line volumes", ok,
        f"amoeba {am.value:.4f}+-{am.stderr:.4f} (z {(am.value - PI**2 / 2) / am.stderr:+.2f}, {rel_am:.2%}), "
        f"coamoeba {co.value:.4f}+-{co.stderr:.4f} (z {(co.value - PI**2) / co.stderr:+.2f}), "
        f"pixel area {pix_am:+.2%} / {pix_co:+.2%}, {secs:.1f}s",
    )


# ---------------------------------------------------------------- 3


def test_criterion_3_real_plane_volume():
    start = time.perf_counter()
    cert = volume_certificate(real_plane(), 1_000_000, SEED)
    rel = cert.amoeba.value / (PI**4 / 4) - 1
    secs = time.perf_counter() - start
    ok = abs(rel) <= 0.05 and secs < 300
    report(3, "real 2-plane amoeba volume", ok, f"{cert.amoeba.value:.3f} vs {PI**4 / 4:.3f} ({rel:+.2%}, stderr {cert.amoeba.stderr / cert.amoeba.value:.2%}), {secs:.1f}s")


# ---------------------------------------------------------------- 4

FIBER_EXPECT = {
    "real-line": (2, 1, Fraction(1, 2)),
    "nonreal-line": (1, 1, Fraction(1)),
    "real-plane": (4, 1, Fraction(1, 4)),
}
_pp_cache: dict = {}


def _pp(specs, name):
    if name not in _pp_cache:
        _pp_cache[name] = estimate_p_P(specs[name], probes=20, seed=SEED)
    return _pp_cache[name]


def test_criterion_4_fiber_counts(specs):
    parts, ok = [], True
    for name, (log_n, arg_n, ratio) in FIBER_EXPECT.items():
        est = _pp(specs, name)
        good = (
            est.probes_used == 20
            and set(est.log_counts) == {log_n}
            and set(est.arg_counts) == {arg_n}
            and est.p == est.P == ratio
            and isinstance(est.p, Fraction)
        )
        ok &= good
        parts.append(f"{name} Log {sorted(set(est.log_counts))} Arg {sorted(set(est.arg_counts))} p=P={est.p}")
    report(4, "fiber counts and p=P", ok, "; ".join(parts))


# ---------------------------------------------------------------- 5


def test_criterion_5_comparison_inequality(specs):
    parts, ok = [], True
    for name, plane in PLANES.items():
        est = _pp(specs, name)
        spec = to_variety(plane)
        sampler = chart_sampler(plane)
        am = integrate_pullback(spec, "amoeba", 1_000_000, SEED, sampler, multiplicity=max(est.log_counts))
        co = integrate_pullback(spec, "coamoeba", 1_000_000, SEED + 1, sampler, multiplicity=1)
        rep = comparison_certificate(est.p, est.P, am, co)
        ok &= rep.passed
        parts.append(f"{name} {est.p}*{co.value:.3f} <= {am.value:.3f} <= {est.P}*{co.value:.3f}")
    report(5, "comparison inequality (3 stderr)", ok, "; ".join(parts))


# ---------------------------------------------------------------- 6

FINITENESS = {
    "exp-curve": (CURVE_LADDER, "divergent"),
    "spatial-curve": (CURVE_LADDER, "divergent"),
    "circle-curve": (CURVE_LADDER, "convergent"),
    "real-line": (PLANE_LADDER, "convergent"),
    "nonreal-line": (PLANE_LADDER, "convergent"),
    "real-plane": (PLANE_LADDER, "convergent"),
}


def test_criterion_6_finiteness_classifier(specs):
    wrong = []
    for seed in range(5):
        for name, (ladder, want) in FINITENESS.items():
            v = classify_finiteness(specs[name], ladder, 200_000, seed)
            if v.kind != want:
                wrong.append(f"{name}@seed{seed}={v.kind}")
    report(6, "finiteness classifier", not wrong, f"30 runs (5 seeds x 6 specs), misclassified: {wrong or 'none'}")


# ---------------------------------------------------------------- 7


def test_criterion_7_limit_sets(specs):
    sets = {name: log_limit_set(specs[name], seed=SEED) for name in ("circle-curve", "exp-curve", "spatial-curve", "real-line", "nonreal-line")}
    shape = {n: (len(s.points), len(s.arcs)) for n, s in sets.items()}
    circle = sets["circle-curve"]
    targets = [(-1, 0), (0, -1), (math.sqrt(0.5), math.sqrt(0.5))]
    worst = max(min(angle_between(p.direction, t) for p in circle.points) for t in targets) if circle.points else math.inf
    ok = shape["circle-curve"] == (3, 0) and math.degrees(worst) <= 2.0
    ok &= shape["exp-curve"] == (1, 1) and shape["spatial-curve"] == (2, 1)
    ok &= all(len(sets[n].arcs) >= 1 for n in ("exp-curve", "spatial-curve"))
    algebraic = [n for n in sets if specs[n].has_tag("algebraic")]
    ok &= set(algebraic) == {"circle-curve", "real-line", "nonreal-line"}
    ok &= all(not sets[n].arcs and all(p.rationality.rational for p in sets[n].points) for n in algebraic)
    report(7, "limit sets", ok, f"points/arcs {shape}, circle worst offset {math.degrees(worst):.3f} deg, algebraic {algebraic} rational and arc-free")


# ---------------------------------------------------------------- 8


def test_criterion_8_properties(specs):
    notes, ok = [], True

    # determinism: byte-identical reports, independent of thread count
    sampler = chart_sampler(real_plane())
    spec = specs["real-plane"]
    runs = [integrate_pullback(spec, "amoeba", 300_000, 5, sampler, jobs=j).to_dict() for j in (1, 1, 3)]
    det = len({json.dumps(r, sort_keys=True) for r in runs}) == 1
    rows = [json.dumps(log_limit_set(specs["exp-curve"], samples=50_000, seed=5).to_rows(), sort_keys=True) for _ in range(2)]
    det &= rows[0] == rows[1]
    ok &= det
    notes.append(f"deterministic {det}")

    # stderr proportional to 1/sqrt(samples)
    ratios = []
    for name in ("real-line", "real-plane"):
        smp = chart_sampler(PLANES[name])
        a = integrate_pullback(specs[name], "amoeba", 250_000, 21, smp)
        b = integrate_pullback(specs[name], "amoeba", 1_000_000, 22, smp)
        ratios.append(a.stderr / b.stderr)
    scal = all(abs(r / 2 - 1) <= 0.15 for r in ratios)
    ok &= scal
    notes.append("stderr(n)/stderr(4n) " + ", ".join(f"{r:.3f}" for r in ratios))

    # conjugate pairs in Log fibers of real specs
    pairs = total = 0
    for name in ("real-line", "real-plane"):
        est = _pp(specs, name)
        for row in est.evidence:
            t0 = np.array(row.t)
            values = specs[name].jet(t0).value
            rep = fiber_count(specs[name], "log", np.log(np.abs(values)), seed=SEED, known=t0)
            total += 1
            pairs += rep.regularity == "regular" and conjugate_paired(rep)
    ok &= pairs == total
    notes.append(f"conjugate-paired fibers {pairs}/{total}")

    # amoeba/coamoeba pushforward consistency with multiplicities, independent samples
    worst = 0.0
    for name, plane in PLANES.items():
        est = _pp(specs, name)
        smp = chart_sampler(plane)
        am = integrate_pullback(specs[name], "amoeba", 500_000, 31, smp, multiplicity=max(est.log_counts))
        co = integrate_pullback(specs[name], "coamoeba", 500_000, 32, smp, multiplicity=max(est.arg_counts))
        z = abs(am.raw - co.raw) / math.hypot(am.stderr * am.multiplicity, co.stderr * co.multiplicity)
        worst = max(worst, z)
    ok &= worst <= 3
    notes.append(f"multiplicity consistency worst z {worst:.2f}")
    report(8, "property suite", ok, "; ".join(notes))


if __name__ == "__main__":
    s = builtin_specs()
    failed = 0
    for fn in (
        test_criterion_1_jacobian_identity, test_criterion_2_real_line_volumes, test_criterion_3_real_plane_volume,
        test_criterion_4_fiber_counts, test_criterion_5_comparison_inequality, test_criterion_6_finiteness_classifier,
        test_criterion_7_limit_sets, test_criterion_8_properties,
    ):
        try:
            fn(s) if fn.__code__.co_argcount else fn()
        except AssertionError:
            failed += 1
    sys.exit(1 if failed else 0)
