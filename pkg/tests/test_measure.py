from __future__ import annotations

import math
from fractions import Fraction

import pytest

from amoebakit.gallery import CURVE_LADDER
from amoebakit.measure import (
    MissingMultiplicity,
    VolumeEstimate,
    classify_finiteness,
    comparison_certificate,
    integrate_pullback,
)
from amoebakit.planes import chart_sampler
from amoebakit.sampling import BoxSampler
from amoebakit.variety import Rect, VarietySpec


def _box(spec, radius, warp=1.0):
    return BoxSampler([r.clip(radius) for r in spec.domain], warp=warp)


def test_deterministic_and_thread_independent(specs, planes):
    spec = specs["real-line"]
    sampler = chart_sampler(planes["real-line"])
    a = integrate_pullback(spec, "amoeba", 300_000, 11, sampler)
    b = integrate_pullback(spec, "amoeba", 300_000, 11, sampler)
    c = integrate_pullback(spec, "amoeba", 300_000, 11, sampler, jobs=4)
    assert a.to_dict() == b.to_dict() == c.to_dict()
    d = integrate_pullback(spec, "amoeba", 300_000, 12, sampler)
    assert d.value != a.value


def test_report_fields(specs, planes):
    est = integrate_pullback(specs["real-line"], "coamoeba", 70_000, 0, chart_sampler(planes["real-line"]))
    d = est.to_dict()
    assert set(d) == {"value", "stderr", "samples", "multiplicity", "target", "box", "seed"}
    assert d["multiplicity"] == 1 and d["target"] == "coamoeba"


def test_stderr_scales_as_inverse_sqrt(specs, planes):
    spec, sampler = specs["real-line"], chart_sampler(planes["real-line"])
    small = integrate_pullback(spec, "amoeba", 250_000, 1, sampler)
    large = integrate_pullback(spec, "amoeba", 1_000_000, 2, sampler)
    assert abs(small.stderr / large.stderr - 2.0) <= 0.15 * 2.0


def test_amoeba_and_coamoeba_integrate_the_same_density(specs, planes):
    for name in ("real-line", "nonreal-line", "real-plane"):
        spec, sampler = specs[name], chart_sampler(planes[name])
        am = integrate_pullback(spec, "amoeba", 100_000, 4, sampler, multiplicity=1)
        co = integrate_pullback(spec, "coamoeba", 100_000, 4, sampler, multiplicity=1)
        assert abs(am.value - co.value) <= 3 * max(am.stderr, co.stderr)
        assert math.isclose(am.value, co.value, rel_tol=1e-9)


def test_rank_deficient_volume_is_zero():
    spec = VarietySpec.from_strings("flat", 1, ["t1", "2"], multiplicity_log=1)
    est = integrate_pullback(spec, "amoeba", 10_000, 0, BoxSampler([Rect((-3, 3), (-3, 3))]))
    assert est.value == 0.0 and est.stderr == 0.0


def test_missing_multiplicity(specs):
    spec = specs["circle-curve"]
    with pytest.raises(MissingMultiplicity):
        integrate_pullback(spec, "amoeba", 1000, 0, _box(spec, 5))


def test_empty_box_rejected():
    with pytest.raises(ValueError):
        BoxSampler([Rect((10, 9), (0, 1))])


def test_volume_dimension_precondition():
    spec = VarietySpec.from_strings("surface", 2, ["t1", "t2", "1+t1+t2"], multiplicity_log=1)
    with pytest.raises(ValueError):
        integrate_pullback(spec, "amoeba", 100, 0, BoxSampler([Rect((-1, 1), (-1, 1))] * 2))


def test_volume_monotone_in_box(specs):
    spec = specs["real-line"]
    vols = [integrate_pullback(spec, "amoeba", 200_000, 3, _box(spec, r)) for r in (2, 8, 40)]
    for a, b in zip(vols, vols[1:]):
        assert a.value <= b.value + 3 * math.hypot(a.stderr, b.stderr)


def test_classifier_exp_divergent(specs):
    v = classify_finiteness(specs["exp-curve"], CURVE_LADDER, 50_000, 0)
    assert v.kind == "divergent"
    assert v.growth_exponent > 0.5
    assert v.estimate is None
    assert [s.radius for s in v.stages] == list(CURVE_LADDER)


def test_classifier_circle_convergent(specs):
    v = classify_finiteness(specs["circle-curve"], CURVE_LADDER, 50_000, 0)
    assert v.kind == "convergent"
    assert v.estimate > 0


def test_classifier_needs_four_radii(specs):
    with pytest.raises(ValueError):
        classify_finiteness(specs["exp-curve"], (1, 2, 3), 100, 0)
    with pytest.raises(ValueError):
        classify_finiteness(specs["exp-curve"], (1, 3, 2, 4), 100, 0)


def _est(value, stderr):
    return VolumeEstimate(value, stderr, 1000, 1, "amoeba")


def test_comparison_certificate_tight_and_failing():
    half = Fraction(1, 2)
    ok = comparison_certificate(half, half, _est(4.93, 0.05), _est(9.87, 0.05))
    assert ok.passed
    bad = comparison_certificate(half, half, _est(6.0, 0.05), _est(9.87, 0.05))
    assert not bad.passed
    d = ok.to_dict()
    assert "passed" in d
