from __future__ import annotations

import math
from fractions import Fraction

import pytest

from amoebakit.fibers import estimate_p_P
from amoebakit.planes import (
    AffinePlaneSpec,
    comparison_ratios,
    expected_counts,
    is_real,
    to_variety,
    volume_certificate,
)


def test_to_variety_line():
    spec = to_variety(AffinePlaneSpec(1, [1], [[1]], "line"))
    assert spec.k == 1 and spec.n == 2
    assert spec.jet([2]).value.tolist() == [2, 3]


def test_to_variety_plane_and_space_line(planes):
    plane = to_variety(planes["real-plane"])
    assert plane.n == 4
    assert plane.jet([1, 2]).value.tolist() == [1, 2, 4, 3]
    line = to_variety(planes["nonreal-line"])
    assert line.n == 3
    assert line.jet([1]).value.tolist() == [1, 2, 1j + 2]


def test_is_real_examples(planes):
    assert is_real(planes["real-line"])[0]
    assert not is_real(planes["nonreal-line"])[0]
    real, scalars = is_real(AffinePlaneSpec(1, [1, 3j], [[1], [6j]]))
    assert real
    assert len(scalars) == 2


def test_is_real_invariances(planes):
    p = planes["real-plane"]
    scaled = AffinePlaneSpec(2, [p.b[0], -2.5 * p.b[1]], [p.a[0], [-2.5 * v for v in p.a[1]]])
    assert is_real(scaled)[0]
    swapped = AffinePlaneSpec(2, p.b, [row[::-1] for row in p.a])
    assert is_real(swapped)[0]
    rotated = AffinePlaneSpec(1, [1, 1j], [[1], [2j]])
    assert is_real(rotated)[0]


def test_zero_row_rejected():
    with pytest.raises(ValueError):
        is_real(AffinePlaneSpec(1, [0], [[0]]))


def test_expected_counts(planes):
    assert expected_counts(planes["real-line"]) == (1, 2)
    assert expected_counts(planes["nonreal-line"]) == (1, 1)
    assert expected_counts(planes["real-plane"]) == (1, 4)
    # a non-real plane with n = 2k is not covered
    assert expected_counts(AffinePlaneSpec(2, [1, 2], [[1, 1j], [3, -1]]))[1] == "unknown"


def test_comparison_ratios(planes):
    assert comparison_ratios(planes["real-line"]) == (Fraction(1, 2), Fraction(1, 2))
    assert comparison_ratios(planes["real-plane"]) == (Fraction(1, 4), Fraction(1, 4))
    assert comparison_ratios(planes["nonreal-line"]) == (Fraction(1), Fraction(1))


def test_genericity(planes):
    assert planes["real-plane"].is_generic()
    assert not AffinePlaneSpec(2, [1, 2], [[1, 1], [2, 2]]).is_generic()


@pytest.mark.parametrize("name", ["real-line", "nonreal-line", "real-plane"])
def test_expected_counts_match_fibers(planes, name):
    plane = planes[name]
    arg_count, log_count = expected_counts(plane)
    est = estimate_p_P(to_variety(plane), probes=20, seed=3)
    assert est.probes_used == 20
    assert set(est.log_counts) == {log_count}
    assert set(est.arg_counts) == {arg_count}


def test_certificate_preconditions(planes):
    with pytest.raises(ValueError):
        volume_certificate(planes["nonreal-line"], 1000, 0)


def test_certificate_targets(planes):
    cert = volume_certificate(planes["real-line"], 70_000, 0)
    assert math.isclose(cert.amoeba_target, math.pi**2 / 2)
    assert math.isclose(cert.coamoeba_target, math.pi**2)
    assert cert.amoeba.multiplicity == 2 and cert.coamoeba.multiplicity == 1
    cert2 = volume_certificate(planes["real-plane"], 70_000, 0)
    assert math.isclose(cert2.amoeba_target, math.pi**4 / 4)
