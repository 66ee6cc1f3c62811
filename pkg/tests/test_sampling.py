from __future__ import annotations

import numpy as np
from hypothesis import given, settings
from hypothesis import strategies as st

from amoebakit.sampling import BATCH, BoxSampler, Moments, batch_sizes, draw_domain_points, stream
from amoebakit.variety import Rect


def test_stream_is_reproducible_and_keyed():
    a = stream(3, 1, 0).random(5)
    assert np.array_equal(a, stream(3, 1, 0).random(5))
    assert not np.array_equal(a, stream(3, 2, 0).random(5))
    assert not np.array_equal(a, stream(3, 1, 1).random(5))
    assert not np.array_equal(a, stream(4, 1, 0).random(5))


def test_batch_sizes_cover_samples():
    sizes = batch_sizes(3 * BATCH + 17)
    assert sum(sizes) == 3 * BATCH + 17
    assert max(sizes) <= BATCH


@settings(max_examples=100, deadline=None)
@given(st.lists(st.floats(-1e3, 1e3), min_size=2, max_size=60), st.integers(1, 59))
def test_moments_merge_matches_direct(values, cut):
    values = np.array(values)
    cut = min(cut, len(values) - 1)
    merged = Moments.of(values[:cut]).merge(Moments.of(values[cut:]))
    direct = Moments.of(values)
    assert merged.count == direct.count
    assert np.isclose(merged.mean, direct.mean, rtol=1e-9, atol=1e-9)
    assert np.isclose(merged.std, np.std(values, ddof=1), rtol=1e-7, atol=1e-7)


def test_box_sampler_pdf_integrates_to_one():
    box = BoxSampler([Rect((-2, 3), (-1, 1))], warp=1.0)
    gen = stream(0)
    # importance weights 1/pdf average to the box area
    t = box.draw(gen, 200_000)
    assert np.isclose(np.mean(1 / box.pdf(t)), 10.0, rtol=0.01)
    uni = BoxSampler([Rect((-2, 3), (-1, 1))])
    assert np.allclose(uni.pdf(uni.draw(gen, 10)), 0.1)


def test_box_sampler_stays_inside():
    box = BoxSampler([Rect((0, 1), (-3, -2)), Rect((-5, 5), (0, 0.5))], warp=0.5)
    t = box.draw(stream(1), 10_000)
    assert t.shape == (10_000, 2)
    assert np.all((t.real[:, 0] >= 0) & (t.real[:, 0] <= 1) & (t.imag[:, 0] >= -3) & (t.imag[:, 0] <= -2))


def test_domain_points_avoid_exclusions(specs):
    spec = specs["circle-curve"]
    t, _ = draw_domain_points(spec, 5000, 0)
    assert t.shape == (5000, 1)
    values, _ = spec.jets(t)
    assert np.all(values != 0)
    assert np.all(spec.admissible(t))
