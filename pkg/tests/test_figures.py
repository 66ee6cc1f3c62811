from __future__ import annotations

import numpy as np

from amoebakit import figures
from amoebakit.limits import log_limit_set
from amoebakit.measure import classify_finiteness
from amoebakit.raster import RasterGrid

PNG = b"\x89PNG"


def test_raster_figure_is_reproducible(tmp_path):
    g = RasterGrid.empty((-1, 1, -1, 1), 16, 16, "amoeba")
    g.add(np.array([[0.1, 0.2], [-0.5, 0.5]]))
    a = figures.raster_figure(g, tmp_path / "a.png", "t", overlay=[(np.array([-1, 1]), np.array([0, 0]), "r-")])
    b = figures.raster_figure(g, tmp_path / "b.png", "t", overlay=[(np.array([-1, 1]), np.array([0, 0]), "r-")])
    assert a.read_bytes()[:4] == PNG
    assert a.read_bytes() == b.read_bytes()


def test_cloud_limit_and_convergence_figures(tmp_path, specs):
    pts = np.random.default_rng(0).normal(size=(500, 3)) * 5
    assert figures.cloud_figure(pts, tmp_path / "c.png").read_bytes()[:4] == PNG
    ls = log_limit_set(specs["exp-curve"], samples=20_000)
    assert figures.limit_set_figure(ls, tmp_path / "l.png", "exp").read_bytes()[:4] == PNG
    v = classify_finiteness(specs["circle-curve"], (5, 10, 20, 40), 10_000, 0)
    assert figures.convergence_figure({"circle": v}, tmp_path / "f.png").read_bytes()[:4] == PNG
