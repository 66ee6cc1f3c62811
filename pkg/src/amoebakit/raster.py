"""Pixel images of amoebas and coamoebas, and pixel-count areas.

Images are written as binary PGM (P5: occupied 0, empty 255) or PPM (P6,
two fixed colours); row 0 is the top of the image, i.e. the largest second
coordinate.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .expr import parse_number
from .sampling import BATCH, TWO_PI, batch_sizes, stream
from .variety import VarietySpec

MODES = ("amoeba", "coamoeba")
OCCUPIED_RGB = (24, 54, 120)
EMPTY_RGB = (255, 255, 255)


class RasterError(ValueError):
    pass


@dataclass
class RasterGrid:
    bounds: tuple[float, float, float, float]  # x0, x1, y0, y1
    width: int
    height: int
    mode: str
    hits: np.ndarray = field(repr=False)  # (height, width), row 0 = y0
    samples: int = 0
    landed: int = 0

    @classmethod
    def empty(cls, bounds, width: int, height: int, mode: str) -> "RasterGrid":
        x0, x1, y0, y1 = (float(b) for b in bounds)
        if not (x1 > x0 and y1 > y0):
            raise RasterError("bounds must satisfy x0 < x1 and y0 < y1")
        if width < 1 or height < 1:
            raise RasterError("resolution must be positive")
        if mode not in MODES:
            raise RasterError(f"mode must be one of {MODES}")
        return cls((x0, x1, y0, y1), int(width), int(height), mode, np.zeros((height, width), dtype=np.int64))

    @property
    def cell_area(self) -> float:
        x0, x1, y0, y1 = self.bounds
        return (x1 - x0) / self.width * (y1 - y0) / self.height

    @property
    def occupied(self) -> np.ndarray:
        return self.hits > 0

    @property
    def occupied_count(self) -> int:
        return int(self.occupied.sum())

    @property
    def occupied_area(self) -> float:
        return self.cell_area * self.occupied_count

    @property
    def boundary_count(self) -> int:
        """Occupied cells with an empty 4-neighbour (the frame counts as empty)."""
        occ = np.pad(self.occupied, 1)
        inner = occ[1:-1, 1:-1]
        nb = occ[:-2, 1:-1] & occ[2:, 1:-1] & occ[1:-1, :-2] & occ[1:-1, 2:]
        return int((inner & ~nb).sum())

    @property
    def area_estimate(self) -> float:
        """Occupied area with boundary cells counted at half weight."""
        return self.cell_area * (self.occupied_count - 0.5 * self.boundary_count)

    def add(self, xy: np.ndarray) -> int:
        """Bin points (m, 2); returns how many fell inside the bounds."""
        x0, x1, y0, y1 = self.bounds
        x, y = xy[:, 0], xy[:, 1]
        ok = np.isfinite(x) & np.isfinite(y) & (x >= x0) & (x < x1) & (y >= y0) & (y < y1)
        col = ((x[ok] - x0) / (x1 - x0) * self.width).astype(np.int64)
        row = ((y[ok] - y0) / (y1 - y0) * self.height).astype(np.int64)
        np.minimum(col, self.width - 1, out=col)
        np.minimum(row, self.height - 1, out=row)
        flat = np.bincount(row * self.width + col, minlength=self.width * self.height)
        self.hits += flat.reshape(self.height, self.width)
        n = int(ok.sum())
        self.landed += n
        return n

    def merge(self, other: "RasterGrid") -> None:
        self.hits += other.hits
        self.samples += other.samples
        self.landed += other.landed

    def image(self) -> np.ndarray:
        """Boolean occupancy with row 0 at the top."""
        return self.occupied[::-1]

    def to_pgm(self) -> bytes:
        pix = np.where(self.image(), 0, 255).astype(np.uint8)
        return f"P5\n{self.width} {self.height}\n255\n".encode("ascii") + pix.tobytes()

    def to_ppm(self) -> bytes:
        img = self.image()
        rgb = np.empty((self.height, self.width, 3), dtype=np.uint8)
        rgb[img] = OCCUPIED_RGB
        rgb[~img] = EMPTY_RGB
        return f"P6\n{self.width} {self.height}\n255\n".encode("ascii") + rgb.tobytes()

    def write(self, path) -> Path:
        path = Path(path)
        data = self.to_ppm() if path.suffix.lower() == ".ppm" else self.to_pgm()
        path.write_bytes(data)
        return path

    def summary(self) -> dict:
        return {
            "mode": self.mode,
            "bounds": list(self.bounds),
            "resolution": [self.width, self.height],
            "samples": self.samples,
            "landed": self.landed,
            "cell_area": self.cell_area,
            "occupied_cells": self.occupied_count,
            "boundary_cells": self.boundary_count,
            "occupied_area": self.occupied_area,
            "area_estimate": self.area_estimate,
        }


def read_pnm(data: bytes) -> tuple[str, int, int, np.ndarray]:
    """Parse a binary P5/P6 file written by this module."""
    magic, dims, maxval, rest = data.split(b"\n", 3)
    w, h = (int(v) for v in dims.split())
    if int(maxval) != 255:
        raise ValueError("expected maxval 255")
    ch = 3 if magic == b"P6" else 1
    pix = np.frombuffer(rest, dtype=np.uint8, count=w * h * ch)
    return magic.decode(), w, h, pix.reshape(h, w, ch) if ch == 3 else pix.reshape(h, w)


# --------------------------------------------------------------------------
# Pushforward rasters of parametrized varieties
# --------------------------------------------------------------------------


@dataclass
class LogPolarCharts:
    """Equal mixture of ``t = c + exp(s + i phi)`` around the origin and each
    excluded point, with s uniform in ``log_r``.  Only coverage matters for
    rasters, so no pdf is needed."""

    centers: list[complex]
    log_r: tuple[float, float]

    def draw(self, gen: np.random.Generator, size: int, k: int) -> np.ndarray:
        c = np.asarray(self.centers)
        pick = gen.integers(0, len(c), (size, k))
        u = gen.random((size, 2 * k))
        s = self.log_r[0] + u[:, :k] * (self.log_r[1] - self.log_r[0])
        return c[pick] + np.exp(s + 1j * TWO_PI * u[:, k:])


def default_charts(spec: VarietySpec, bounds, mode: str) -> LogPolarCharts:
    centers = [0j] + [complex(e.center) for e in spec.exclusions if complex(e.center) != 0]
    if mode == "amoeba":
        reach = max(abs(b) for b in bounds) + 2.0
    else:
        reach = 6.0
    return LogPolarCharts(sorted(set(centers), key=lambda z: (z.real, z.imag)), (-reach, reach))


def project(values: np.ndarray, mode: str, pair: tuple[int, int]) -> np.ndarray:
    z = values[:, list(pair)]
    with np.errstate(divide="ignore", invalid="ignore"):
        if mode == "amoeba":
            return np.log(np.abs(z))
        return np.mod(np.angle(z), TWO_PI)


def raster_points(grid: RasterGrid, spec: VarietySpec, t: np.ndarray, pair=(0, 1)) -> int:
    """Push parameter points through Log or Arg and bin them; returns points landed."""
    ok = spec.admissible(t)
    if not ok.any():
        return 0
    values, _ = spec.jets(t[ok])
    finite = np.all(np.isfinite(values), axis=1) & np.all(values != 0, axis=1)
    return grid.add(project(values[finite], grid.mode, pair))


def raster_pushforward(
    spec: VarietySpec,
    mode: str,
    bounds,
    resolution: tuple[int, int],
    samples: int,
    seed: int,
    pair: tuple[int, int] = (0, 1),
    charts: LogPolarCharts | None = None,
    jobs: int = 1,
    batch: int = BATCH,
) -> RasterGrid:
    """Image of the variety under Log or Arg, projected to coordinates ``pair``."""
    if samples <= 0:
        raise RasterError("sample budget must be positive")
    if mode == "coamoeba" and bounds is None:
        bounds = (0.0, TWO_PI, 0.0, TWO_PI)
    if len(pair) != 2 or not all(0 <= p < spec.n for p in pair) or pair[0] == pair[1]:
        raise RasterError(f"coordinate pair {pair} invalid for n={spec.n}")
    width, height = resolution
    charts = charts or default_charts(spec, bounds, mode)
    sizes = batch_sizes(samples, batch)

    def work(i):
        g = RasterGrid.empty(bounds, width, height, mode)
        gen = stream(seed, 300, i)
        with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
            t = charts.draw(gen, sizes[i], spec.k)
            raster_points(g, spec, t, pair)
        g.samples = sizes[i]
        return g

    grid = RasterGrid.empty(bounds, width, height, mode)
    if jobs > 1 and len(sizes) > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            parts = pool.map(work, range(len(sizes)))
            for g in parts:
                grid.merge(g)
    else:
        for i in range(len(sizes)):
            grid.merge(work(i))
    if grid.landed == 0:
        raise RasterError("no sample landed inside the bounds")
    return grid


# --------------------------------------------------------------------------
# Bivariate polynomial hypersurfaces
# --------------------------------------------------------------------------


def parse_poly(coeffs) -> np.ndarray:
    """Coefficient matrix c[a, b] of x^a y^b from a nested list or {"a,b": c} mapping.

    Values may be numbers, [re, im] pairs or strings like "2-3i".
    """
    def num(v):
        if isinstance(v, (list, tuple)):
            return complex(v[0], v[1])
        if isinstance(v, str):
            return parse_number(v)
        return complex(v)

    if isinstance(coeffs, dict):
        items = {}
        for key, v in coeffs.items():
            a, b = (int(s) for s in str(key).split(","))
            if a < 0 or b < 0:
                raise ValueError("exponents must be nonnegative")
            items[(a, b)] = num(v)
        A = max(a for a, _ in items) + 1
        B = max(b for _, b in items) + 1
        c = np.zeros((A, B), dtype=complex)
        for (a, b), v in items.items():
            c[a, b] = v
        return c
    return np.array([[num(v) for v in row] for row in coeffs], dtype=complex)


def column_coefficients(c: np.ndarray, x: np.ndarray) -> np.ndarray:
    """Coefficients in y (ascending) of poly(x, y) for each x; shape (len(x), B)."""
    powers = x[:, None] ** np.arange(c.shape[0])[None, :]
    return powers @ c


def aberth(coeffs: np.ndarray, max_iter: int = 200, tol: float = 1e-13) -> tuple[np.ndarray, np.ndarray]:
    """All roots of many polynomials of one degree by Aberth-Ehrlich iteration.

    ``coeffs`` is (m, d+1), ascending, with nonzero leading coefficient.
    Returns roots (m, d) and a convergence mask (m,).
    """
    m, d1 = coeffs.shape
    d = d1 - 1
    if d < 1:
        return np.zeros((m, 0), dtype=complex), np.ones(m, dtype=bool)
    mon = coeffs / coeffs[:, -1:]
    if d == 1:
        return -mon[:, :1], np.ones(m, dtype=bool)
    # Cauchy bound radius, starts on a rotated circle
    radius = 1.0 + np.max(np.abs(mon[:, :-1]), axis=1)
    ang = TWO_PI * np.arange(d) / d + 0.4
    z = 0.5 * radius[:, None] * np.exp(1j * ang)[None, :]
    der = mon[:, 1:] * np.arange(1, d1)[None, :]
    active = np.ones(m, dtype=bool)
    for _ in range(max_iter):
        if not active.any():
            break
        za = z[active]
        p = np.zeros_like(za)
        for j in range(d, -1, -1):
            p = p * za + mon[active, j : j + 1]
        dp = np.zeros_like(za)
        for j in range(d - 1, -1, -1):
            dp = dp * za + der[active, j : j + 1]
        with np.errstate(divide="ignore", invalid="ignore"):
            ratio = p / dp
            diff = za[:, :, None] - za[:, None, :]
            idx = np.arange(d)
            diff[:, idx, idx] = np.inf
            s = np.sum(1.0 / diff, axis=2)
            w = ratio / (1.0 - ratio * s)
        w = np.where(np.isfinite(w), w, 0.0)
        za = za - w
        z[active] = za
        small = np.max(np.abs(w) / np.maximum(np.abs(za), 1e-300), axis=1) < tol
        done = np.flatnonzero(active)[small]
        active[done] = False
    finite = np.all(np.isfinite(z), axis=1)
    return z, ~active & finite


def hypersurface_roots(c: np.ndarray, x: complex, zero_tol: float = 1e-13) -> np.ndarray:
    """Nonzero roots y of poly(x, y) at one x; y = 0 roots are dropped exactly."""
    q = column_coefficients(np.asarray(c, dtype=complex), np.array([complex(x)]))[0]
    scale = np.max(np.abs(q)) if q.size else 0.0
    if scale == 0:
        return np.zeros(0, dtype=complex)
    q = np.where(np.abs(q) <= zero_tol * scale, 0, q)
    nz = np.flatnonzero(q)
    q = q[nz[0] : nz[-1] + 1]
    roots, ok = aberth(q[None, :])
    return roots[0] if ok[0] else np.zeros(0, dtype=complex)


@dataclass
class HypersurfaceRaster:
    grid: RasterGrid
    columns: int
    skipped: int


def raster_hypersurface(
    c,
    bounds,
    resolution: tuple[int, int],
    columns: int,
    seed: int,
    zero_tol: float = 1e-13,
) -> HypersurfaceRaster:
    """Amoeba of {poly(x, y) = 0} in the (log|x|, log|y|) plane.

    Each column draws x = exp(rho + i theta) with rho uniform over the
    horizontal bounds and theta uniform, solves for every y, and plots
    (rho, log|y|) for the nonzero roots.  Columns where the solver fails
    are skipped and counted.
    """
    c = parse_poly(c) if not isinstance(c, np.ndarray) else c.astype(complex)
    if c.shape[1] < 2 or not np.any(c[:, 1:]):
        raise RasterError("polynomial must involve y")
    grid = RasterGrid.empty(bounds, resolution[0], resolution[1], "amoeba")
    x0, x1 = grid.bounds[0], grid.bounds[1]
    skipped = 0
    for i, size in enumerate(batch_sizes(columns)):
        gen = stream(seed, 400, i)
        rho = gen.uniform(x0, x1, size)
        theta = gen.uniform(0.0, TWO_PI, size)
        q = column_coefficients(c, np.exp(rho + 1j * theta))
        scale = np.max(np.abs(q), axis=1, keepdims=True)
        q = np.where(np.abs(q) <= zero_tol * scale, 0, q)
        nonzero = q != 0
        has = nonzero.any(axis=1)
        lo = np.where(has, np.argmax(nonzero, axis=1), 0)
        hi = np.where(has, q.shape[1] - 1 - np.argmax(nonzero[:, ::-1], axis=1), 0)
        # group columns by their effective (lowest, highest) nonzero exponents
        for key in set(zip(lo[has].tolist(), hi[has].tolist())):
            sel = has & (lo == key[0]) & (hi == key[1])
            sub = q[sel, key[0] : key[1] + 1]
            roots, ok = aberth(sub)
            skipped += int((~ok).sum())
            r = roots[ok]
            if r.shape[1] == 0:
                continue
            xs = np.repeat(rho[sel][ok], r.shape[1])
            with np.errstate(divide="ignore"):
                ys = np.log(np.abs(r)).reshape(-1)
            grid.add(np.stack([xs, ys], axis=1))
        grid.samples += size
    return HypersurfaceRaster(grid, columns, skipped)
