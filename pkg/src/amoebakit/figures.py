"""Static PNG figures rendered with matplotlib (Agg backend, no display)."""
from __future__ import annotations

import math
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .limits import LimitSet  # noqa: E402
from .measure import FinitenessVerdict  # noqa: E402
from .raster import RasterGrid  # noqa: E402

OCCUPIED = "#183678"


def _finish(fig, path) -> Path:
    path = Path(path)
    fig.tight_layout()
    # fixed metadata keeps files reproducible
    fig.savefig(path, dpi=120, metadata={"Software": None})
    plt.close(fig)
    return path


def raster_figure(grid: RasterGrid, path, title: str = "", labels=("x1", "x2"), overlay=None) -> Path:
    """Occupancy image with optional overlay curves [(x, y, style), ...]."""
    fig, ax = plt.subplots(figsize=(5.5, 4.5))
    x0, x1, y0, y1 = grid.bounds
    cmap = matplotlib.colors.ListedColormap(["white", OCCUPIED])
    ax.imshow(grid.occupied.astype(np.uint8), origin="lower", extent=(x0, x1, y0, y1), aspect="auto", cmap=cmap, interpolation="nearest")
    for xs, ys, style in overlay or []:
        ax.plot(xs, ys, style, lw=1.0)
    ax.set_xlim(x0, x1)
    ax.set_ylim(y0, y1)
    ax.set_xlabel(labels[0])
    ax.set_ylabel(labels[1])
    if title:
        ax.set_title(title)
    return _finish(fig, path)


def cloud_figure(points: np.ndarray, path, title: str = "", labels=("x1", "x2", "x3"), limit: float = 12.0) -> Path:
    """3D scatter of Log-space points, clipped to a cube."""
    keep = np.all(np.abs(points) <= limit, axis=1)
    pts = points[keep]
    fig = plt.figure(figsize=(5.5, 5.0))
    ax = fig.add_subplot(projection="3d")
    ax.scatter(pts[:, 0], pts[:, 1], pts[:, 2], s=0.3, c=OCCUPIED, alpha=0.35, linewidths=0)
    ax.set_xlabel(labels[0])
    ax.set_ylabel(labels[1])
    ax.set_zlabel(labels[2])
    if title:
        ax.set_title(title)
    return _finish(fig, path)


def limit_set_figure(ls: LimitSet, path, title: str = "") -> Path:
    """Limit directions: unit circle for n = 2, first two coordinates otherwise."""
    fig, ax = plt.subplots(figsize=(4.5, 4.5))
    th = np.linspace(0, 2 * math.pi, 361)
    ax.plot(np.cos(th), np.sin(th), color="0.8", lw=0.8)
    for arc in ls.arcs:
        d = np.array([c.direction for c in arc])
        ax.plot(d[:, 0], d[:, 1], ".", ms=3, color="tab:orange")
    for p in ls.points:
        ax.plot(p.direction[0], p.direction[1], "o", ms=7, color=OCCUPIED)
    ax.set_aspect("equal")
    ax.set_xlim(-1.2, 1.2)
    ax.set_ylim(-1.2, 1.2)
    ax.set_xlabel("u1")
    ax.set_ylabel("u2")
    if title:
        ax.set_title(title)
    return _finish(fig, path)


def convergence_figure(verdicts: dict[str, FinitenessVerdict], path) -> Path:
    """Running integral against truncation radius, one line per case."""
    fig, ax = plt.subplots(figsize=(5.5, 4.0))
    for name, v in verdicts.items():
        r = [s.radius for s in v.stages]
        tot = [s.total for s in v.stages]
        ax.loglog(r, tot, "o-", label=f"{name} ({v.kind})", ms=3)
    ax.set_xlabel("truncation radius R")
    ax.set_ylabel("integral up to R")
    ax.legend(fontsize=7)
    return _finish(fig, path)
