"""Logarithmic limit sets from far-field directions, rational slopes, torus closures.

Far parameter regions are reached through charts: ends of the domain at
infinity (log-polar, or log-scaled half strips when one side of the domain
is bounded) and punctured discs around every excluded point.  Directions
``Log(z)/|Log(z)|`` of far samples are clustered; clusters chained together
at the cluster tolerance form components, and a component is an arc when it
keeps a wide angular extent among the outermost samples.  Finite offsets
(``Log = R d + c``) make point components drift by about ``|c|/R``, which is
why the arc test only looks at samples past the outermost radius.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np
from scipy.spatial import cKDTree

from .sampling import TWO_PI, stream
from .variety import Rect, VarietySpec

DEFAULT_TOL = math.radians(1.5)
DEFAULT_RADII = (10.0, 20.0, 40.0)
REFINE_CAP = 60_000
REFINE_DEPTH = 40


class NoFarSamples(ValueError):
    pass


# --------------------------------------------------------------------------
# Rational slopes and torus closures
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class Rationality:
    kind: str  # rational, irrational-within-bounds
    vector: tuple[int, ...] | None
    angle: float

    @property
    def rational(self) -> bool:
        return self.kind == "rational"

    def __str__(self) -> str:
        if self.vector is None:
            return self.kind
        return "rational(" + " ".join(str(v) for v in self.vector) + ")"


def convergents(x: float, max_den: int) -> list[Fraction]:
    """Continued-fraction convergents of x with denominator at most max_den."""
    out: list[Fraction] = []
    h0, h1 = 1, math.floor(x)
    k0, k1 = 0, 1
    out.append(Fraction(h1, k1))
    frac = x - math.floor(x)
    for _ in range(64):
        if frac < 1e-15:
            break
        x = 1.0 / frac
        a = math.floor(x)
        frac = x - a
        h0, h1 = h1, a * h1 + h0
        k0, k1 = k1, a * k1 + k0
        if k1 > max_den:
            break
        out.append(Fraction(h1, k1))
    return out


def angle_between(u: np.ndarray, v: np.ndarray) -> float:
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    u = u / np.linalg.norm(u)
    v = v / np.linalg.norm(v)
    c = float(u @ v)
    s = float(np.linalg.norm(v - c * u))
    return math.atan2(s, c)


def rational_slope(direction, max_den: int = 50, tol: float = 1e-4) -> Rationality:
    """Smallest primitive integer vector within ``tol`` radians of ``direction``.

    Entries relative to the largest coordinate are expanded in continued
    fractions; common denominators built from the convergent denominators
    (at most ``max_den``) are tried in increasing order.
    """
    d = np.asarray(direction, dtype=float)
    if not np.any(d):
        raise ValueError("zero direction")
    p = int(np.argmax(np.abs(d)))
    ratios = d / d[p]
    dens = {1}
    for r in ratios:
        for c in convergents(float(r), max_den):
            dens |= {math.lcm(q, c.denominator) for q in list(dens)}
            dens = {q for q in dens if q <= max_den}
    sign = 1.0 if d[p] > 0 else -1.0
    best_angle = math.inf
    for q in sorted(dens):
        v = np.rint(ratios * q) * sign
        iv = [int(x) for x in v]
        g = 0
        for x in iv:
            g = math.gcd(g, x)
        iv = [x // g for x in iv]
        a = angle_between(d, np.array(iv, dtype=float))
        best_angle = min(best_angle, a)
        if a <= tol:
            return Rationality("rational", tuple(iv), a)
    return Rationality("irrational-within-bounds", None, best_angle)


def integer_relations(u, bound: int = 50, rel_tol: float = 1e-9) -> np.ndarray:
    """All integer vectors c, |c_i| <= bound, c != 0, with c.u ~ 0 (n <= 4).

    The coordinate of largest modulus is solved for; the others are
    enumerated exhaustively.
    """
    u = np.asarray(u, dtype=float)
    n = u.size
    if n > 4:
        raise ValueError("relation search supports n <= 4")
    if not np.any(u):
        raise ValueError("zero vector")
    p = int(np.argmax(np.abs(u)))
    others = [i for i in range(n) if i != p]
    unorm = float(np.linalg.norm(u))
    rng = np.arange(-bound, bound + 1)
    found = []
    if not others:
        return np.zeros((0, n), dtype=int)
    grids = np.meshgrid(*([rng] * len(others)), indexing="ij")
    C = np.stack([g.reshape(-1) for g in grids], axis=1)
    partial = C @ u[others]
    cp = np.rint(-partial / u[p])
    full = np.zeros((C.shape[0], n))
    full[:, others] = C
    full[:, p] = cp
    resid = np.abs(full @ u)
    norms = np.linalg.norm(full, axis=1)
    ok = (np.abs(cp) <= bound) & (norms > 0) & (resid <= rel_tol * norms * unorm)
    found = full[ok].astype(int)
    return found


def torus_closure_dim(direction, bound: int = 50) -> int:
    """Dimension of the closure of the image of R*direction in the n-torus."""
    u = np.asarray(direction, dtype=float)
    rel = integer_relations(u, bound)
    rank = int(np.linalg.matrix_rank(rel.astype(float))) if rel.size else 0
    return u.size - rank


# --------------------------------------------------------------------------
# Charts reaching the far field
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class Chart:
    """One-variable chart; coordinates (a, b) are uniform on ``box``.

    kinds: ``box`` t = a + ib; ``polar`` t = exp(a + ib);
    ``up``/``down`` t = a +- i exp(b); ``right``/``left`` t = +-exp(a) + ib;
    ``puncture`` t = center + exp(-a + ib).
    """

    kind: str
    box: tuple[tuple[float, float], tuple[float, float]]
    center: complex = 0j

    def to_t(self, c: np.ndarray) -> np.ndarray:
        a, b = c[..., 0], c[..., 1]
        with np.errstate(over="ignore", invalid="ignore"):
            if self.kind == "box":
                return a + 1j * b
            if self.kind == "polar":
                return np.exp(a) * np.exp(1j * b)
            if self.kind == "up":
                return a + 1j * np.exp(b)
            if self.kind == "down":
                return a - 1j * np.exp(b)
            if self.kind == "right":
                return np.exp(a) + 1j * b
            if self.kind == "left":
                return -np.exp(a) + 1j * b
            if self.kind == "puncture":
                return self.center + np.exp(-a) * np.exp(1j * b)
        raise ValueError(f"unknown chart {self.kind}")

    def draw(self, gen: np.random.Generator, size: int) -> np.ndarray:
        (a0, a1), (b0, b1) = self.box
        u = gen.random((size, 2))
        return np.stack([a0 + u[:, 0] * (a1 - a0), b0 + u[:, 1] * (b1 - b0)], axis=1)

    def scale(self) -> np.ndarray:
        (a0, a1), (b0, b1) = self.box
        return np.array([a1 - a0, b1 - b0])


def variable_charts(spec: VarietySpec, j: int, extent: float, box_radius: float = 10.0) -> list[Chart]:
    """Charts covering the far regions of variable j (0-based)."""
    rect: Rect = spec.domain[j]
    clipped = rect.clip(box_radius)
    charts = [Chart("box", (clipped.re, clipped.im))]
    re_inf = [math.isinf(v) for v in rect.re]
    im_inf = [math.isinf(v) for v in rect.im]
    if all(re_inf) and all(im_inf):
        charts.append(Chart("polar", ((0.0, extent), (0.0, TWO_PI))))
    else:
        if im_inf[1] and all(math.isfinite(v) for v in rect.re):
            charts.append(Chart("up", (rect.re, (0.0, extent))))
        if im_inf[0] and all(math.isfinite(v) for v in rect.re):
            charts.append(Chart("down", (rect.re, (0.0, extent))))
        if re_inf[1] and all(math.isfinite(v) for v in rect.im):
            charts.append(Chart("right", ((0.0, extent), rect.im)))
        if re_inf[0] and all(math.isfinite(v) for v in rect.im):
            charts.append(Chart("left", ((0.0, extent), rect.im)))
        if any(re_inf) and any(im_inf) and not (all(re_inf) and all(im_inf)):
            charts.append(Chart("polar", ((0.0, extent), (0.0, TWO_PI))))
    centers = [complex(e.center) for e in spec.exclusions if e.var == j + 1]
    for c in centers:
        gaps = [abs(c - o) for o in centers if o != c]
        rmax = min([1.0] + [0.5 * g for g in gaps])
        charts.append(Chart("puncture", ((-math.log(rmax), extent), (0.0, TWO_PI)), c))
    return charts


@dataclass
class FarSamples:
    chart: np.ndarray  # (m,) combined chart label
    coords: np.ndarray  # (m, 2k)
    logs: np.ndarray  # (m, n)

    @property
    def norms(self) -> np.ndarray:
        return np.linalg.norm(self.logs, axis=1)

    @property
    def directions(self) -> np.ndarray:
        return self.logs / self.norms[:, None]


def _evaluate(spec: VarietySpec, charts: list[list[Chart]], labels: np.ndarray, coords: np.ndarray):
    k = spec.k
    t = np.empty((coords.shape[0], k), dtype=complex)
    sizes = [len(c) for c in charts]
    lab = labels.copy()
    for j in range(k):
        idx = lab % sizes[j]
        lab //= sizes[j]
        for ci, ch in enumerate(charts[j]):
            sel = idx == ci
            if sel.any():
                t[sel, j] = ch.to_t(coords[sel][:, 2 * j : 2 * j + 2])
    ok = np.all(np.isfinite(t), axis=1)
    ok[ok] = spec.admissible(t[ok])
    logs = np.full((t.shape[0], spec.n), np.nan)
    if ok.any():
        values, _ = spec.jets(t[ok])
        with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
            logs[ok] = np.log(np.abs(values))
    good = np.all(np.isfinite(logs), axis=1)
    return logs, good


def _chart_scale(charts, labels):
    k = len(charts)
    sizes = [len(c) for c in charts]
    lab = labels.copy()
    out = np.empty((labels.size, 2 * k))
    for j in range(k):
        idx = lab % sizes[j]
        lab //= sizes[j]
        for ci, ch in enumerate(charts[j]):
            sel = idx == ci
            out[sel, 2 * j : 2 * j + 2] = ch.scale()
    return out


def sample_far(
    spec: VarietySpec,
    samples: int,
    seed: int,
    far: float,
    extent: float,
    gap: float,
    refine: bool = True,
) -> tuple[FarSamples, int]:
    """Far samples from the chart mixture, densified by bisection in chart coordinates.

    Returns the samples and the number of points added by refinement.
    """
    charts = [variable_charts(spec, j, extent) for j in range(spec.k)]
    sizes = [len(c) for c in charts]
    total = int(np.prod(sizes))
    gen = stream(seed, 900)
    labels = gen.integers(0, total, samples)
    coords = np.empty((samples, 2 * spec.k))
    lab = labels.copy()
    for j in range(spec.k):
        idx = lab % sizes[j]
        lab //= sizes[j]
        for ci, ch in enumerate(charts[j]):
            sel = idx == ci
            coords[sel, 2 * j : 2 * j + 2] = ch.draw(gen, int(sel.sum()))
    logs, good = _evaluate(spec, charts, labels, coords)
    keep = good & (np.linalg.norm(np.where(good[:, None], logs, 0.0), axis=1) >= far)
    fs = FarSamples(labels[keep], coords[keep], logs[keep])
    added = 0
    if refine and fs.logs.shape[0] > 1:
        fs, added = _refine(spec, charts, fs, far, gap)
    return fs, added


def _refine(spec, charts, fs: FarSamples, far: float, gap: float):
    dirs = fs.directions
    pa, pb = [], []
    for lab in np.unique(fs.chart):
        idx = np.flatnonzero(fs.chart == lab)
        if idx.size < 2:
            continue
        scaled = fs.coords[idx] / _chart_scale(charts, fs.chart[idx[:1]])[0]
        tree = cKDTree(scaled)
        kk = min(4, idx.size)
        _, nb = tree.query(scaled, k=kk)
        for col in range(1, kk):
            a, b = idx, idx[nb[:, col]]
            cosang = np.clip(np.sum(dirs[a] * dirs[b], axis=1), -1, 1)
            wide = np.arccos(cosang) > gap
            pa.append(a[wide])
            pb.append(b[wide])
    if not pa:
        return fs, 0
    a = np.concatenate(pa)
    b = np.concatenate(pb)
    key = np.unique(np.sort(np.stack([a, b], axis=1), axis=1), axis=0)
    A_c, B_c = fs.coords[key[:, 0]], fs.coords[key[:, 1]]
    A_d, B_d = dirs[key[:, 0]], dirs[key[:, 1]]
    labels = fs.chart[key[:, 0]]
    new_c, new_l, new_lab = [], [], []
    added = 0
    for _ in range(REFINE_DEPTH):
        if A_c.shape[0] == 0 or added >= REFINE_CAP:
            break
        M = 0.5 * (A_c + B_c)
        logs, good = _evaluate(spec, charts, labels, M)
        norms = np.linalg.norm(np.where(good[:, None], logs, 0.0), axis=1)
        ok = good & (norms >= far)
        if not ok.any():
            break
        Md = np.zeros_like(logs)
        Md[ok] = logs[ok] / norms[ok, None]
        new_c.append(M[ok])
        new_l.append(logs[ok])
        new_lab.append(labels[ok])
        added += int(ok.sum())
        left = ok & (np.arccos(np.clip(np.sum(A_d * Md, axis=1), -1, 1)) > gap)
        right = ok & (np.arccos(np.clip(np.sum(Md * B_d, axis=1), -1, 1)) > gap)
        A_c = np.concatenate([A_c[left], M[right]])
        B_c = np.concatenate([M[left], B_c[right]])
        A_d = np.concatenate([A_d[left], Md[right]])
        B_d = np.concatenate([Md[left], B_d[right]])
        labels = np.concatenate([labels[left], labels[right]])
    if not new_c:
        return fs, 0
    out = FarSamples(
        np.concatenate([fs.chart] + new_lab),
        np.concatenate([fs.coords] + new_c),
        np.concatenate([fs.logs] + new_l),
    )
    return out, added


# --------------------------------------------------------------------------
# Clustering
# --------------------------------------------------------------------------


@dataclass
class DirectionCluster:
    direction: list[float]
    weight: int
    spread: float
    rationality: Rationality
    arc_id: int | None = None

    @property
    def is_arc(self) -> bool:
        return self.arc_id is not None


@dataclass
class LimitSet:
    clusters: list[DirectionCluster]
    points: list[DirectionCluster]
    arcs: list[list[DirectionCluster]]
    far_samples: int
    refined: int
    tolerance: float
    radii: list[float] = field(default_factory=list)

    def to_rows(self) -> list[dict]:
        rows = []
        for c in self.clusters:
            rows.append(
                {
                    "direction": c.direction,
                    "weight": c.weight,
                    "spread": c.spread,
                    "rationality": str(c.rationality),
                    "arc_id": "" if c.arc_id is None else c.arc_id,
                }
            )
        return rows

    def summary(self) -> dict:
        return {
            "points": len(self.points),
            "arcs": len(self.arcs),
            "point_directions": [p.direction for p in self.points],
            "all_rational": all(p.rationality.rational for p in self.points),
            "far_samples": self.far_samples,
            "refined": self.refined,
        }


def _leader_clusters(dirs: np.ndarray, radius: float) -> np.ndarray:
    """Greedy leader clustering; returns a label per direction."""
    labels = np.full(dirs.shape[0], -1)
    cos_r = math.cos(radius)
    cur = 0
    while True:
        free = np.flatnonzero(labels < 0)
        if free.size == 0:
            break
        lead = dirs[free[0]]
        near = free[dirs[free] @ lead >= cos_r]
        labels[near] = cur
        cur += 1
    return labels


def _components(dirs: np.ndarray, labels: np.ndarray, link: float) -> np.ndarray:
    """Union clusters having member pairs closer than ``link`` radians."""
    ncl = int(labels.max()) + 1
    parent = list(range(ncl))

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    # snap to a fine grid so dense clusters contribute few representatives
    cells = np.rint(dirs / (link / 8)).astype(np.int64)
    _, rep, inv = np.unique(cells, axis=0, return_index=True, return_inverse=True)
    inv = inv.reshape(-1)
    edges = [np.stack([labels, labels[rep][inv]], axis=1)]
    tree = cKDTree(dirs[rep])
    chord = 2 * math.sin(link / 2)
    pairs = tree.query_pairs(chord, output_type="ndarray")
    if pairs.size:
        edges.append(labels[rep][pairs])
    e = np.concatenate(edges)
    e = np.unique(e[e[:, 0] != e[:, 1]], axis=0)
    for x, y in e:
        rx, ry = find(int(x)), find(int(y))
        if rx != ry:
            parent[rx] = ry
    roots = np.array([find(i) for i in range(ncl)])
    _, comp = np.unique(roots, return_inverse=True)
    return comp[labels]


def angular_diameter(dirs: np.ndarray) -> float:
    """Two-sweep farthest-point estimate of the largest pairwise angle."""
    if dirs.shape[0] < 2:
        return 0.0
    p1 = dirs[np.argmin(dirs @ dirs[0])]
    p2 = dirs[np.argmin(dirs @ p1)]
    return float(np.arccos(np.clip(p1 @ p2, -1.0, 1.0)))


def _point_direction(logs: np.ndarray) -> np.ndarray:
    """Limit direction of a point component, removing the finite offset.

    Fits Log = r d + c over the members (r = |Log|) when the norms span a
    useful range; otherwise uses the normalized mean direction.
    """
    r = np.linalg.norm(logs, axis=1)
    dirs = logs / r[:, None]
    mean = dirs.mean(axis=0)
    mean /= np.linalg.norm(mean)
    if logs.shape[0] >= 8 and r.max() >= 1.2 * r.min():
        X = np.stack([r, np.ones_like(r)], axis=1)
        coef, *_ = np.linalg.lstsq(X, logs, rcond=None)
        d = coef[0]
        if np.linalg.norm(d) > 0.5:
            d = d / np.linalg.norm(d)
            if d @ mean > math.cos(math.radians(10)):
                return d
    return mean


def log_limit_set(
    spec: VarietySpec,
    radii: Sequence[float] = DEFAULT_RADII,
    samples: int = 200_000,
    tol: float = DEFAULT_TOL,
    seed: int = 0,
    rational_tol: float = 1e-3,
    max_den: int = 50,
) -> LimitSet:
    """Directions of the amoeba at infinity, grouped into points and arcs.

    ``radii[0]`` is the far-sample threshold on |Log|; charts reach
    |Log| ~ 1.5 ``radii[-1]``, and a component is an arc when its members
    beyond ``radii[-1]`` span more than three tolerances.
    """
    radii = [float(r) for r in radii]
    if len(radii) < 2 or any(b <= a for a, b in zip(radii, radii[1:])):
        raise ValueError("radius ladder must be increasing with at least two radii")
    extent = 1.5 * radii[-1]
    fs, added = sample_far(spec, samples, seed, radii[0], extent, gap=tol / 2)
    m = fs.logs.shape[0]
    if m == 0:
        raise NoFarSamples("no sample reached the far field; enlarge the domain or the radii")
    dirs = fs.directions
    norms = fs.norms
    labels = _leader_clusters(dirs, tol / 2)
    comp = _components(dirs, labels, tol)
    clusters: list[DirectionCluster] = []
    points: list[DirectionCluster] = []
    arcs: list[list[DirectionCluster]] = []
    order = sorted(np.unique(comp), key=lambda c: tuple(-dirs[comp == c].mean(axis=0)))
    for c in order:
        members = comp == c
        outer = members & (norms >= radii[-1])
        ext = angular_diameter(dirs[outer]) if outer.sum() > 1 else 0.0
        if ext > 3 * tol:
            arc: list[DirectionCluster] = []
            for lab in np.unique(labels[members]):
                sel = labels == lab
                d = dirs[sel].mean(axis=0)
                d /= np.linalg.norm(d)
                spread = float(np.max(np.arccos(np.clip(dirs[sel] @ d, -1, 1))))
                dc = DirectionCluster(d.tolist(), int(sel.sum()), spread, rational_slope(d, max_den, rational_tol), len(arcs))
                arc.append(dc)
            arc.sort(key=lambda x: math.atan2(x.direction[1], x.direction[0]))
            arcs.append(arc)
            clusters.extend(arc)
        else:
            d = _point_direction(fs.logs[members])
            ref = dirs[outer] if outer.sum() > 0 else dirs[members]
            spread = float(np.max(np.arccos(np.clip(ref @ d, -1, 1))))
            dc = DirectionCluster(d.tolist(), int(members.sum()), spread, rational_slope(d, max_den, rational_tol))
            points.append(dc)
            clusters.append(dc)
    return LimitSet(clusters, points, arcs, m, added, tol, radii)
