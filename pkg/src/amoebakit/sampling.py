"""Reproducible parameter sampling for Monte Carlo integration.

Every batch draws from its own Philox stream keyed by ``(seed, stream)``
with the batch index in the counter, so a batch's samples depend only on
``(seed, stream, batch index)``.  Serial and threaded runs therefore agree
bit for bit as long as the batch size is fixed.

Samplers expose ``draw(gen, size)`` and ``pdf(t)``; the pdf is the
proposal density with respect to Lebesgue measure on C^k = R^{2k}, and the
Monte Carlo weight of a point is ``1 / pdf(t)``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .variety import Rect, VarietySpec

TWO_PI = 2.0 * math.pi
BATCH = 65_536


def stream(seed: int, stream_id: int = 0, batch: int = 0) -> np.random.Generator:
    key = [int(seed) & 0xFFFFFFFFFFFFFFFF, int(stream_id) & 0xFFFFFFFFFFFFFFFF]
    return np.random.Generator(np.random.Philox(key=key, counter=[0, 0, 0, int(batch)]))


def batch_sizes(samples: int, batch: int = BATCH) -> list[int]:
    full, rest = divmod(samples, batch)
    return [batch] * full + ([rest] if rest else [])


# --------------------------------------------------------------------------
# Samplers
# --------------------------------------------------------------------------


def _warp_interval(lo: float, hi: float, c: float | None):
    if c is None:
        return lo, hi
    return math.asinh(lo / c), math.asinh(hi / c)


@dataclass
class BoxSampler:
    """Uniform on a product of rectangles, optionally in sinh-warped coordinates.

    With ``warp=c`` each real coordinate is ``x = c sinh(v)`` with ``v``
    uniform, which keeps the box exact while spending samples
    logarithmically in the distance from the origin.
    """

    rects: list[Rect]
    warp: float | None = None

    def __post_init__(self):
        for r in self.rects:
            if not r.bounded:
                raise ValueError("box sampler needs a bounded box")
            if r.empty:
                raise ValueError("truncation box is empty")

    @property
    def k(self) -> int:
        return len(self.rects)

    def _intervals(self):
        out = []
        for r in self.rects:
            out.append(_warp_interval(*r.re, self.warp))
        for r in self.rects:
            out.append(_warp_interval(*r.im, self.warp))
        return np.array(out)

    def draw(self, gen: np.random.Generator, size: int) -> np.ndarray:
        iv = self._intervals()
        u = gen.random((size, 2 * self.k))
        v = iv[:, 0] + u * (iv[:, 1] - iv[:, 0])
        x = v if self.warp is None else self.warp * np.sinh(v)
        return x[:, : self.k] + 1j * x[:, self.k :]

    def pdf(self, t: np.ndarray) -> np.ndarray:
        iv = self._intervals()
        x = np.concatenate([t.real, t.imag], axis=1)
        inside = np.all((x >= self._bounds()[:, 0]) & (x <= self._bounds()[:, 1]), axis=1)
        widths = iv[:, 1] - iv[:, 0]
        if self.warp is None:
            dens = np.full(t.shape[0], 1.0 / np.prod(widths))
        else:
            c = self.warp
            dens = np.prod(1.0 / (widths * np.sqrt(c * c + x * x)), axis=1)
        return np.where(inside, dens, 0.0)

    def _bounds(self) -> np.ndarray:
        return np.array([r.re for r in self.rects] + [r.im for r in self.rects])

    def describe(self) -> dict:
        return {
            "kind": "box",
            "re": [list(r.re) for r in self.rects],
            "im": [list(r.im) for r in self.rects],
            "warp": self.warp,
        }


@dataclass
class AnnulusSampler:
    """Log-polar sampling ``t_j = c_j + exp(s + i phi)`` with s uniform in a range."""

    log_r: list[tuple[float, float]]
    centers: list[complex] | None = None

    def __post_init__(self):
        if self.centers is None:
            self.centers = [0j] * len(self.log_r)
        for lo, hi in self.log_r:
            if not lo < hi:
                raise ValueError("truncation annulus is empty")

    @property
    def k(self) -> int:
        return len(self.log_r)

    def draw(self, gen: np.random.Generator, size: int) -> np.ndarray:
        lr = np.array(self.log_r)
        u = gen.random((size, 2 * self.k))
        s = lr[:, 0] + u[:, : self.k] * (lr[:, 1] - lr[:, 0])
        phi = TWO_PI * u[:, self.k :]
        return np.asarray(self.centers) + np.exp(s + 1j * phi)

    def pdf(self, t: np.ndarray) -> np.ndarray:
        lr = np.array(self.log_r)
        rel = np.abs(t - np.asarray(self.centers))
        with np.errstate(divide="ignore"):
            s = np.log(rel)
        inside = np.all((s >= lr[:, 0]) & (s <= lr[:, 1]), axis=1)
        with np.errstate(divide="ignore"):
            dens = np.prod(1.0 / ((lr[:, 1] - lr[:, 0]) * TWO_PI * rel**2), axis=1)
        return np.where(inside, dens, 0.0)

    def describe(self) -> dict:
        return {
            "kind": "annulus",
            "log_r": [list(b) for b in self.log_r],
            "centers": [str(c) for c in self.centers],
        }


@dataclass
class LinearChartSampler:
    """Log-polar sampling in affine coordinates ``u = A t + c`` (A square, k x k)."""

    matrix: np.ndarray
    offset: np.ndarray
    log_r: tuple[float, float]

    def __post_init__(self):
        self.matrix = np.asarray(self.matrix, dtype=complex)
        self.offset = np.asarray(self.offset, dtype=complex)
        self._inv = np.linalg.inv(self.matrix)
        self._jac = abs(np.linalg.det(self.matrix)) ** 2
        k = self.matrix.shape[0]
        self._inner = AnnulusSampler([self.log_r] * k)

    @property
    def k(self) -> int:
        return self.matrix.shape[0]

    def draw(self, gen: np.random.Generator, size: int) -> np.ndarray:
        u = self._inner.draw(gen, size)
        return (u - self.offset) @ self._inv.T

    def pdf(self, t: np.ndarray) -> np.ndarray:
        u = t @ self.matrix.T + self.offset
        return self._inner.pdf(u) * self._jac

    def describe(self) -> dict:
        return {"kind": "linear-chart", "log_r": list(self.log_r)}


@dataclass
class MixtureSampler:
    """Equal-weight mixture; the pdf is the full mixture density (balance heuristic)."""

    parts: list
    weights: Sequence[float] | None = None

    def __post_init__(self):
        w = np.ones(len(self.parts)) if self.weights is None else np.asarray(self.weights, float)
        self.weights = w / w.sum()

    @property
    def k(self) -> int:
        return self.parts[0].k

    def draw(self, gen: np.random.Generator, size: int) -> np.ndarray:
        labels = np.searchsorted(np.cumsum(self.weights), gen.random(size), side="right")
        labels = np.minimum(labels, len(self.parts) - 1)
        t = np.empty((size, self.k), dtype=complex)
        for m, part in enumerate(self.parts):
            sel = labels == m
            cnt = int(sel.sum())
            if cnt:
                t[sel] = part.draw(gen, cnt)
        return t

    def pdf(self, t: np.ndarray) -> np.ndarray:
        return sum(w * p.pdf(t) for w, p in zip(self.weights, self.parts))

    def describe(self) -> dict:
        return {"kind": "mixture", "parts": [p.describe() for p in self.parts]}


# --------------------------------------------------------------------------
# Moments
# --------------------------------------------------------------------------


@dataclass
class Moments:
    """Count, mean and centered sum of squares; merged with Chan's rule."""

    count: int = 0
    mean: float = 0.0
    m2: float = 0.0

    @classmethod
    def of(cls, values: np.ndarray) -> "Moments":
        values = np.asarray(values, dtype=float)
        if values.size == 0:
            return cls()
        mu = float(values.mean())
        return cls(int(values.size), mu, float(np.sum((values - mu) ** 2)))

    def merge(self, other: "Moments") -> "Moments":
        if other.count == 0:
            return Moments(self.count, self.mean, self.m2)
        if self.count == 0:
            return Moments(other.count, other.mean, other.m2)
        n = self.count + other.count
        delta = other.mean - self.mean
        mean = self.mean + delta * other.count / n
        m2 = self.m2 + other.m2 + delta * delta * self.count * other.count / n
        return Moments(n, mean, m2)

    @property
    def std(self) -> float:
        return math.sqrt(self.m2 / (self.count - 1)) if self.count > 1 else 0.0

    @property
    def stderr(self) -> float:
        return self.std / math.sqrt(self.count) if self.count > 0 else math.inf


# --------------------------------------------------------------------------
# Default domain sampling
# --------------------------------------------------------------------------


def default_box(spec: VarietySpec, radius: float = 4.0) -> BoxSampler:
    return BoxSampler([r.clip(radius) for r in spec.domain])


def draw_domain_points(
    spec: VarietySpec, samples: int, seed: int, radius: float = 4.0, stream_id: int = 7
) -> tuple[np.ndarray, int]:
    """Admissible points with nonzero, finite coordinates; rejects are redrawn.

    Returns the points and the number of rejected draws.
    """
    sampler = default_box(spec, radius)
    out: list[np.ndarray] = []
    have = 0
    rejected = 0
    batch = 0
    while have < samples:
        gen = stream(seed, stream_id, batch)
        t = sampler.draw(gen, max(samples - have, 64))
        ok = spec.admissible(t)
        if ok.any():
            values, dz = spec.jets(t[ok])
            good = np.all(values != 0, axis=1) & np.all(np.isfinite(values), axis=1)
            good &= np.all(np.isfinite(dz), axis=(1, 2))
            idx = np.flatnonzero(ok)[good]
        else:
            idx = np.array([], dtype=int)
        rejected += t.shape[0] - idx.size
        out.append(t[idx])
        have += idx.size
        batch += 1
        if batch > 1000:
            raise RuntimeError("domain sampling keeps missing the admissible set")
    pts = np.concatenate(out)[:samples]
    return pts, rejected
