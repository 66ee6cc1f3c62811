"""Parametrized subvarieties of the complex torus."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .expr import Node, eval_jet, eval_jet_batch, max_var, parse, to_source


@dataclass(frozen=True)
class Rect:
    """Per-variable parameter range; infinite sides mean unbounded."""

    re: tuple[float, float] = (-math.inf, math.inf)
    im: tuple[float, float] = (-math.inf, math.inf)

    @property
    def bounded(self) -> bool:
        return all(math.isfinite(v) for v in (*self.re, *self.im))

    def clip(self, radius: float) -> "Rect":
        return Rect(
            (max(self.re[0], -radius), min(self.re[1], radius)),
            (max(self.im[0], -radius), min(self.im[1], radius)),
        )

    def contains(self, t: np.ndarray) -> np.ndarray:
        return (
            (t.real >= self.re[0]) & (t.real <= self.re[1])
            & (t.imag >= self.im[0]) & (t.imag <= self.im[1])
        )

    @property
    def empty(self) -> bool:
        return self.re[0] >= self.re[1] or self.im[0] >= self.im[1]


@dataclass(frozen=True)
class Exclusion:
    var: int  # 1-based
    center: complex
    radius: float


@dataclass
class VarietySpec:
    """A k-dimensional variety given as the image of ``t -> (z_1(t)..z_n(t))``."""

    name: str
    k: int
    components: list[Node]
    domain: list[Rect] = field(default_factory=list)
    exclusions: list[Exclusion] = field(default_factory=list)
    multiplicity_log: int | None = None
    multiplicity_arg: int | None = None
    tags: tuple[str, ...] = ()

    def __post_init__(self):
        if self.k < 1:
            raise ValueError("k must be >= 1")
        if not self.domain:
            self.domain = [Rect() for _ in range(self.k)]
        if len(self.domain) != self.k:
            raise ValueError(f"domain has {len(self.domain)} ranges, expected k={self.k}")
        for c in self.components:
            if max_var(c) > self.k:
                raise ValueError("component references a variable beyond k")
        for e in self.exclusions:
            if not 1 <= e.var <= self.k:
                raise ValueError(f"exclusion variable {e.var} out of range")
        for m in (self.multiplicity_log, self.multiplicity_arg):
            if m is not None and m < 1:
                raise ValueError("multiplicities must be positive integers")
        self.tags = tuple(self.tags)

    @classmethod
    def from_strings(cls, name: str, k: int, components: Sequence[str], **kw) -> "VarietySpec":
        return cls(name, k, [parse(s, k) for s in components], **kw)

    @property
    def n(self) -> int:
        return len(self.components)

    @property
    def sources(self) -> list[str]:
        return [to_source(c) for c in self.components]

    def jets(self, t: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        return eval_jet_batch(self.components, t)

    def jet(self, t: Sequence[complex]):
        return eval_jet(self.components, t)

    def admissible(self, t: np.ndarray) -> np.ndarray:
        """Mask of points inside the domain and outside every excluded disc."""
        t = np.asarray(t, dtype=complex)
        ok = np.ones(t.shape[0], dtype=bool)
        for j, rect in enumerate(self.domain):
            ok &= rect.contains(t[:, j])
        for e in self.exclusions:
            ok &= np.abs(t[:, e.var - 1] - e.center) > e.radius
        return ok

    def has_tag(self, tag: str) -> bool:
        return tag in self.tags
