"""Monte Carlo volumes of amoebas and coamoebas.

The volume of the image of ``t -> Log(z(t))`` counted with multiplicity is
the integral over parameter space of the generalized Jacobian; dividing by
the covering multiplicity gives the volume of the image itself.  The same
holds for Arg.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from .sampling import BATCH, BoxSampler, Moments, batch_sizes, stream
from .torus import minors, real_rows
from .variety import VarietySpec

TARGETS = ("amoeba", "coamoeba")


class MissingMultiplicity(ValueError):
    pass


class NumericalError(ArithmeticError):
    """Non-finite integrand values: the sampler reached overflow or a zero coordinate."""


@dataclass
class VolumeEstimate:
    value: float
    stderr: float
    samples: int
    multiplicity: int
    target: str
    truncation: dict = field(default_factory=dict)
    seed: int = 0

    @property
    def raw(self) -> float:
        """Integral of the density before dividing by the multiplicity."""
        return self.value * self.multiplicity

    def within(self, expected: float, nsigma: float = 3.0) -> bool:
        return abs(self.value - expected) <= nsigma * self.stderr

    def to_dict(self) -> dict:
        d = asdict(self)
        d["box"] = d.pop("truncation")
        return d


def _density(spec: VarietySpec, t: np.ndarray, target: str) -> np.ndarray:
    values, dz = spec.jets(t)
    log_rows, arg_rows = real_rows(values, dz)
    rows = log_rows if target == "amoeba" else arg_rows
    with np.errstate(invalid="ignore"):
        return np.sqrt(np.sum(minors(rows) ** 2, axis=-1))


def _batch_moments(spec, sampler, target, seed, stream_id, index, size, inner=None):
    gen = stream(seed, stream_id, index)
    t = sampler.draw(gen, size)
    ok = spec.admissible(t)
    if inner is not None:
        ok &= ~inner(t)
    f = np.zeros(size)
    bad = 0
    if ok.any():
        tt = t[ok]
        with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
            g = _density(spec, tt, target) / sampler.pdf(tt)
        finite = np.isfinite(g)
        bad = int((~finite).sum())
        f[ok] = np.where(finite, g, 0.0)
    return Moments.of(f), bad


def integrate_density(
    spec: VarietySpec,
    sampler,
    samples: int,
    seed: int,
    target: str = "amoeba",
    stream_id: int = 0,
    inner=None,
    jobs: int = 1,
    batch: int = BATCH,
) -> Moments:
    """Moments of ``density / pdf`` over ``samples`` draws (zero off the domain).

    ``inner`` optionally masks out a region, for shell integrals.
    """
    if target not in TARGETS:
        raise ValueError(f"target must be one of {TARGETS}")
    if 2 * spec.k > spec.n:
        raise ValueError(f"volume needs 2k <= n (k={spec.k}, n={spec.n})")
    sizes = batch_sizes(samples, batch)

    def work(i):
        return _batch_moments(spec, sampler, target, seed, stream_id, i, sizes[i], inner)

    if jobs > 1 and len(sizes) > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            parts = list(pool.map(work, range(len(sizes))))
    else:
        parts = [work(i) for i in range(len(sizes))]
    total = Moments()
    bad = 0
    for m, b in parts:
        total = total.merge(m)
        bad += b
    if bad:
        raise NumericalError(f"{bad} samples produced non-finite densities")
    return total


def integrate_pullback(
    spec: VarietySpec,
    target: str,
    samples: int,
    seed: int,
    truncation,
    multiplicity: int | None = None,
    jobs: int = 1,
) -> VolumeEstimate:
    """Volume of the amoeba or coamoeba restricted to the sampler's support."""
    if multiplicity is None:
        multiplicity = spec.multiplicity_log if target == "amoeba" else spec.multiplicity_arg
    if multiplicity is None:
        raise MissingMultiplicity(f"no {target} multiplicity declared for {spec.name}")
    m = integrate_density(spec, truncation, samples, seed, target, jobs=jobs)
    return VolumeEstimate(
        value=m.mean / multiplicity,
        stderr=m.stderr / multiplicity,
        samples=samples,
        multiplicity=int(multiplicity),
        target=target,
        truncation=truncation.describe(),
        seed=seed,
    )


# --------------------------------------------------------------------------
# Finiteness classification
# --------------------------------------------------------------------------


@dataclass
class Stage:
    radius: float
    increment: float
    stderr: float
    total: float


@dataclass
class FinitenessVerdict:
    kind: str  # convergent, divergent, inconclusive
    estimate: float | None
    growth_exponent: float
    stages: list[Stage]
    reason: str = ""

    def to_dict(self) -> dict:
        return asdict(self)


def _clipped(spec: VarietySpec, radius: float):
    return [r.clip(radius) for r in spec.domain]


def classify_finiteness(
    spec: VarietySpec,
    radii: Sequence[float],
    samples: int,
    seed: int,
    eps_rel: float = 0.01,
    eps_abs: float = 1e-3,
    warp: float = 1.0,
    min_growth: float = 0.25,
    jobs: int = 1,
) -> FinitenessVerdict:
    """Decide whether the pullback integral converges along a box ladder.

    Stage j integrates over the shell between the boxes of half-width
    ``radii[j-1]`` and ``radii[j]`` (intersected with the domain), each with
    its own samples, so tail increments are measured directly rather than
    as differences of noisy totals.

    * convergent: the last increment plus 3 stderr is below ``eps_abs`` and
      below ``eps_rel`` times the running total;
    * divergent: the last increment minus 3 stderr exceeds both floors and
      the log-log slope of the totals over the last two stages is at least
      ``min_growth``;
    * inconclusive otherwise, or when some increment is noisier than half
      its own value.
    """
    radii = [float(r) for r in radii]
    if len(radii) < 4:
        raise ValueError("need at least 4 radii")
    if any(b <= a for a, b in zip(radii, radii[1:])):
        raise ValueError("radii must be strictly increasing")
    stages: list[Stage] = []
    total = 0.0
    prev_rects = None
    for j, R in enumerate(radii):
        rects = _clipped(spec, R)
        if any(r.empty for r in rects):
            raise ValueError(f"truncation box at radius {R} is empty")
        if prev_rects is not None and rects == prev_rects:
            stages.append(Stage(R, 0.0, 0.0, total))
            continue
        inner = None
        if prev_rects is not None:
            pr = prev_rects

            def inner(t, pr=pr):
                m = np.ones(t.shape[0], dtype=bool)
                for col, r in enumerate(pr):
                    m &= r.contains(t[:, col])
                return m

        sampler = BoxSampler(rects, warp=warp)
        mom = integrate_density(spec, sampler, samples, seed, "amoeba", stream_id=100 + j, inner=inner, jobs=jobs)
        total += mom.mean
        stages.append(Stage(R, mom.mean, mom.stderr, total))
        prev_rects = rects

    mult = spec.multiplicity_log or 1
    last, prev = stages[-1], stages[-2]
    if prev.total > 0 and last.total > 0:
        growth = math.log(last.total / prev.total) / math.log(last.radius / prev.radius)
    else:
        growth = 0.0
    noisy = [s for s in stages if s.increment > eps_abs and s.stderr > 0.5 * s.increment]
    hi = last.increment + 3 * last.stderr
    lo = last.increment - 3 * last.stderr
    if noisy:
        kind, reason = "inconclusive", f"stage estimates too noisy at radius {noisy[0].radius:g}"
    elif hi <= eps_abs and hi <= eps_rel * last.total:
        kind, reason = "convergent", "tail increment below both floors"
    elif lo > max(eps_abs, eps_rel * last.total) and growth >= min_growth:
        kind, reason = "divergent", "tail increments do not decay"
    else:
        kind, reason = "inconclusive", "tail neither below floors nor growing"
    estimate = last.total / mult if kind == "convergent" else None
    return FinitenessVerdict(kind, estimate, growth, stages, reason)


# --------------------------------------------------------------------------
# Comparison inequality
# --------------------------------------------------------------------------


@dataclass
class ComparisonReport:
    p: str
    P: str
    vol_amoeba: float
    vol_coamoeba: float
    lower_bound: float
    upper_bound: float
    lower_margin: float
    upper_margin: float
    slack_lower: float
    slack_upper: float
    lower_ok: bool
    upper_ok: bool

    @property
    def passed(self) -> bool:
        return self.lower_ok and self.upper_ok

    def to_dict(self) -> dict:
        d = asdict(self)
        d["passed"] = self.passed
        return d


def comparison_certificate(
    p: Fraction, P: Fraction, vol_amoeba: VolumeEstimate, vol_coamoeba: VolumeEstimate, nsigma: float = 3.0
) -> ComparisonReport:
    """Check p vol(coamoeba) <= vol(amoeba) <= P vol(coamoeba) with nsigma slack."""
    if p > P:
        raise ValueError("need p <= P")
    A, sA = vol_amoeba.value, vol_amoeba.stderr
    C, sC = vol_coamoeba.value, vol_coamoeba.stderr
    lo, hi = float(p) * C, float(P) * C
    slack_lo = nsigma * math.hypot(sA, float(p) * sC)
    slack_hi = nsigma * math.hypot(sA, float(P) * sC)
    return ComparisonReport(
        p=str(p),
        P=str(P),
        vol_amoeba=A,
        vol_coamoeba=C,
        lower_bound=lo,
        upper_bound=hi,
        lower_margin=A - lo,
        upper_margin=hi - A,
        slack_lower=slack_lo,
        slack_upper=slack_hi,
        lower_ok=A - lo >= -slack_lo,
        upper_ok=hi - A >= -slack_hi,
    )
