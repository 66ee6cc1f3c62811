"""Affine k-planes t -> (t_1..t_k, f_1(t)..f_s(t)) with f_j = b_j + sum_i a_ji t_i."""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .expr import BinOp, Const, Node, Var, const
from .measure import VolumeEstimate, integrate_pullback
from .sampling import LinearChartSampler, MixtureSampler
from .variety import Exclusion, VarietySpec

GENERIC_COND = 1e8
REAL_TOL = 1e-12


@dataclass
class AffinePlaneSpec:
    k: int
    b: np.ndarray  # (s,)
    a: np.ndarray  # (s, k)
    name: str = "plane"

    def __post_init__(self):
        self.b = np.asarray(self.b, dtype=complex).reshape(-1)
        self.a = np.asarray(self.a, dtype=complex).reshape(len(self.b), -1)
        if self.k < 1 or self.a.shape[1] != self.k:
            raise ValueError(f"coefficient matrix must be s x k with k={self.k}")
        if self.s < 1:
            raise ValueError("need at least one affine function")
        rows = np.concatenate([self.b[:, None], self.a], axis=1)
        if np.any(np.all(rows == 0, axis=1)):
            raise ValueError("zero coefficient row")

    @property
    def s(self) -> int:
        return len(self.b)

    @property
    def n(self) -> int:
        return self.k + self.s

    @property
    def m(self) -> int:
        return self.s - self.k

    @property
    def normalized(self) -> bool:
        return self.b[0] == 1 and bool(np.all(self.a[0] == 1))

    def affine_matrix(self) -> tuple[np.ndarray, np.ndarray]:
        """All n coordinates as z = A t + c."""
        A = np.concatenate([np.eye(self.k, dtype=complex), self.a], axis=0)
        c = np.concatenate([np.zeros(self.k, dtype=complex), self.b])
        return A, c

    def genericity(self) -> float:
        """Worst condition number over square submatrices of [b | a]."""
        rows = np.concatenate([self.b[:, None], self.a], axis=1)
        worst = 1.0
        for size in range(1, min(rows.shape) + 1):
            for ri in itertools.combinations(range(rows.shape[0]), size):
                for ci in itertools.combinations(range(rows.shape[1]), size):
                    sub = rows[np.ix_(ri, ci)]
                    worst = max(worst, float(np.linalg.cond(sub)))
        return worst

    def is_generic(self) -> bool:
        return self.genericity() < GENERIC_COND


def _affine_expr(b: complex, row: np.ndarray) -> Node:
    node: Node = const(b)
    for i, a in enumerate(row, start=1):
        if a == 0:
            continue
        term: Node = Var(i) if a == 1 else BinOp("*", const(a), Var(i))
        node = BinOp("+", node, term)
    return node


def to_variety(plane: AffinePlaneSpec, exclusion_radius: float = 1e-12) -> VarietySpec:
    comps: list[Node] = [Var(i) for i in range(1, plane.k + 1)]
    comps += [_affine_expr(b, row) for b, row in zip(plane.b, plane.a)]
    excl = [Exclusion(i, 0j, exclusion_radius) for i in range(1, plane.k + 1)]
    for b, row in zip(plane.b, plane.a):
        for i, a in enumerate(row, start=1):
            if a != 0:
                excl.append(Exclusion(i, complex(-b / a), exclusion_radius))
    real, _ = is_real(plane)
    arg_count, log_count = expected_counts(plane)
    tags = ["algebraic", "plane"] + (["real"] if real else [])
    return VarietySpec(
        plane.name,
        plane.k,
        comps,
        exclusions=excl,
        multiplicity_log=log_count if isinstance(log_count, int) else None,
        multiplicity_arg=arg_count,
        tags=tuple(tags),
    )


def is_real(plane: AffinePlaneSpec, tol: float = REAL_TOL) -> tuple[bool, list[complex]]:
    """Whether every row (b_j, a_j1..a_jk) becomes real after one unit rescaling.

    The witness lists the unit scalar used for each row.  For lines this is
    the condition a_j1 / b_j in R*.
    """
    rows = np.concatenate([plane.b[:, None], plane.a], axis=1)
    scalars = []
    ok = True
    for row in rows:
        pivot = row[np.argmax(np.abs(row))]
        if pivot == 0:
            raise ValueError("zero coefficient row")
        u = np.conj(pivot) / abs(pivot)
        scaled = row * u
        scalars.append(complex(u))
        if np.max(np.abs(scaled.imag)) > tol * np.max(np.abs(row)):
            ok = False
    return ok, scalars


def expected_counts(plane: AffinePlaneSpec) -> tuple[int, int | str]:
    """(Arg fiber, Log fiber) cardinality at regular values, where known.

    The Arg fiber has one point for every generic plane.  The Log fiber has
    2^k points for real planes in (C*)^{2k}, and for lines in (C*)^{2+m},
    m >= 1, two points if real and one otherwise.  Anything else is
    reported as "unknown".
    """
    real, _ = is_real(plane)
    if plane.m == 0 and real:
        return 1, 2**plane.k
    if plane.k == 1 and plane.m >= 1:
        return 1, 2 if real else 1
    return 1, "unknown"


def chart_sampler(plane: AffinePlaneSpec, log_r: tuple[float, float] = (-8.0, 8.0)) -> MixtureSampler:
    """Mixture of log-polar samplers, one per k-subset of the affine coordinates.

    The density is singular like 1/dist along every hyperplane z_i = 0; each
    chart flattens the singularities of its own coordinates, and the mixture
    pdf covers all of them.
    """
    A, c = plane.affine_matrix()
    parts = []
    for idx in itertools.combinations(range(plane.n), plane.k):
        M = A[list(idx)]
        if abs(np.linalg.det(M)) < 1e-12:
            continue
        parts.append(LinearChartSampler(M, c[list(idx)], log_r))
    return MixtureSampler(parts)


@dataclass
class VolumeCertificate:
    k: int
    amoeba: VolumeEstimate
    coamoeba: VolumeEstimate
    amoeba_target: float
    coamoeba_target: float

    @property
    def amoeba_ok(self) -> bool:
        return self.amoeba.within(self.amoeba_target)

    @property
    def coamoeba_ok(self) -> bool:
        return self.coamoeba.within(self.coamoeba_target)

    @property
    def passed(self) -> bool:
        return self.amoeba_ok and self.coamoeba_ok

    def to_dict(self) -> dict:
        return {
            "k": self.k,
            "amoeba": self.amoeba.to_dict(),
            "coamoeba": self.coamoeba.to_dict(),
            "amoeba_target": self.amoeba_target,
            "coamoeba_target": self.coamoeba_target,
            "amoeba_ok": self.amoeba_ok,
            "coamoeba_ok": self.coamoeba_ok,
            "passed": self.passed,
        }


def volume_certificate(
    plane: AffinePlaneSpec, samples: int, seed: int, log_r: tuple[float, float] = (-8.0, 8.0), jobs: int = 1
) -> VolumeCertificate:
    """Estimate both volumes of a real k-plane in (C*)^{2k} against pi^{2k}/2^k and pi^{2k}."""
    real, _ = is_real(plane)
    if not real:
        raise ValueError("volume certificate needs a real plane")
    if plane.m != 0:
        raise ValueError("volume certificate needs n = 2k")
    spec = to_variety(plane)
    sampler = chart_sampler(plane, log_r)
    amoeba = integrate_pullback(spec, "amoeba", samples, seed, sampler, multiplicity=2**plane.k, jobs=jobs)
    coamoeba = integrate_pullback(spec, "coamoeba", samples, seed, sampler, multiplicity=1, jobs=jobs)
    k = plane.k
    return VolumeCertificate(k, amoeba, coamoeba, math.pi ** (2 * k) / 2**k, math.pi ** (2 * k))


def comparison_ratios(plane: AffinePlaneSpec) -> tuple[Fraction, Fraction] | None:
    arg_count, log_count = expected_counts(plane)
    if not isinstance(log_count, int):
        return None
    r = Fraction(arg_count, log_count)
    return r, r
