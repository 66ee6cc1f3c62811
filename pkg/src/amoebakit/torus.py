"""Log, Arg and Bergman maps, and the pullback volume density.

For a parametrization ``t -> z(t)`` with ``t`` in C^k, the logarithmic
derivative ``w_i = dz_i / z_i`` determines both real Jacobians.  With
``t_j = x_j + i y_j`` and columns ordered ``(x_1..x_k, y_1..y_k)``::

    d log|z_i| = Re(w_i . dt)  ->  row (Re w_i, -Im w_i)
    d arg z_i  = Im(w_i . dt)  ->  row (Im w_i,  Re w_i)

The 2k-dimensional volume distortion of each map is the square root of the
sum of squared 2k x 2k minors over all 2k-subsets of the n rows.  The Arg
rows are the Log rows times the complex structure, which is why every minor
agrees in absolute value.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Sequence

import numpy as np

from .expr import EvaluationError, Jet

TWO_PI = 2.0 * math.pi


@dataclass(frozen=True)
class TorusPoint:
    angles: np.ndarray


@dataclass(frozen=True)
class LogPoint:
    coords: np.ndarray


@dataclass(frozen=True)
class DensitySample:
    t: np.ndarray
    gen_jac_log: float
    gen_jac_arg: float


def _nonzero(z) -> np.ndarray:
    z = np.asarray(z, dtype=complex)
    if np.any(z == 0):
        raise EvaluationError("zero coordinate: point leaves the torus")
    return z


def log_map(z: Sequence[complex]) -> LogPoint:
    return LogPoint(np.log(np.abs(_nonzero(z))))


def wrap_angle(theta) -> np.ndarray:
    """Reduce angles into [0, 2pi)."""
    a = np.mod(theta, TWO_PI)
    # np.mod can return exactly 2pi for tiny negative inputs
    return np.where(a >= TWO_PI, 0.0, a)


def arg_map(z: Sequence[complex]) -> TorusPoint:
    return TorusPoint(wrap_angle(np.angle(_nonzero(z))))


def torus_delta(a, b) -> np.ndarray:
    """Signed coordinatewise difference a - b wrapped into [-pi, pi)."""
    return np.mod(np.asarray(a) - np.asarray(b) + math.pi, TWO_PI) - math.pi


def torus_distance(a, b) -> np.ndarray:
    """Per-coordinate distance min(|d|, 2pi - |d|)."""
    d = np.abs(np.mod(np.asarray(a) - np.asarray(b), TWO_PI))
    return np.minimum(d, TWO_PI - d)


def bergman_r(x) -> np.ndarray:
    """Bergman compactification x / (1 + |x|) into the open unit ball."""
    x = np.asarray(x, dtype=float)
    return x / (1.0 + np.linalg.norm(x, axis=-1, keepdims=True))


def bergman_r_inverse(r) -> np.ndarray:
    r = np.asarray(r, dtype=float)
    return r / (1.0 - np.linalg.norm(r, axis=-1, keepdims=True))


@lru_cache(maxsize=None)
def minor_index(n: int, size: int) -> np.ndarray:
    return np.array(list(itertools.combinations(range(n), size)), dtype=int).reshape(-1, size)


def real_rows(values: np.ndarray, dz: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Realified Log and Arg Jacobians, each of shape (N, n, 2k)."""
    w = dz / values[..., None]
    log_rows = np.concatenate([w.real, -w.imag], axis=-1)
    arg_rows = np.concatenate([w.imag, w.real], axis=-1)
    return log_rows, arg_rows


def minors(rows: np.ndarray) -> np.ndarray:
    """All 2k x 2k minors of the (N, n, 2k) row stack, shape (N, C(n, 2k))."""
    n, size = rows.shape[-2], rows.shape[-1]
    if size > n:
        raise ValueError(f"need 2k <= n, got 2k={size}, n={n}")
    idx = minor_index(n, size)
    sub = rows[:, idx, :]  # (N, M, 2k, 2k)
    return np.linalg.det(sub)


def density_batch(values: np.ndarray, dz: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Generalized Jacobians of t -> Log(z(t)) and t -> Arg(z(t)) at N points."""
    log_rows, arg_rows = real_rows(values, dz)
    ml = minors(log_rows)
    ma = minors(arg_rows)
    return np.sqrt(np.sum(ml**2, axis=-1)), np.sqrt(np.sum(ma**2, axis=-1))


def log_density(values: np.ndarray, dz: np.ndarray) -> np.ndarray:
    """Only the Log-side generalized Jacobian (what the integrators need)."""
    log_rows, _ = real_rows(values, dz)
    return np.sqrt(np.sum(minors(log_rows) ** 2, axis=-1))


def pullback_density(jet: Jet, t: Sequence[complex] | None = None) -> DensitySample:
    z = _nonzero(jet.value)
    gl, ga = density_batch(z[None, :], jet.dz[None, :, :])
    tt = np.asarray(t if t is not None else [], dtype=complex)
    return DensitySample(tt, float(gl[0]), float(ga[0]))


@dataclass
class IdentityReport:
    samples: int
    max_total_deviation: float
    max_minor_deviation: float
    resampled: int

    @property
    def passed(self) -> bool:
        return self.max_total_deviation <= 1e-8 and self.max_minor_deviation <= 1e-8


def check_jacobian_identity(spec, samples: int = 10_000, seed: int = 0) -> IdentityReport:
    """Max relative gap between the Log and Arg Jacobians over random points.

    Both the total density and every individual minor are compared, each
    relative to ``1 + |value|``.
    """
    from .sampling import draw_domain_points

    if 2 * spec.k > spec.n:
        raise ValueError("identity check needs 2k <= n")
    t, resampled = draw_domain_points(spec, samples, seed)
    values, dz = spec.jets(t)
    log_rows, arg_rows = real_rows(values, dz)
    ml = np.abs(minors(log_rows))
    ma = np.abs(minors(arg_rows))
    gl = np.sqrt(np.sum(ml**2, axis=-1))
    ga = np.sqrt(np.sum(ma**2, axis=-1))
    total = np.max(np.abs(gl - ga) / (1.0 + gl))
    per_minor = np.max(np.abs(ml - ma) / (1.0 + ml))
    return IdentityReport(samples, float(total), float(per_minor), resampled)
