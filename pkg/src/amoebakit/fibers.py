"""Fiber cardinalities of Log and Arg over pushed-forward target values.

Targets are always images of known parameter points: when n > 2k the
systems are overdetermined and an arbitrary target has an empty fiber.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from fractions import Fraction

import numpy as np

from .sampling import draw_domain_points, stream
from .torus import TWO_PI, minors, real_rows, torus_delta
from .variety import VarietySpec

NEWTON_TOL = 1e-10
DEDUP_RADIUS = 1e-6
DENSITY_FLOOR = 1e-9
RANK_FLOOR = 1e-7  # smallest/largest singular value of the real Jacobian
MAPS = ("log", "arg")


@dataclass
class FiberReport:
    map: str
    target: list[float]
    solutions: list[list[complex]]
    count: int
    regularity: str  # regular, critical, undetermined
    residuals: list[float]
    densities: list[float] = field(default_factory=list)
    converged_starts: int = 0
    starts: int = 0
    suspect_positive_dim: bool = False
    saturated: bool | None = None

    def to_dict(self) -> dict:
        d = asdict(self)
        d["solutions"] = [[[z.real, z.imag] for z in s] for s in self.solutions]
        return d


def default_starts(k: int) -> int:
    return 64 * 2**k


def _residual(spec: VarietySpec, which: str, t: np.ndarray, target: np.ndarray):
    values, dz = spec.jets(t)
    with np.errstate(divide="ignore", invalid="ignore"):
        if which == "log":
            r = np.log(np.abs(values)) - target
        else:
            r = torus_delta(np.angle(values), target)
    return values, dz, r


def _jacobian(values, dz, which):
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        log_rows, arg_rows = real_rows(values, dz)
    return log_rows if which == "log" else arg_rows


def _to_real(t: np.ndarray) -> np.ndarray:
    return np.concatenate([t.real, t.imag], axis=1)


def _to_complex(x: np.ndarray) -> np.ndarray:
    k = x.shape[1] // 2
    return x[:, :k] + 1j * x[:, k:]


def solve_multistart(spec: VarietySpec, which: str, target, t0: np.ndarray, max_iter: int = 200):
    """Levenberg-Marquardt from every start at once.

    Iterates past the residual tolerance while steps keep shrinking, so that
    solutions at tangencies (where convergence is only linear) still get
    pinned down.  Returns final points and residual norms.
    """
    target = np.asarray(target, dtype=float)
    x = _to_real(np.asarray(t0, dtype=complex))
    S, d = x.shape
    lam = np.full(S, 1e-3)
    values, dz, r = _residual(spec, which, _to_complex(x), target)
    norm = np.linalg.norm(r, axis=1)
    norm = np.where(np.isfinite(norm), norm, np.inf)
    active = np.isfinite(norm)
    eye = np.eye(d)
    for _ in range(max_iter):
        if not active.any():
            break
        J = _jacobian(values, dz, which)
        J = np.where(np.isfinite(J), J, 0.0)
        rr = np.where(np.isfinite(r), r, 0.0)
        A = np.einsum("sni,snj->sij", J, J)
        g = np.einsum("sni,sn->si", J, rr)
        damp = lam[:, None, None] * (np.einsum("sii->si", A)[:, :, None] * eye + 1e-14 * eye)
        try:
            step = -np.linalg.solve(A + damp, g[..., None])[..., 0]
        except np.linalg.LinAlgError:
            step = -g * 1e-3
        step = np.where(np.isfinite(step), step, 0.0)
        step[~active] = 0.0
        x_new = x + step
        v2, dz2, r2 = _residual(spec, which, _to_complex(x_new), target)
        n2 = np.linalg.norm(r2, axis=1)
        n2 = np.where(np.isfinite(n2), n2, np.inf)
        better = active & (n2 < norm)
        same = active & (n2 == norm) & (norm == 0)
        x[better] = x_new[better]
        values[better], dz[better], r[better] = v2[better], dz2[better], r2[better]
        norm[better] = n2[better]
        lam = np.where(better, np.maximum(lam / 3.0, 1e-12), np.minimum(lam * 4.0, 1e12))
        step_size = np.linalg.norm(step, axis=1)
        scale = 1.0 + np.linalg.norm(x, axis=1)
        done = (better & (step_size < 1e-15 * scale)) | same | (lam >= 1e12)
        active &= ~done
    return _to_complex(x), norm


def _dedup(points: np.ndarray, radius: float) -> list[int]:
    """Greedy representatives: indices of points pairwise farther than radius."""
    reps: list[int] = []
    for i in range(points.shape[0]):
        if all(np.linalg.norm(points[i] - points[j]) > radius for j in reps):
            reps.append(i)
    return reps


def draw_starts(spec: VarietySpec, count: int, gen: np.random.Generator, r_range=(1e-3, 1e2)) -> np.ndarray:
    """Starts log-uniform in modulus with uniform angle, kept inside the domain box."""
    lo, hi = math.log(r_range[0]), math.log(r_range[1])
    out = []
    have = 0
    for _ in range(1000):
        s = gen.uniform(lo, hi, (count, spec.k))
        phi = gen.uniform(0, TWO_PI, (count, spec.k))
        t = np.exp(s + 1j * phi)
        box = np.ones(count, dtype=bool)
        for j, rect in enumerate(spec.domain):
            if rect.bounded or not (math.isinf(rect.re[0]) and math.isinf(rect.im[0])):
                # bounded or half-bounded domains: sample the clipped box uniformly instead
                rr = rect.clip(r_range[1])
                t[:, j] = gen.uniform(*rr.re, count) + 1j * gen.uniform(*rr.im, count)
        box &= spec.admissible(t)
        out.append(t[box])
        have += int(box.sum())
        if have >= count:
            break
    return np.concatenate(out)[:count]


def fiber_count(
    spec: VarietySpec,
    which: str,
    target,
    starts: int | None = None,
    seed: int = 0,
    known=None,
    search_radius: float = 1e2,
    tol: float = NEWTON_TOL,
    dedup_radius: float = DEDUP_RADIUS,
    density_floor: float = DENSITY_FLOOR,
    check_saturation: bool = False,
    stream_id: int = 0,
) -> FiberReport:
    """Count the points of Log^{-1}(target) or Arg^{-1}(target) on the variety."""
    if which not in MAPS:
        raise ValueError(f"map must be one of {MAPS}")
    target = np.asarray(target, dtype=float).reshape(-1)
    if target.size != spec.n:
        raise ValueError(f"target has {target.size} coordinates, expected n={spec.n}")
    nstarts = starts if starts is not None else default_starts(spec.k)
    gen = stream(seed, 500 + stream_id)
    t0 = draw_starts(spec, nstarts, gen, (1e-3, search_radius))
    if known is not None:
        t0 = np.concatenate([np.asarray(known, dtype=complex).reshape(1, -1), t0])
    pts, res = solve_multistart(spec, which, target, t0)
    ok = (res <= tol) & spec.admissible(pts)
    good = pts[ok]
    report = _summarize(spec, which, target, good, res[ok], dedup_radius, density_floor)
    report.converged_starts = int(ok.sum())
    report.starts = int(t0.shape[0])
    if check_saturation:
        again = fiber_count(
            spec, which, target, 2 * nstarts, seed, known, search_radius, tol,
            dedup_radius, density_floor, False, stream_id + 1,
        )
        report.saturated = again.count <= report.count
    return report


def _summarize(spec, which, target, good, res, dedup_radius, density_floor) -> FiberReport:
    if good.shape[0] == 0:
        return FiberReport(which, target.tolist(), [], 0, "undetermined", [])
    order = np.lexsort((good[:, 0].imag, good[:, 0].real))
    good, res = good[order], res[order]
    reps = _dedup(good, dedup_radius)
    coarse = _dedup(good, 1e-3)
    sol = good[reps]
    values, dz = spec.jets(sol)
    log_rows, arg_rows = real_rows(values, dz)
    rows = log_rows if which == "log" else arg_rows
    dens = np.sqrt(np.sum(minors(rows) ** 2, axis=-1)) if 2 * spec.k <= spec.n else np.zeros(len(reps))
    sv = np.linalg.svd(rows, compute_uv=False)
    rank_def = sv[:, -1] < RANK_FLOOR * sv[:, 0]
    critical = bool(np.any(dens < density_floor) or np.any(rank_def))
    return FiberReport(
        map=which,
        target=target.tolist(),
        solutions=[[complex(z) for z in s] for s in sol],
        count=len(reps),
        regularity="critical" if critical else "regular",
        residuals=[float(res[i]) for i in reps],
        densities=[float(x) for x in dens],
        suspect_positive_dim=len(reps) - len(coarse) >= 2,
    )


def conjugate_paired(report: FiberReport, tol: float = 1e-6) -> bool:
    """Every solution's complex conjugate is also a listed solution."""
    sols = np.array(report.solutions, dtype=complex)
    if sols.size == 0:
        return True
    for s in sols:
        if np.min(np.linalg.norm(sols - np.conj(s), axis=1)) > tol:
            return False
    return True


# --------------------------------------------------------------------------
# p and P
# --------------------------------------------------------------------------


@dataclass
class ProbeRow:
    t: list[complex]
    log_count: int
    arg_count: int
    arg_count_wide: int


@dataclass
class PPEstimate:
    p: Fraction
    P: Fraction
    log_counts: list[int]
    arg_counts: list[int]
    unbounded_suspected: bool
    probes_used: int
    probes_skipped: int
    evidence: list[ProbeRow]

    @property
    def P_is_lower_bound(self) -> bool:
        return self.unbounded_suspected

    def to_dict(self) -> dict:
        return {
            "p": str(self.p),
            "P": str(self.P),
            "P_is_lower_bound": self.P_is_lower_bound,
            "unbounded_suspected": self.unbounded_suspected,
            "log_counts": self.log_counts,
            "arg_counts": self.arg_counts,
            "probes_used": self.probes_used,
            "probes_skipped": self.probes_skipped,
            "evidence": [
                {
                    "t": [[z.real, z.imag] for z in row.t],
                    "log_count": row.log_count,
                    "arg_count": row.arg_count,
                    "arg_count_wide": row.arg_count_wide,
                }
                for row in self.evidence
            ],
        }


def probe_points(spec: VarietySpec, probes: int, seed: int, radius: float = 3.0) -> tuple[np.ndarray, int]:
    """Regular parameter points (density above the floor) for pushing forward."""
    pts, _ = draw_domain_points(spec, 4 * probes, seed, radius=radius, stream_id=11)
    values, dz = spec.jets(pts)
    log_rows, _ = real_rows(values, dz)
    dens = np.sqrt(np.sum(minors(log_rows) ** 2, axis=-1))
    sv = np.linalg.svd(log_rows, compute_uv=False)
    regular = (dens >= 1e3 * DENSITY_FLOOR) & (sv[:, -1] >= 1e3 * RANK_FLOOR * sv[:, 0])
    chosen = pts[regular][:probes]
    return chosen, int((~regular[: len(chosen) + int((~regular).sum())]).sum())


def estimate_p_P(
    spec: VarietySpec,
    probes: int = 20,
    starts: int | None = None,
    seed: int = 0,
    search_radius: float = 1e2,
    growth_factor: float = 4.0,
) -> PPEstimate:
    """Sample min/max fiber counts and form p = min#Arg/max#Log, P = max#Arg/min#Log.

    Each Arg fiber is searched twice, the second time in a box
    ``growth_factor`` times larger; if the count grows the Arg map is
    flagged as not locally finite and P is only a lower bound.
    """
    if 2 * spec.k > spec.n:
        raise ValueError("p and P need 2k <= n")
    pts, skipped = probe_points(spec, probes, seed)
    if pts.shape[0] == 0:
        raise ValueError("all probes critical")
    rows: list[ProbeRow] = []
    for i, t in enumerate(pts):
        values = spec.jets(t[None, :])[0][0]
        y = np.log(np.abs(values))
        th = np.angle(values)
        lr = fiber_count(spec, "log", y, starts, seed + i, known=t, search_radius=search_radius)
        ar = fiber_count(spec, "arg", th, starts, seed + i, known=t, search_radius=search_radius)
        aw = fiber_count(
            spec, "arg", th, starts, seed + i, known=t, search_radius=growth_factor * search_radius, stream_id=3
        )
        if lr.regularity != "regular" or ar.regularity != "regular":
            skipped += 1
            continue
        rows.append(ProbeRow([complex(z) for z in t], lr.count, ar.count, aw.count))
    if not rows:
        raise ValueError("all probes critical")
    logc = [r.log_count for r in rows]
    argc = [max(r.arg_count, r.arg_count_wide) for r in rows]
    unbounded = any(r.arg_count_wide > r.arg_count for r in rows)
    return PPEstimate(
        p=Fraction(min(argc), max(logc)),
        P=Fraction(max(argc), min(logc)),
        log_counts=logc,
        arg_counts=argc,
        unbounded_suspected=unbounded,
        probes_used=len(rows),
        probes_skipped=skipped,
        evidence=rows,
    )
