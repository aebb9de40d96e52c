"""Geometric and dimensional statistics of the d-dimensional sheet.

Point-hitting probabilities and their scaling in the ball radius, a
box-occupancy proxy for the volume of the range, the Fourier-side sojourn
integrand with its integrability verdict, and the level-component pinning
probability estimated through the corner decomposition near (1, 1).

Hitting detection is grid-node based; the known undercount is absorbed by
fitting only the log-log slope, whose multiplicative bias is independent
of the radius to first order at fixed resolution.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.integrate import quad

from .errors import ArgumentError, NumericError
from .mc import EnsembleConfig, EstimateReport, mc_collect, mc_run, report_from_samples
from .rng import Seed
from .sheet import CornerDecomposition, corner_values, lattice_values, scaled_bm

__all__ = [
    "HitQuery",
    "HitScaling",
    "SojournSpectrum",
    "KendallEstimate",
    "hit_probability",
    "hit_min_distances",
    "hit_scaling",
    "range_volume",
    "occupancy_volume",
    "sym_diff_area",
    "sojourn_Q",
    "sojourn_factor",
    "sojourn_tail_factor",
    "sojourn_fourier_mc",
    "kendall_event",
    "kendall_J",
    "limit_event_indicator",
    "kendall_limit",
    "kendall_profile",
]

EULER_GAMMA = float(np.euler_gamma)


# ---------------------------------------------------------------------------
# Point hitting
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class HitQuery:
    """Does the d-dimensional sheet come within eps of x on the window?"""

    d: int
    x: tuple[float, ...]
    eps: float
    window: tuple[float, float, float, float] = (1.0, 2.0, 1.0, 2.0)
    metric: str = "linf"

    def __post_init__(self) -> None:
        if self.d < 1:
            raise ArgumentError(f"dimension must be >= 1, got {self.d}")
        if len(self.x) != self.d:
            raise ArgumentError(f"target point has {len(self.x)} coordinates, expected {self.d}")
        if self.eps <= 0:
            raise ArgumentError(f"radius must be positive, got {self.eps}")
        s0, s1, t0, t1 = self.window
        if not (0 <= s0 < s1 and 0 <= t0 < t1):
            raise ArgumentError(f"invalid window {self.window}")
        if self.metric not in ("linf", "l2"):
            raise ArgumentError(f"metric must be 'linf' or 'l2', got {self.metric!r}")


def hit_min_distances(
    d: int,
    window: tuple[float, float, float, float],
    grid_steps: int,
    replicas: int,
    seed: Seed,
    x: Sequence[float] | None = None,
    metric: str = "linf",
    parallelism: int = 1,
) -> np.ndarray:
    """Per replica, the smallest distance from the field to x over all grid nodes.

    One shared ensemble serves every radius, so hit indicators are exactly
    monotone in eps across nested thresholds.
    """
    if grid_steps < 64:
        raise ArgumentError(f"grid_steps must be >= 64, got {grid_steps}")
    target = np.zeros(d) if x is None else np.asarray(x, dtype=float)
    s0, s1, t0, t1 = window
    s_pts = np.linspace(s0, s1, grid_steps + 1)
    t_pts = np.linspace(t0, t1, grid_steps + 1)

    def one(rng: np.random.Generator) -> float:
        gaps = np.empty((d, s_pts.size, t_pts.size))
        for c in range(d):
            gaps[c] = np.abs(lattice_values(s_pts, t_pts, rng) - target[c])
        if metric == "linf":
            dist = gaps.max(axis=0)
        else:
            dist = np.sqrt(np.sum(gaps**2, axis=0))
        return float(dist.min())

    cfg = EnsembleConfig(replicas=replicas, seed=seed, parallelism=parallelism)
    return mc_collect(one, cfg)


def _fluctuation_note(q: HitQuery, grid_steps: int) -> str:
    s0, s1, t0, t1 = q.window
    step = max((s1 - s0) / grid_steps, (t1 - t0) / grid_steps)
    fluct = 3.0 * math.sqrt(step)
    if q.eps < fluct:
        return f"undercount risk: eps = {q.eps} below inter-node fluctuation scale {fluct:.3g}"
    return ""


def hit_probability(
    q: HitQuery, grid_steps: int, replicas: int, seed: Seed, parallelism: int = 1
) -> EstimateReport:
    """Fraction of replicas whose sheet sample passes within eps of x."""
    dists = hit_min_distances(
        q.d, q.window, grid_steps, replicas, seed, x=q.x, metric=q.metric, parallelism=parallelism
    )
    return report_from_samples((dists <= q.eps).astype(float), note=_fluctuation_note(q, grid_steps))


@dataclass(frozen=True)
class HitScaling:
    """Log-log slope of the hitting probability against the ball radius."""

    d: int
    eps: np.ndarray
    reports: tuple[EstimateReport, ...]
    slope: float
    slope_stderr: float
    dropped: tuple[float, ...]  # radii excluded from the fit for lack of hits
    min_hits: int


def hit_scaling(
    d: int,
    eps_levels: Sequence[float],
    grid_steps: int,
    replicas: int,
    seed: Seed,
    window: tuple[float, float, float, float] = (1.0, 2.0, 1.0, 2.0),
    x: Sequence[float] | None = None,
    min_hits: int = 30,
    parallelism: int = 1,
) -> HitScaling:
    """Fit log(hit probability) against log(eps) on one shared ensemble.

    Radii with fewer than ``min_hits`` hits are dropped from the fit and
    recorded. The slope standard error propagates the binomial noise of
    each retained level through the least-squares weights.
    """
    eps = np.asarray(sorted(eps_levels, reverse=True), dtype=float)
    if eps.size < 2:
        raise ArgumentError("need at least two radii")
    dists = hit_min_distances(d, window, grid_steps, replicas, seed, x=x, parallelism=parallelism)
    reports = []
    keep = []
    dropped = []
    for e in eps:
        hits = (dists <= e).astype(float)
        rep = report_from_samples(hits)
        reports.append(rep)
        if float(np.sum(hits)) >= min_hits:
            keep.append(True)
        else:
            keep.append(False)
            dropped.append(float(e))
    kept = np.asarray(keep)
    if int(np.sum(kept)) < 2:
        raise NumericError("fewer than two radii have enough hits to fit a slope")
    x_fit = np.log(eps[kept])
    p_fit = np.array([r.mean for r, k in zip(reports, kept) if k])
    se_fit = np.array([r.stderr for r, k in zip(reports, kept) if k])
    y_fit = np.log(p_fit)
    y_se = se_fit / p_fit
    xc = x_fit - x_fit.mean()
    coeff = xc / np.sum(xc**2)
    slope = float(np.sum(coeff * y_fit))
    slope_se = float(np.sqrt(np.sum((coeff * y_se) ** 2)))
    return HitScaling(
        d=d,
        eps=eps,
        reports=tuple(reports),
        slope=slope,
        slope_stderr=slope_se,
        dropped=tuple(dropped),
        min_hits=min_hits,
    )


# ---------------------------------------------------------------------------
# Range volume proxy
# ---------------------------------------------------------------------------

def occupancy_volume(points: np.ndarray, box_side: float) -> float:
    """(number of boxes touched) * box_side^d for a point cloud in R^d."""
    if box_side <= 0:
        raise ArgumentError(f"box side must be positive, got {box_side}")
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    codes = np.floor(pts / box_side).astype(np.int64)
    occupied = np.unique(codes, axis=0).shape[0]
    return float(occupied) * box_side ** pts.shape[1]


def range_volume(
    d: int,
    grid_steps: int,
    box_side: float,
    replicas: int,
    seed: Seed,
    parallelism: int = 1,
) -> EstimateReport:
    """Box-occupancy proxy for the volume of W([0, 1]^2) in R^d (upper biased)."""
    if not 1 <= d <= 6:
        raise ArgumentError(f"dimension must lie in [1, 6], got {d}")
    if box_side <= 0:
        raise ArgumentError(f"box side must be positive, got {box_side}")
    # Index space guard: |W| stays within ~4 on [0,1]^2, so 8/box per axis.
    if (8.0 / box_side) ** d > 2.0**62:
        raise ArgumentError(f"box side {box_side} too small for dimension {d} (index overflow)")
    pts = np.linspace(0.0, 1.0, grid_steps + 1)

    def one(rng: np.random.Generator) -> float:
        comps = np.stack([lattice_values(pts, pts, rng).ravel() for _ in range(d)], axis=1)
        return occupancy_volume(comps, box_side)

    cfg = EnsembleConfig(replicas=replicas, seed=seed, parallelism=parallelism)
    return mc_run(one, cfg)


# ---------------------------------------------------------------------------
# Sojourn measure spectrum
# ---------------------------------------------------------------------------

def sym_diff_area(s1, s2, t1, t2):
    """Area of the symmetric difference of [0,s1]x[0,s2] and [0,t1]x[0,t2].

    Equals Var[W(s1, s2) - W(t1, t2)] and dominates
    min(s2, t2) |s1 - t1| + min(s1, t1) |s2 - t2| for every placement.
    """
    return s1 * s2 + t1 * t2 - 2.0 * np.minimum(s1, t1) * np.minimum(s2, t2)


def sojourn_factor(xi_mag: float, rel_tol: float = 1e-10) -> float:
    """One coordinate factor: int_0^inf e^{-2s} / (1 + xi^2 s / 2) ds by quadrature."""
    if xi_mag < 0:
        raise ArgumentError(f"|xi| must be nonnegative, got {xi_mag}")
    if xi_mag == 0.0:
        return 0.5
    a = xi_mag**2 / 2.0

    def f(s: float) -> float:
        return math.exp(-2.0 * s) / (1.0 + a * s)

    split = 2.0 / a
    head, err_h = quad(f, 0.0, split, epsrel=rel_tol, epsabs=0.0, limit=200)
    tail, err_t = quad(f, split, np.inf, epsrel=rel_tol, epsabs=1e-300, limit=200)
    value = head + tail
    if not np.isfinite(value) or (err_h + err_t) > 1e-6 * max(abs(value), 1e-300):
        raise NumericError(f"sojourn factor quadrature failed at |xi| = {xi_mag}")
    return float(value)


def sojourn_tail_factor(xi_mag: float) -> float:
    """Leading large-|xi| form of the factor: (2/xi^2)(log(xi^2/4) - gamma).

    Comes from the small-argument expansion E1(x) = -gamma - log x + O(x)
    of the factor's exact value (2/xi^2) e^{4/xi^2} E1(4/xi^2); the decay
    carries a logarithmic correction on top of xi^-2.
    """
    if xi_mag <= 2.0:
        raise ArgumentError("asymptotic form needs |xi| large")
    return 2.0 / xi_mag**2 * (math.log(xi_mag**2 / 4.0) - EULER_GAMMA)


@dataclass(frozen=True)
class SojournSpectrum:
    """Q(|xi|) = (coordinate factor)^2 along a grid of radii, plus the verdict.

    ``integrable`` records whether int Q(xi) dxi over R^d is finite, which
    holds exactly when d < 4: Q decays like xi^-4 times squared-log
    corrections, so the radial integral converges iff d - 1 - 4 < -1.
    """

    d: int
    xi: np.ndarray
    q_values: np.ndarray
    integrable: bool
    mc_reports: tuple[EstimateReport | None, ...] = ()


def sojourn_Q(d: int, xi_magnitudes: Sequence[float]) -> SojournSpectrum:
    """Quadrature values of the sojourn spectrum and its integrability verdict."""
    if d < 1:
        raise ArgumentError(f"dimension must be >= 1, got {d}")
    xi = np.asarray(list(xi_magnitudes), dtype=float)
    q = np.array([sojourn_factor(float(m)) ** 2 for m in xi])
    return SojournSpectrum(d=d, xi=xi, q_values=q, integrable=d < 4)


def sojourn_fourier_mc(
    d: int,
    xi: Sequence[float],
    replicas: int,
    seed: Seed,
    s_max: float = 10.0,
    grid_steps: int = 64,
    parallelism: int = 1,
) -> EstimateReport:
    """Monte Carlo estimate of E |sigma_hat(xi)|^2 for the killed sojourn measure.

    sigma_hat(xi) = int int e^{-s-t} e^{i xi . W(s,t)} ds dt is evaluated by
    the trapezoid rule on [0, s_max]^2 per replica. At xi = 0 the integrand
    is 1 and the estimate is the deterministic squared weight sum. The
    truncation beyond s_max is noted when its mass e^{-s_max} exceeds 1e-4.
    """
    xi_vec = np.asarray(list(xi), dtype=float)
    if xi_vec.size != d:
        raise ArgumentError(f"xi has {xi_vec.size} coordinates, expected {d}")
    note = ""
    if math.exp(-s_max) >= 1e-4:
        note = f"truncation warning: e^-s_max = {math.exp(-s_max):.3g} >= 1e-4"
    pts = np.linspace(0.0, s_max, grid_steps + 1)
    trap = np.full(pts.size, s_max / grid_steps)
    trap[[0, -1]] *= 0.5
    weights = trap * np.exp(-pts)

    def one(rng: np.random.Generator) -> float:
        phase = np.zeros((pts.size, pts.size))
        for c in range(d):
            if xi_vec[c] != 0.0:
                phase += xi_vec[c] * lattice_values(pts, pts, rng)
            else:
                lattice_values(pts, pts, rng)  # keep stream alignment across xi
        transform = weights @ np.exp(1j * phase) @ weights
        return float(np.abs(transform) ** 2)

    cfg = EnsembleConfig(replicas=replicas, seed=seed, parallelism=parallelism)
    return mc_run(one, cfg, note=note)


# ---------------------------------------------------------------------------
# Level-component pinning probability
# ---------------------------------------------------------------------------

def kendall_event(cd: CornerDecomposition, stride: int = 1) -> bool:
    """Whether the window center strictly dominates the sampled frame boundary.

    The event compares the reconstructed field at (u, v) = (1, 1) against
    every stride-th grid point of the boundary of [0, 2]^2; the common base
    term cancels, so only X, Y, Z enter. A larger stride means fewer
    constraints, so the event is exactly monotone in the stride.
    """
    n_seg = cd.u_grid.size - 1
    if n_seg % 2 != 0:
        raise ArgumentError("corner grid needs an even number of segments to contain u = 1")
    if stride < 1 or n_seg % stride != 0:
        raise ArgumentError(f"stride {stride} must divide the segment count {n_seg}")
    amp = math.sqrt((1.0 - cd.r) * cd.r)
    field = amp * (cd.x[:, None] + cd.y[None, :]) + cd.r * cd.z
    center = field[n_seg // 2, n_seg // 2]
    sel = np.arange(0, n_seg + 1, stride)
    border = max(
        float(field[0, sel].max()),
        float(field[-1, sel].max()),
        float(field[sel, 0].max()),
        float(field[sel, -1].max()),
    )
    return bool(center > border)


def kendall_J(
    r: float, boundary_steps: int, replicas: int, seed: Seed, parallelism: int = 1
) -> EstimateReport:
    """P{the sheet at (1,1) exceeds its value everywhere on the frame of size r}.

    Estimated through the corner decomposition with ``boundary_steps``
    segments per frame side (even, or 1 for the corner-only frame).
    """
    if boundary_steps < 1:
        raise ArgumentError(f"boundary_steps must be >= 1, got {boundary_steps}")
    if boundary_steps == 1:
        steps, stride = 2, 2  # corners only
    elif boundary_steps % 2 == 0:
        steps, stride = boundary_steps, 1
    else:
        raise ArgumentError("boundary_steps must be even (or 1 for corners only)")

    def one(rng: np.random.Generator) -> float:
        cd = corner_values(r, steps, rng)
        return 1.0 if kendall_event(cd, stride=stride) else 0.0

    cfg = EnsembleConfig(replicas=replicas, seed=seed, parallelism=parallelism)
    return mc_run(one, cfg)


def limit_event_indicator(x_vals: np.ndarray, y_vals: np.ndarray, corners_only: bool = False) -> bool:
    """Small-r limit event: X(1) + Y(1) beats X(u) + Y(v) on the frame of [0, 2]^2.

    Paths are sampled on a uniform grid over [0, 2] with an even number of
    segments. The frame maximum separates into side maxima because X and Y
    enter additively.
    """
    n_seg = x_vals.size - 1
    if n_seg % 2 != 0:
        raise ArgumentError("paths need an even number of segments to contain u = 1")
    c = n_seg // 2
    center = x_vals[c] + y_vals[c]
    x_ends = max(float(x_vals[0]), float(x_vals[-1]))
    y_ends = max(float(y_vals[0]), float(y_vals[-1]))
    if corners_only:
        border = max(
            x_vals[0] + y_vals[0], x_vals[0] + y_vals[-1], x_vals[-1] + y_vals[0], x_vals[-1] + y_vals[-1]
        )
    else:
        border = max(x_ends + float(y_vals.max()), float(x_vals.max()) + y_ends)
    return bool(center > border)


def kendall_limit(
    replicas: int, seed: Seed, steps: int = 256, parallelism: int = 1
) -> EstimateReport:
    """Direct estimate of the small-r limit of the pinning probability."""
    if steps < 256 or steps % 2 != 0:
        raise ArgumentError(f"steps must be even and >= 256, got {steps}")
    u = np.linspace(0.0, 2.0, steps + 1)

    def one(rng: np.random.Generator) -> float:
        x = scaled_bm(u, 1.0, rng)
        y = scaled_bm(u, 1.0, rng)
        return 1.0 if limit_event_indicator(x, y) else 0.0

    cfg = EnsembleConfig(replicas=replicas, seed=seed, parallelism=parallelism)
    return mc_run(one, cfg)


@dataclass(frozen=True)
class KendallEstimate:
    """Frame-domination probabilities across radii plus their small-r limit."""

    r_levels: np.ndarray
    reports: tuple[EstimateReport, ...]
    limit: EstimateReport


def kendall_profile(
    r_levels: Sequence[float],
    boundary_steps: int,
    replicas: int,
    seed: Seed,
    limit_replicas: int | None = None,
    parallelism: int = 1,
) -> KendallEstimate:
    """kendall_J across radii on disjoint stream ranges, plus the limit estimate."""
    r_arr = np.asarray(sorted(r_levels, reverse=True), dtype=float)
    reports = []
    for k, r in enumerate(r_arr):
        reports.append(
            kendall_J(float(r), boundary_steps, replicas, seed.child(1000 + k), parallelism=parallelism)
        )
    lim = kendall_limit(limit_replicas or replicas, seed.child(999), parallelism=parallelism)
    return KendallEstimate(r_levels=r_arr, reports=tuple(reports), limit=lim)
