"""The Ornstein-Uhlenbeck process on path space.

``U(s, t) = e^{-s/2} W(e^s, t)`` turns the Brownian sheet into a stationary
path-valued diffusion ``Y_s = U(s, .)`` whose invariant law is Wiener
measure. This module exposes the transform, the exact one-step Gaussian
transition ``y -> sqrt(1 - e^{-s}) B + e^{-s/2} y``, Monte Carlo averaging
of path functionals under that transition semigroup, hitting-probability
estimation for path events under exponential killing, and a statistical
harness for the sheet's s-direction strong Markov property.

Trajectories of Y are realized on a discrete s-grid by sampling the sheet
on the lattice ``{e^s} x {t}`` and rescaling; this agrees in law with
composing exact one-step transitions, so the only discretization effect is
event detection between grid times.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from ._windows import grid_stride, window_spread_max
from .errors import ArgumentError, NumericError
from .mc import (
    CovarianceEntry,
    EnsembleConfig,
    EstimateReport,
    covariance_table,
    mc_collect,
    mc_run,
    report_from_samples,
)
from .rng import Seed
from .sheet import Path, SheetField, lattice_values, wiener_path

__all__ = [
    "OUSheet",
    "OUTrajectory",
    "PathFunctional",
    "PathEvent",
    "ou_from_sheet",
    "sample_ou_trajectory",
    "ou_propagate",
    "propagate",
    "mehler_apply",
    "mehler_symmetry_check",
    "capacity_estimate",
    "strong_markov_test",
    "MarkovTestReport",
]


@dataclass(frozen=True)
class OUSheet:
    """U(s, t) on a product grid; every s-slice is a standard Wiener path in law."""

    s_grid: np.ndarray
    t_grid: np.ndarray
    values: np.ndarray  # (len(s_grid), len(t_grid))

    def snapshot(self, k: int) -> Path:
        return Path(t=self.t_grid.copy(), x=self.values[k].copy())


@dataclass(frozen=True)
class OUTrajectory:
    """Path-valued snapshots Y_s = U(s, .) along an s-grid."""

    s_grid: np.ndarray
    t_grid: np.ndarray
    values: np.ndarray  # (len(s_grid), len(t_grid))

    def snapshot(self, k: int) -> Path:
        return Path(t=self.t_grid.copy(), x=self.values[k].copy())


_FUNCTIONAL_KINDS = ("eval", "square-eval", "sup", "integral", "sign-zero")


@dataclass(frozen=True)
class PathFunctional:
    """A scalar functional of a sampled path; bounded on bounded path sets.

    ``eval`` and ``square-eval`` read the value at t0 (snapped to the
    nearest grid point), ``sup`` takes the grid maximum, ``integral`` the
    trapezoid integral, ``sign-zero`` the sign of the value at t0.
    """

    kind: str
    t0: float | None = None

    def __post_init__(self) -> None:
        if self.kind not in _FUNCTIONAL_KINDS:
            raise ArgumentError(f"unknown functional kind {self.kind!r}, valid: {_FUNCTIONAL_KINDS}")
        if self.kind in ("eval", "square-eval", "sign-zero") and self.t0 is None:
            raise ArgumentError(f"functional kind {self.kind!r} needs t0")

    def __call__(self, path: Path) -> float:
        if self.kind == "eval":
            return float(path.x[path.index_of(self.t0)])
        if self.kind == "square-eval":
            return float(path.x[path.index_of(self.t0)]) ** 2
        if self.kind == "sup":
            return float(np.max(path.x))
        if self.kind == "integral":
            return float(np.trapezoid(path.x, path.t))
        return float(np.sign(path.x[path.index_of(self.t0)]))


_EVENT_KINDS = ("zero-crossing-at", "sup-exceeds", "modulus-violation", "all", "none")


@dataclass(frozen=True)
class PathEvent:
    """A grid-checkable path-space event.

    ``sup-exceeds(level)`` and ``modulus-violation(eps, c)`` are evaluated
    per snapshot. ``zero-crossing-at(t0)`` is the set {f : f(t0) = 0}; a
    single snapshot hits it with probability zero, so hitting along a
    trajectory is detected through sign changes of s -> Y_s(t0) between
    adjacent grid times. That undercounts tangential zeros, which only
    lowers hitting estimates. Crossing detection sees a superset of sign
    changes under grid refinement.
    """

    kind: str
    t0: float | None = None
    level: float | None = None
    eps: float | None = None
    c: float | None = None

    def __post_init__(self) -> None:
        if self.kind not in _EVENT_KINDS:
            raise ArgumentError(f"unknown event kind {self.kind!r}, valid: {_EVENT_KINDS}")
        if self.kind == "zero-crossing-at" and self.t0 is None:
            raise ArgumentError("zero-crossing-at needs t0")
        if self.kind == "sup-exceeds" and self.level is None:
            raise ArgumentError("sup-exceeds needs a level")
        if self.kind == "modulus-violation" and (self.eps is None or self.c is None):
            raise ArgumentError("modulus-violation needs eps and c")

    def holds_snapshot(self, t_grid: np.ndarray, x: np.ndarray) -> bool:
        """Whether one path belongs to the event set (grid evaluation)."""
        if self.kind == "all":
            return True
        if self.kind == "none":
            return False
        if self.kind == "sup-exceeds":
            return bool(np.max(x) >= self.level)
        if self.kind == "modulus-violation":
            dt = t_grid[1] - t_grid[0]
            k = grid_stride(self.eps, dt)
            ratio = window_spread_max(x, k) / math.sqrt(2.0 * self.eps * abs(math.log(self.eps)))
            return bool(ratio > self.c)
        idx = int(np.argmin(np.abs(t_grid - self.t0)))
        return bool(x[idx] == 0.0)

    def hit_along(self, traj: OUTrajectory, n_active: int) -> bool:
        """Whether the trajectory enters the event among its first n_active snapshots."""
        if n_active < 1:
            return False
        if self.kind == "all":
            return True
        if self.kind == "none":
            return False
        if self.kind == "zero-crossing-at":
            idx = int(np.argmin(np.abs(traj.t_grid - self.t0)))
            v = traj.values[:n_active, idx]
            if np.any(v == 0.0):
                return True
            return bool(np.any(np.sign(v[1:]) != np.sign(v[:-1])))
        return any(self.holds_snapshot(traj.t_grid, traj.values[k]) for k in range(n_active))


def ou_from_sheet(sheet: SheetField, s_max: float) -> OUSheet:
    """Evaluate U(s, t) = e^{-s/2} W(e^s, t) on the sheet's own lattice.

    The sheet window must span [1, e^{s_max}] in its first coordinate; the
    OU s-grid is the log of the sheet's first-coordinate points inside that
    range, so no interpolation happens. A log-spaced sheet grid gives a
    uniform OU grid.
    """
    if s_max < 0:
        raise ArgumentError(f"s_max must be nonnegative, got {s_max}")
    s_pts = sheet.s_points
    top = math.exp(s_max)
    tol = 1e-9
    if s_pts[0] > 1.0 + tol or s_pts[-1] < top - tol:
        raise ArgumentError(
            f"sheet window [{s_pts[0]}, {s_pts[-1]}] does not cover [1, {top}]"
        )
    keep = (s_pts >= 1.0 - tol) & (s_pts <= top + tol)
    coords = s_pts[keep]
    u = sheet.values[keep] / np.sqrt(coords)[:, None]
    return OUSheet(s_grid=np.log(coords), t_grid=sheet.t_points.copy(), values=u)


def ou_trajectory_values(s_grid: np.ndarray, t_grid: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """Exact joint sample of U on s_grid x t_grid via the sheet lattice on {e^s}."""
    coords = np.exp(np.asarray(s_grid, dtype=float))
    w = lattice_values(coords, t_grid, rng)
    return w / np.sqrt(coords)[:, None]


def sample_ou_trajectory(s_grid: np.ndarray, t_grid: np.ndarray, seed: Seed) -> OUTrajectory:
    """Trajectory of Y on an s-grid, exact in law at the grid times."""
    s = np.asarray(s_grid, dtype=float)
    if s[0] < 0:
        raise ArgumentError("trajectory s-grid must be nonnegative")
    values = ou_trajectory_values(s, np.asarray(t_grid, dtype=float), seed.stream(0))
    return OUTrajectory(s_grid=s, t_grid=np.asarray(t_grid, dtype=float), values=values)


def propagate(x: Path, s: float, rng: np.random.Generator) -> Path:
    """One exact transition of Y from state x over time s.

    Returns ``sqrt(1 - e^{-s}) B + e^{-s/2} x`` with B a fresh Wiener path
    on x's grid. s = 0 returns x unchanged and draws nothing.
    """
    if s < 0:
        raise ArgumentError(f"transition time must be nonnegative, got {s}")
    if s == 0.0:
        return Path(t=x.t.copy(), x=x.x.copy())
    fresh = wiener_path(x.t, rng)
    decay = math.exp(-s)
    return Path(t=x.t.copy(), x=math.sqrt(1.0 - decay) * fresh.x + math.sqrt(decay) * x.x)


def ou_propagate(x: Path, s: float, seed: Seed) -> Path:
    """Seeded wrapper around :func:`propagate`."""
    return propagate(x, s, seed.stream(0))


def mehler_apply(
    f: PathFunctional, x: Path, s: float, replicas: int, seed: Seed, parallelism: int = 1
) -> EstimateReport:
    """Monte Carlo average of f under the transition semigroup started at x.

    Estimates ``E[f(sqrt(1 - e^{-s}) y + e^{-s/2} x)]`` over Wiener samples
    y. At s = 0 the average is f(x) exactly with zero spread. Non-finite
    sample means are flagged in the report note rather than raised.
    """
    if s < 0:
        raise ArgumentError(f"semigroup time must be nonnegative, got {s}")
    if replicas < 2:
        raise ArgumentError(f"replicas must be >= 2, got {replicas}")
    if s == 0.0:
        value = f(x)
        return EstimateReport(mean=value, stderr=0.0, replicas=replicas, ci95=(value, value))
    cfg = EnsembleConfig(replicas=replicas, seed=seed, parallelism=parallelism)
    return mc_run(lambda rng: f(propagate(x, s, rng)), cfg)


def mehler_symmetry_check(
    f: PathFunctional,
    g: PathFunctional,
    s: float,
    replicas: int,
    seed: Seed,
    t_steps: int = 256,
    parallelism: int = 1,
) -> tuple[EstimateReport, EstimateReport]:
    """Estimates of <g, T_s f> and <T_s g, f> under the invariant (Wiener) law.

    Each side draws a stationary start x and one transition sample; the two
    sides use disjoint stream ranges. The semigroup is symmetric, so the
    two 95% intervals should overlap.
    """
    if s < 0:
        raise ArgumentError(f"semigroup time must be nonnegative, got {s}")
    t_grid = np.linspace(0.0, 1.0, t_steps + 1)

    def one_side(outer: PathFunctional, inner: PathFunctional, rng: np.random.Generator) -> float:
        x = wiener_path(t_grid, rng)
        z = propagate(x, s, rng)
        return outer(x) * inner(z)

    cfg_a = EnsembleConfig(replicas=replicas, seed=seed, parallelism=parallelism)
    cfg_b = EnsembleConfig(replicas=replicas, seed=seed, parallelism=parallelism, stream_offset=replicas)
    lhs = report_from_samples(mc_collect(lambda rng: one_side(g, f, rng), cfg_a))
    rhs = report_from_samples(mc_collect(lambda rng: one_side(f, g, rng), cfg_b))
    return lhs, rhs


def capacity_estimate(
    event: PathEvent,
    s_horizon_max: float = 10.0,
    s_steps: int = 1000,
    t_steps: int = 64,
    replicas: int = 1000,
    seed: Seed = Seed(0),
    parallelism: int = 1,
) -> EstimateReport:
    """Probability that Y hits the event before an independent Exp(1) kill time.

    Per replica, the kill time E is drawn first and truncated at
    ``s_horizon_max``; the trajectory is then scanned over the grid times
    s <= E. For trivial events the estimate is exact and nothing is drawn.
    The report notes the truncation when the lost mass e^{-horizon}
    exceeds 1%.
    """
    if replicas < 100:
        raise ArgumentError(f"capacity estimation needs >= 100 replicas, got {replicas}")
    if s_horizon_max <= 0 or s_steps < 1:
        raise ArgumentError("horizon and s_steps must be positive")
    note = ""
    lost = math.exp(-s_horizon_max)
    if lost > 0.01:
        note = f"truncation warning: kill-time mass beyond horizon = {lost:.3g}"
    if event.kind in ("all", "none"):
        value = 1.0 if event.kind == "all" else 0.0
        return EstimateReport(mean=value, stderr=0.0, replicas=replicas, ci95=(value, value), note=note)

    s_grid = np.linspace(0.0, s_horizon_max, s_steps + 1)
    t_grid = np.linspace(0.0, 1.0, t_steps + 1)

    def one(rng: np.random.Generator) -> float:
        kill = min(float(rng.exponential()), s_horizon_max)
        n_active = int(np.searchsorted(s_grid, kill, side="right"))
        values = ou_trajectory_values(s_grid, t_grid, rng)
        traj = OUTrajectory(s_grid=s_grid, t_grid=t_grid, values=values)
        return 1.0 if event.hit_along(traj, n_active) else 0.0

    cfg = EnsembleConfig(replicas=replicas, seed=seed, parallelism=parallelism)
    return mc_run(one, cfg, note=note)


@dataclass(frozen=True)
class MarkovCovEntry:
    i: int
    j: int
    cov: float
    oracle: float
    stderr: float


@dataclass(frozen=True)
class MarkovCorrEntry:
    lag_index: int
    statistic: str
    corr: float
    stderr: float


@dataclass(frozen=True)
class MarkovTestReport:
    """Covariance and independence diagnostics for post-stopping increments.

    ``cov`` compares the increment sheet D(s, t) = W(S + s, t) - W(S, t)
    against the fresh-sheet covariance min(s, s') min(t, t'); ``pre_corr``
    holds correlations between D and pre-S statistics, which should vanish.
    """

    lags: tuple[tuple[float, float], ...]
    cov: tuple[MarkovCovEntry, ...]
    pre_corr: tuple[MarkovCorrEntry, ...]
    replicas_used: int
    unfired: int

    def max_cov_sigma(self) -> float:
        return max(abs(e.cov - e.oracle) / e.stderr for e in self.cov)

    def max_corr_sigma(self) -> float:
        return max(abs(e.corr) / e.stderr for e in self.pre_corr)


def strong_markov_test(
    lam: float,
    lags: Sequence[tuple[float, float]],
    replicas: int,
    seed: Seed,
    s_step: float = 0.05,
    horizon: float = 10.0,
    t_steps: int = 64,
    parallelism: int = 1,
) -> MarkovTestReport:
    """Statistical check that the sheet restarts freshly after a stopping time.

    S is the first grid s with ``sup_t |W(s, t)| >= lam`` over t in [0, 1].
    Lag offsets must sit on the s-grid. Replicas whose rule never fires
    before the horizon are dropped; more than 1% of them is an error.
    """
    if lam < 0:
        raise ArgumentError(f"stopping level must be nonnegative, got {lam}")
    if not lags:
        raise ArgumentError("need at least one lag")
    lag_list = [(float(a), float(b)) for a, b in lags]
    offsets = []
    for a, _ in lag_list:
        k = a / s_step
        if abs(k - round(k)) > 1e-9 or round(k) < 0:
            raise ArgumentError(f"lag offset {a} must be a multiple of the s-step {s_step}")
        offsets.append(int(round(k)))
    max_off = max(offsets)
    t_max = max(1.0, max(b for _, b in lag_list))
    t_grid = np.linspace(0.0, t_max, t_steps + 1)
    t_idx = [int(np.argmin(np.abs(t_grid - b))) for _, b in lag_list]
    stop_cols = t_grid <= 1.0 + 1e-12
    n_horizon = int(round(horizon / s_step))
    s_grid = np.arange(0, n_horizon + max_off + 1) * s_step
    s_grid[0] = 0.0
    n_lags = len(lag_list)

    def one(rng: np.random.Generator) -> np.ndarray:
        w = lattice_values(s_grid, t_grid, rng)
        sup_slice = np.max(np.abs(w[: n_horizon + 1, stop_cols]), axis=1)
        fired = np.flatnonzero(sup_slice >= lam)
        out = np.full(2 * n_lags + 1, np.nan)
        if fired.size == 0:
            return out
        s_idx = int(fired[0])
        for m, (off, col) in enumerate(zip(offsets, t_idx)):
            out[m] = w[s_idx + off, col] - w[s_idx, col]  # D(s_m, t_m)
            out[n_lags + 1 + m] = w[s_idx, col]  # pre-S slice value
        out[n_lags] = s_grid[s_idx]  # S itself
        return out

    cfg = EnsembleConfig(replicas=replicas, seed=seed, parallelism=parallelism)
    rows = mc_collect(one, cfg)
    good = ~np.isnan(rows[:, 0])
    unfired = int(np.sum(~good))
    if unfired > 0.01 * replicas:
        raise NumericError(
            f"stopping rule failed to fire before horizon in {unfired}/{replicas} replicas"
        )
    rows = rows[good]
    n_used = rows.shape[0]

    pairs = [(i, j) for i in range(n_lags) for j in range(i, n_lags)]
    table = covariance_table(rows[:, :n_lags], pairs)
    cov_entries = []
    for e in table.entries:
        (si, ti), (sj, tj) = lag_list[e.i], lag_list[e.j]
        cov_entries.append(
            MarkovCovEntry(i=e.i, j=e.j, cov=e.cov, oracle=min(si, sj) * min(ti, tj), stderr=e.stderr)
        )

    corr_entries = []
    corr_stderr = 1.0 / math.sqrt(n_used)
    stats = {"S": rows[:, n_lags]}
    for m in range(n_lags):
        stats[f"W(S,t{m})"] = rows[:, n_lags + 1 + m]
    for m in range(n_lags):
        d = rows[:, m]
        for name, col in stats.items():
            if np.std(col) == 0.0 or np.std(d) == 0.0:
                corr = 0.0  # degenerate pre-statistic (deterministic S)
            else:
                corr = float(np.corrcoef(d, col)[0, 1])
            corr_entries.append(
                MarkovCorrEntry(lag_index=m, statistic=name, corr=corr, stderr=corr_stderr)
            )

    return MarkovTestReport(
        lags=tuple(lag_list),
        cov=tuple(cov_entries),
        pre_corr=tuple(corr_entries),
        replicas_used=n_used,
        unfired=unfired,
    )
