"""Quasi-sure path statistics of the sheet, estimated on grids.

Each estimator evaluates a classical path-regularity statistic uniformly
over the sheet's first coordinate: iterated-logarithm profiles at
geometric t-levels, the uniform continuity modulus, the small-ball
(nondifferentiability) modulus, quadratic variation along nested
partitions, upper-class integral tests, and the Banach-space reflection
inequality for the scaled sup functional.

Suprema over continuous parameters are grid maxima throughout; window
widths must align exactly with the grid (powers of two by convention), so
no fractional windows occur.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
from scipy.integrate import quad
from scipy.optimize import brentq

from ._windows import anchored_oscillation, grid_stride, window_spread_max
from .errors import ArgumentError, RangeError
from .mc import EnsembleConfig, EstimateReport, mc_collect, report_from_samples
from .ou import OUSheet
from .rng import Seed
from .sheet import MultiScaleSheet, SheetField, lattice_values

__all__ = [
    "LILProfile",
    "lil_profile",
    "BlockScan",
    "lil_block_scan",
    "ModulusProfile",
    "levy_modulus",
    "ChungProfile",
    "chung_modulus",
    "NowhereDiffProfile",
    "nowhere_diff_stat",
    "QVProfile",
    "quadratic_variation",
    "PartitionScheme",
    "SummabilityCertificate",
    "partition_dyadic",
    "custom_partitions",
    "PhiAlpha",
    "TabulatedPhi",
    "IntegralTestResult",
    "upper_class_test",
    "reflection_check",
    "CHUNG_CONSTANT",
]

# Small-ball modulus limit constant pi / sqrt(8).
CHUNG_CONSTANT = math.pi / math.sqrt(8.0)


# ---------------------------------------------------------------------------
# Law of the iterated logarithm
# ---------------------------------------------------------------------------

def _loglog_level(theta: float, n: np.ndarray) -> np.ndarray:
    """ln ln theta^n computed stably as ln(n ln theta); requires theta^n > e."""
    inner = n * math.log(theta)
    if np.any(inner <= 1.0):
        raise RangeError(f"ln ln theta^n needs theta^n > e; violated at n = {n[inner <= 1.0].min()}")
    return np.log(inner)


@dataclass(frozen=True)
class LILProfile:
    """Iterated-logarithm ratios W(s, theta^-n) / sqrt(2 s theta^-n ln ln theta^n)."""

    theta: float
    n_values: np.ndarray
    s_grid: np.ndarray
    ratios: np.ndarray  # (n_levels, n_s)
    running_max: np.ndarray  # cumulative in n at each s
    global_sup: float
    argmax: tuple[int, float]  # (n, s) location of the sup


def lil_profile(ms: MultiScaleSheet) -> LILProfile:
    n = ms.n_values.astype(float)
    loglog = _loglog_level(ms.theta, n)
    tau = ms.theta ** (-n)
    denom = np.sqrt(2.0 * np.outer(tau * loglog, ms.s_grid))
    ratios = ms.levels / denom
    running = np.maximum.accumulate(ratios, axis=0)
    flat = int(np.argmax(ratios))
    ni, si = np.unravel_index(flat, ratios.shape)
    return LILProfile(
        theta=ms.theta,
        n_values=ms.n_values,
        s_grid=ms.s_grid,
        ratios=ratios,
        running_max=running,
        global_sup=float(ratios[ni, si]),
        argmax=(int(ms.n_values[ni]), float(ms.s_grid[si])),
    )


@dataclass(frozen=True)
class BlockScan:
    """Per-level occurrence of the lower (E) and upper (F) threshold events."""

    c: float
    eps: float
    e_levels: np.ndarray  # n values carrying an E indicator (n_min .. n_max - 1)
    e_occurred: np.ndarray
    f_levels: np.ndarray  # n values carrying an F indicator (n_min .. n_max)
    f_occurred: np.ndarray


def lil_block_scan(ms: MultiScaleSheet, c: float, eps: float) -> BlockScan:
    """Threshold events behind the iterated-logarithm dichotomy at constant c.

    E_n asks the level increment ratio to clear 1 simultaneously on the
    s-window [1, 1 + eps]; it uses consecutive levels, so it exists for
    n < n_max. F_n asks some s in [1, e] to clear the one-sided bound
    sqrt(2 c s theta^-n ln ln theta^n); the t-supremum over [0, theta^-n]
    is approximated by the available deeper levels m >= n.
    """
    if c <= 0 or eps <= 0:
        raise ArgumentError(f"need c > 0 and eps > 0, got c={c}, eps={eps}")
    n_all = ms.n_values.astype(float)
    loglog = _loglog_level(ms.theta, n_all)
    s = ms.s_grid

    window = s <= 1.0 + eps + 1e-12
    e_levels = ms.n_values[:-1]
    e_occ = np.zeros(e_levels.size, dtype=bool)
    for k in range(e_levels.size):
        delta = ms.theta ** float(-n_all[k]) - ms.theta ** float(-n_all[k] - 1)
        thresh = np.sqrt(2.0 * c * s[window] * delta * loglog[k])
        inc = ms.levels[k, window] - ms.levels[k + 1, window]
        e_occ[k] = bool(np.all(inc >= thresh))

    deep_max = np.maximum.accumulate(ms.levels[::-1], axis=0)[::-1]  # max over m >= n
    f_occ = np.zeros(ms.n_values.size, dtype=bool)
    for k in range(ms.n_values.size):
        thresh = np.sqrt(2.0 * c * s * ms.theta ** float(-n_all[k]) * loglog[k])
        f_occ[k] = bool(np.any(deep_max[k] >= thresh))

    return BlockScan(
        c=c,
        eps=eps,
        e_levels=e_levels,
        e_occurred=e_occ,
        f_levels=ms.n_values.copy(),
        f_occurred=f_occ,
    )


# ---------------------------------------------------------------------------
# Moduli of continuity and nondifferentiability
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ModulusProfile:
    """Uniform-modulus ratios per window width eps.

    ratios[k, i] is the grid supremum of |W(s_i, u) - W(s_i, v)| over
    |u - v| <= eps_k, normalized by sqrt(2 s_i eps_k |log eps_k|);
    sup_ratio is its maximum over the s-grid.
    """

    eps: np.ndarray
    s_grid: np.ndarray
    ratios: np.ndarray  # (n_eps, n_s)
    sup_ratio: np.ndarray
    dt: float


def levy_modulus(sheet: SheetField, eps_levels: Sequence[float]) -> ModulusProfile:
    dt = sheet.grid.dt
    eps = np.asarray(sorted(eps_levels, reverse=True), dtype=float)
    s = sheet.s_points
    if s[0] <= 0:
        raise ArgumentError("modulus normalization needs strictly positive s")
    ratios = np.empty((eps.size, s.size))
    for k, e in enumerate(eps):
        if e < 2.0 * dt:
            raise ArgumentError(f"window {e} below resolution 2*dt = {2 * dt}")
        strides = grid_stride(e, dt)
        spread = window_spread_max(sheet.values, strides)
        ratios[k] = spread / np.sqrt(2.0 * s * e * abs(math.log(e)))
    return ModulusProfile(eps=eps, s_grid=s.copy(), ratios=ratios, sup_ratio=ratios.max(axis=1), dt=dt)


@dataclass(frozen=True)
class ChungProfile:
    """Small-ball modulus statistic per s: the smallest local oscillation.

    stats[i] = inf_{t <= T} sup_{u <= eps} |row_i(t + u) - row_i(t)|
    normalized by sqrt(eps / |log eps|); the limit constant is pi/sqrt(8).
    """

    eps: float
    t_max: float
    s_values: np.ndarray
    stats: np.ndarray
    sup: float
    inf: float


def chung_modulus(field: SheetField | OUSheet, eps: float, t_max: float) -> ChungProfile:
    """Small-ball modulus over the s-grid of a sheet window or OU sheet.

    Sheet rows are rescaled by 1/sqrt(s) so every row is a standard Wiener
    path in law; OU rows are used as is. Requires grid resolution
    dt <= eps/32 and anchors up to t_max with the window inside the grid.
    """
    if isinstance(field, OUSheet):
        rows = field.values
        s_vals = field.s_grid
        t_grid = field.t_grid
    else:
        s_vals = field.s_points
        if s_vals[0] <= 0:
            raise ArgumentError("small-ball normalization needs strictly positive s")
        rows = field.values / np.sqrt(s_vals)[:, None]
        t_grid = field.t_points
    dt = t_grid[1] - t_grid[0]
    if dt > eps / 32.0 + 1e-15:
        raise ArgumentError(f"grid step {dt} exceeds eps/32 = {eps / 32.0}")
    strides = grid_stride(eps, dt)
    osc = anchored_oscillation(rows, strides)
    n_anchor = min(osc.shape[1], int(math.floor(t_max / dt + 1e-9)) + 1)
    if n_anchor < 1:
        raise ArgumentError(f"no anchors available below t_max = {t_max}")
    stats = osc[:, :n_anchor].min(axis=1) / math.sqrt(eps / abs(math.log(eps)))
    return ChungProfile(
        eps=eps,
        t_max=t_max,
        s_values=np.asarray(s_vals, dtype=float).copy(),
        stats=stats,
        sup=float(stats.max()),
        inf=float(stats.min()),
    )


@dataclass(frozen=True)
class NowhereDiffProfile:
    """n * (smallest forward oscillation over window 1/n), per n; diverges in n."""

    n_values: np.ndarray
    stats: np.ndarray
    t_max: float


def nowhere_diff_stat(sheet: SheetField, n_levels: Sequence[int], t_max: float) -> NowhereDiffProfile:
    """inf over (s, t <= t_max) of sup_{u <= 1/n} |W(s, t+u) - W(s, t)|, scaled by n."""
    t_grid = sheet.t_points
    dt = sheet.grid.dt
    n_arr = np.asarray(sorted(n_levels), dtype=int)
    stats = np.empty(n_arr.size)
    for k, n in enumerate(n_arr):
        if dt > 1.0 / (32.0 * n) + 1e-15:
            raise ArgumentError(f"grid step {dt} exceeds 1/(32 n) for n = {n}")
        strides = grid_stride(1.0 / n, dt)
        osc = anchored_oscillation(sheet.values, strides)
        n_anchor = min(osc.shape[1], int(math.floor(t_max / dt + 1e-9)) + 1)
        stats[k] = float(osc[:, :n_anchor].min()) * n
    return NowhereDiffProfile(n_values=n_arr, stats=stats, t_max=t_max)


# ---------------------------------------------------------------------------
# Quadratic variation
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SummabilityCertificate:
    """Witness that the mesh sequence of a partition family is summable."""

    partial_sum: float
    tail_bound: float | None
    description: str

    @property
    def total_bound(self) -> float | None:
        if self.tail_bound is None:
            return None
        return self.partial_sum + self.tail_bound


@dataclass(frozen=True)
class PartitionScheme:
    """Nested partitions of [0, 1] with a summable-mesh certificate.

    ``levels`` maps the partition size n to its points
    0 = p_0 < ... < p_n = 1. Mesh summability over the family is recorded
    in ``certificate`` (a geometric tail bound for the dyadic generator, a
    finite partial sum only for custom lists).
    """

    kind: str
    levels: dict[int, np.ndarray]
    certificate: SummabilityCertificate

    @property
    def sizes(self) -> list[int]:
        return sorted(self.levels)

    def points(self, n: int) -> np.ndarray:
        if n not in self.levels:
            raise ArgumentError(f"partition size {n} not in scheme (available: {self.sizes})")
        return self.levels[n]

    def mesh(self, n: int) -> float:
        return float(np.max(np.diff(self.points(n))))


def _validate_partition(points: np.ndarray) -> None:
    if points[0] != 0.0 or points[-1] != 1.0 or np.any(np.diff(points) <= 0):
        raise ArgumentError("partition points must increase strictly from 0 to 1")


def partition_dyadic(n_max: int) -> PartitionScheme:
    """Dyadic partitions j / 2^k for k = 0 .. n_max; mesh 2^-k exactly.

    Level k = 0 is the trivial partition {0, 1} carrying the single-term
    identity. The mesh series is geometric: partial sum 2 - 2^-n_max over
    the included levels, tail below 2^-n_max.
    """
    if n_max < 1:
        raise ArgumentError(f"n_max must be >= 1, got {n_max}")
    levels = {}
    for k in range(0, n_max + 1):
        n = 2**k
        levels[n] = np.arange(n + 1) / n
    partial = 2.0 - 2.0 ** (-n_max)
    cert = SummabilityCertificate(
        partial_sum=partial,
        tail_bound=2.0 ** (-n_max),
        description="geometric meshes 2^-k; full series sums to 2",
    )
    return PartitionScheme(kind="dyadic", levels=levels, certificate=cert)


def custom_partitions(point_lists: Sequence[Sequence[float]]) -> PartitionScheme:
    """Scheme from explicit partition lists; only the finite mesh sum is certified."""
    levels = {}
    meshes = []
    for pts in point_lists:
        arr = np.asarray(pts, dtype=float)
        _validate_partition(arr)
        levels[arr.size - 1] = arr
        meshes.append(float(np.max(np.diff(arr))))
    if not levels:
        raise ArgumentError("need at least one partition")
    cert = SummabilityCertificate(
        partial_sum=float(np.sum(meshes)),
        tail_bound=None,
        description="finite partial sum over the provided levels; no tail proof",
    )
    return PartitionScheme(kind="custom", levels=levels, certificate=cert)


@dataclass(frozen=True)
class QVProfile:
    """Centered quadratic variation V_n(s, t) per s-row and its sup over s."""

    n: int
    t: float
    s_values: np.ndarray
    vn: np.ndarray
    sup_abs: float
    snap_distance: float


def quadratic_variation(sheet: SheetField, scheme: PartitionScheme, n: int, t: float) -> QVProfile:
    """V_n(s, t) = sum_j (W(s, p_j t) - W(s, p_{j-1} t))^2 - s t over the s-grid.

    Partition points are snapped to the t-grid; the largest snap distance
    is reported. Coinciding snapped points mean the depth exceeds the grid
    resolution, which is an error.
    """
    if sheet.grid.t_min != 0.0:
        raise ArgumentError("quadratic variation needs a t-grid anchored at 0")
    if not 0.0 < t <= sheet.grid.t_max + 1e-12:
        raise ArgumentError(f"t = {t} outside the sheet window (0, {sheet.grid.t_max}]")
    pts = scheme.points(n) * t
    dt = sheet.grid.dt
    idx = np.rint(pts / dt).astype(int)
    if np.any(np.diff(idx) < 1):
        raise ArgumentError(f"partition size {n} exceeds the t-grid resolution")
    snap = float(np.max(np.abs(idx * dt - pts)))
    inc = np.diff(sheet.values[:, idx], axis=1)
    vn = np.sum(inc**2, axis=1) - sheet.s_points * t
    return QVProfile(
        n=n,
        t=t,
        s_values=sheet.s_points.copy(),
        vn=vn,
        sup_abs=float(np.max(np.abs(vn))),
        snap_distance=snap,
    )


# ---------------------------------------------------------------------------
# Upper-class integral tests
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class PhiAlpha:
    """phi_alpha(t) = sqrt(2 log log t + alpha log log log t), clamped at 0.

    In the variable v = log log t the squared function is 2v + alpha ln v,
    so the integral-test integrand becomes (2v + alpha ln v)^{k/2} v^{-alpha/2}
    with an exactly known tail exponent (k - alpha) / 2.
    """

    alpha: float

    def __post_init__(self) -> None:
        if self.alpha <= 0:
            raise ArgumentError(f"alpha must be positive, got {self.alpha}")

    def squared_in_v(self, v: np.ndarray) -> np.ndarray:
        return np.maximum(2.0 * v + self.alpha * np.log(v), 0.0)

    def tail_exponent(self, k: int) -> float:
        return (k - self.alpha) / 2.0


@dataclass(frozen=True)
class TabulatedPhi:
    """A user-supplied increasing function of the large parameter t > 4."""

    t_values: np.ndarray
    phi_values: np.ndarray

    def __post_init__(self) -> None:
        t = np.asarray(self.t_values, dtype=float)
        p = np.asarray(self.phi_values, dtype=float)
        if t.ndim != 1 or t.size < 2 or t.shape != p.shape:
            raise ArgumentError("tabulated phi needs matching 1-d arrays of length >= 2")
        if np.any(np.diff(t) <= 0):
            raise ArgumentError("tabulation grid must increase strictly")
        if np.any(p < 0) or np.any(np.diff(p) < 0):
            raise ArgumentError("phi must be positive and nondecreasing on the domain")

    def squared_in_v(self, v: np.ndarray) -> np.ndarray:
        t = np.exp(np.exp(v))
        phi = np.interp(t, self.t_values, self.phi_values)
        return phi**2


@dataclass(frozen=True)
class IntegralTestResult:
    which: str
    verdict: str  # "converges" | "diverges"
    partial_value: float
    tail_bound_used: str
    alpha: float | None = None


_TEST_POWERS = {"erdos": 1, "mountford": 3}
_DEFAULT_CUTOFF = 1e12


def upper_class_test(
    phi: PhiAlpha | TabulatedPhi, which: str, cutoff: float = _DEFAULT_CUTOFF
) -> IntegralTestResult:
    """Convergence test for the upper-class integral of phi.

    Evaluates ``int_4^cutoff phi^k(t) exp(-phi^2(t)/2) dt/t`` (k = 1 for the
    almost-sure test, k = 3 for the quasi-sure one) by adaptive quadrature
    after the substitution v = log log t, and decides convergence from the
    analytic tail exponent of the transformed integrand, never from the
    quadrature value: the integrand decays like v^p with p = (k - alpha)/2
    for the three-log family, and the tail integral converges iff p < -1.
    For tabulated functions the exponent is fitted from the integrand slope
    near the cutoff.
    """
    if which not in _TEST_POWERS:
        raise ArgumentError(f"unknown test {which!r}; valid: {sorted(_TEST_POWERS)}")
    k = _TEST_POWERS[which]
    v_lo = math.log(math.log(4.0))
    v_hi = math.log(math.log(cutoff))

    def integrand(v: float) -> float:
        # phi^k e^{-phi^2/2} dt/t in the variable v = loglog t; dt/t = e^v dv.
        sq = float(phi.squared_in_v(np.asarray([v]))[0])
        if sq <= 0.0:
            return 0.0
        return sq ** (k / 2.0) * math.exp(v - sq / 2.0)

    # Split the quadrature at the clamp boundary phi^2 = 0 if one exists.
    def signed_sq(v: float) -> float:
        if isinstance(phi, PhiAlpha):
            return 2.0 * v + phi.alpha * math.log(v)
        return float(phi.squared_in_v(np.asarray([v]))[0])

    breaks = []
    if signed_sq(v_lo) <= 0.0 < signed_sq(v_hi):
        grid = np.linspace(v_lo, v_hi, 257)
        vals = np.array([signed_sq(float(v)) for v in grid])
        cross = int(np.argmax(vals > 0.0))
        if cross > 0:
            breaks = [float(brentq(signed_sq, grid[cross - 1], grid[cross]))]
    partial, _ = quad(integrand, v_lo, v_hi, points=breaks or None, limit=200)

    if isinstance(phi, PhiAlpha):
        p = phi.tail_exponent(k)
        verdict = "converges" if p < -1.0 else "diverges"
        tail = f"transformed integrand ~ v^{p:g} at v = loglog t; threshold p < -1"
    else:
        v_probe = np.exp(np.linspace(math.log(v_hi) - 0.7, math.log(v_hi), 12))
        vals = np.array([integrand(float(v)) for v in v_probe])
        if np.any(vals <= 0):
            verdict = "converges"
            tail = "integrand vanishes near the cutoff"
        else:
            slope = np.polyfit(np.log(v_probe), np.log(vals), 1)[0]
            verdict = "converges" if slope < -1.0 else "diverges"
            tail = f"fitted integrand slope {slope:.3f} in log v; threshold -1"
    alpha = phi.alpha if isinstance(phi, PhiAlpha) else None
    return IntegralTestResult(
        which=which, verdict=verdict, partial_value=float(partial), tail_bound_used=tail, alpha=alpha
    )


# ---------------------------------------------------------------------------
# Reflection inequality for the scaled sup functional
# ---------------------------------------------------------------------------

def reflection_check(
    t_max: float,
    lam: float,
    replicas: int,
    seed: Seed,
    s_steps: int = 64,
    t_steps: int = 128,
    parallelism: int = 1,
) -> tuple[EstimateReport, EstimateReport]:
    """Both sides of the reflection bound for N(f) = sup_s |f(s)| / sqrt(s).

    With B(t) the function s -> W(s, t) on [1, e], estimates
    lhs = P{sup_{t <= T} N(B(t)) >= lam} and rhs = P{N(B(T)) >= lam} on the
    same ensemble. The seminorm is nonnegative, so lam = 0 gives both
    probabilities exactly 1; negative lam is an error. The reflection
    inequality asserts lhs <= 2 rhs.
    """
    if lam < 0:
        raise ArgumentError(f"threshold must be nonnegative, got {lam}")
    if t_max <= 0:
        raise ArgumentError(f"time horizon must be positive, got {t_max}")
    if lam == 0.0:
        one = EstimateReport(mean=1.0, stderr=0.0, replicas=replicas, ci95=(1.0, 1.0))
        return one, one
    s_pts = np.linspace(1.0, math.e, s_steps + 1)
    t_pts = np.linspace(0.0, t_max, t_steps + 1)
    scale = np.sqrt(s_pts)[:, None]

    def one(rng: np.random.Generator) -> np.ndarray:
        w = lattice_values(s_pts, t_pts, rng)
        seminorm = np.max(np.abs(w) / scale, axis=0)
        return np.array([float(np.max(seminorm) >= lam), float(seminorm[-1] >= lam)])

    cfg = EnsembleConfig(replicas=replicas, seed=seed, parallelism=parallelism)
    rows = mc_collect(one, cfg)
    return report_from_samples(rows[:, 0]), report_from_samples(rows[:, 1])
