"""Exact lattice sampling of planar white noise and the Brownian sheet.

The sheet W is realized as the distribution function of white noise on a
rectangular lattice: every cell receives an independent centered Gaussian
whose variance equals its area, and W at a node is the total mass of
``[0, s] x [0, t]``. Every sampler here reduces to one such block draw, so
rectangle increments are independent at grid resolution by construction,
which is the structure all downstream estimators rely on.

Windows that exclude the origin receive the mass of the unsampled region
through the lower-left corner value plus first-row and first-column strip
increments, reproducing the exact joint covariance
``min(s, s') * min(t, t')`` without simulating ``[0, s0] x [0, t0]``.

Suprema over continuous ranges are everywhere approximated by grid maxima;
grid resolution is an explicit parameter of each request.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import IO, Sequence

import numpy as np

from .errors import ArgumentError, RangeError
from .rng import Seed

__all__ = [
    "GridSpec",
    "WhiteNoiseField",
    "SheetField",
    "MultiScaleSheet",
    "CornerDecomposition",
    "Path",
    "lattice_values",
    "scaled_bm",
    "wiener_path",
    "sample_white_noise",
    "sheet_from_white_noise",
    "sample_sheet",
    "sample_sheet_d",
    "sample_multiscale",
    "sample_corner",
    "slice_t",
    "rect_increment",
    "sheet_to_csv",
]


@dataclass(frozen=True)
class GridSpec:
    """A rectangular window with a uniform lattice on it.

    ``s_steps`` and ``t_steps`` count cells; node arrays have one more
    point per axis. Degenerate (zero-area) windows are rejected.
    """

    s_min: float
    s_max: float
    t_min: float
    t_max: float
    s_steps: int
    t_steps: int

    def __post_init__(self) -> None:
        if not (self.s_min < self.s_max and self.t_min < self.t_max):
            raise ArgumentError(
                f"grid window must have positive area, got "
                f"[{self.s_min}, {self.s_max}] x [{self.t_min}, {self.t_max}]"
            )
        if self.s_min < 0 or self.t_min < 0:
            raise ArgumentError("grid window must lie in the closed first quadrant")
        if self.s_steps < 1 or self.t_steps < 1:
            raise ArgumentError(f"step counts must be positive, got {self.s_steps}, {self.t_steps}")

    @property
    def ds(self) -> float:
        return (self.s_max - self.s_min) / self.s_steps

    @property
    def dt(self) -> float:
        return (self.t_max - self.t_min) / self.t_steps

    @property
    def s_points(self) -> np.ndarray:
        return np.linspace(self.s_min, self.s_max, self.s_steps + 1)

    @property
    def t_points(self) -> np.ndarray:
        return np.linspace(self.t_min, self.t_max, self.t_steps + 1)

    @property
    def anchored(self) -> bool:
        return self.s_min == 0.0 and self.t_min == 0.0


@dataclass(frozen=True)
class WhiteNoiseField:
    """Independent Gaussian cell masses with variance = cell area."""

    grid: GridSpec
    cells: np.ndarray  # (s_steps, t_steps)

    def rect_value(self, i0: int, i1: int, j0: int, j1: int) -> float:
        """Total mass of the cell block [i0, i1) x [j0, j1)."""
        return float(np.sum(self.cells[i0:i1, j0:j1]))


@dataclass(frozen=True)
class SheetField:
    """Sheet values on the nodes of a rectangular lattice.

    W is anchored at the plane origin even when the window excludes it;
    when the window touches the axes the axis rows are exactly zero.
    """

    grid: GridSpec
    values: np.ndarray  # (s_steps + 1, t_steps + 1)

    @property
    def s_points(self) -> np.ndarray:
        return self.grid.s_points

    @property
    def t_points(self) -> np.ndarray:
        return self.grid.t_points


@dataclass(frozen=True)
class Path:
    """A one-parameter path sampled on a grid."""

    t: np.ndarray
    x: np.ndarray

    def __post_init__(self) -> None:
        if self.t.shape != self.x.shape or self.t.ndim != 1:
            raise ArgumentError("path needs matching 1-d time and value arrays")

    def index_of(self, t0: float) -> int:
        """Nearest grid index to t0."""
        return int(np.argmin(np.abs(self.t - t0)))


@dataclass(frozen=True)
class MultiScaleSheet:
    """Joint sheet values along geometric t-levels theta^-n, n in [n_min, n_max].

    Row k of ``levels`` is the path s -> W(s, theta^-(n_min + k)) on
    ``s_grid``. Built from the deepest level upward out of independent
    scaled Brownian increments, so t can reach far below any affordable
    uniform grid while the joint law across levels stays exact.
    """

    theta: float
    n_min: int
    n_max: int
    s_grid: np.ndarray
    levels: np.ndarray  # (n_max - n_min + 1, len(s_grid))

    @property
    def n_values(self) -> np.ndarray:
        return np.arange(self.n_min, self.n_max + 1)

    def level(self, n: int) -> np.ndarray:
        if not self.n_min <= n <= self.n_max:
            raise ArgumentError(f"level {n} outside [{self.n_min}, {self.n_max}]")
        return self.levels[n - self.n_min]


@dataclass(frozen=True)
class CornerDecomposition:
    """Independent ingredients of the sheet near the point (1, 1).

    On the window ``[1-r, 1+r]^2`` reparametrized by (u, v) in [0, 2]^2,
    W(1-r+ur, 1-r+vr) decomposes into two boundary Brownian motions X, Y,
    an interior sheet Z and the corner value ``base = W(1-r, 1-r)``:

        sqrt((1-r) r) [X(u) + Y(v)] + r Z(u, v) - base.

    The sign of the independent centered ``base`` term does not affect the
    joint law, so the reconstruction matches a directly sampled sheet in
    distribution.
    """

    r: float
    u_grid: np.ndarray
    x: np.ndarray
    y: np.ndarray
    z: np.ndarray  # (len(u_grid), len(u_grid))
    base: float

    def reconstruct(self) -> np.ndarray:
        """Field over the (u, v) grid assembled from the components."""
        amp = math.sqrt((1.0 - self.r) * self.r)
        return amp * (self.x[:, None] + self.y[None, :]) + self.r * self.z - self.base


def lattice_values(s_points: Sequence[float], t_points: Sequence[float], rng: np.random.Generator) -> np.ndarray:
    """Exact joint Gaussian sample of W on a product lattice.

    Points must be sorted, nonnegative, strictly increasing; they need not
    be uniform. One block matrix is drawn: entry (0, 0) carries the corner
    mass, row 0 / column 0 the strip increments, the rest the interior
    cells; double cumulative summation assembles W.
    """
    s = np.asarray(s_points, dtype=float)
    t = np.asarray(t_points, dtype=float)
    for name, arr in (("s", s), ("t", t)):
        if arr.ndim != 1 or arr.size == 0:
            raise ArgumentError(f"{name}-points must form a nonempty 1-d array")
        if arr[0] < 0 or (arr.size > 1 and np.any(np.diff(arr) <= 0)):
            raise ArgumentError(f"{name}-points must be nonnegative and strictly increasing")
    es = np.concatenate([[s[0]], np.diff(s)])
    et = np.concatenate([[t[0]], np.diff(t)])
    block = rng.standard_normal((s.size, t.size)) * np.sqrt(np.outer(es, et))
    return np.cumsum(np.cumsum(block, axis=0), axis=1)


def scaled_bm(points: Sequence[float], factor: float, rng: np.random.Generator) -> np.ndarray:
    """Brownian motion in one parameter with Var = point * factor.

    Equals a single sheet column at fixed second coordinate ``factor``.
    """
    p = np.asarray(points, dtype=float)
    if p.ndim != 1 or p.size == 0 or p[0] < 0 or (p.size > 1 and np.any(np.diff(p) <= 0)):
        raise ArgumentError("points must be nonnegative and strictly increasing")
    if factor < 0:
        raise ArgumentError(f"variance factor must be nonnegative, got {factor}")
    widths = np.concatenate([[p[0]], np.diff(p)])
    return np.cumsum(rng.standard_normal(p.size) * np.sqrt(widths * factor))


def wiener_path(t_points: Sequence[float], rng: np.random.Generator) -> Path:
    """Standard Brownian path on a time grid."""
    t = np.asarray(t_points, dtype=float)
    return Path(t=t, x=scaled_bm(t, 1.0, rng))


def sample_white_noise(grid: GridSpec, seed: Seed) -> WhiteNoiseField:
    """I.i.d. centered Gaussian cells, one per lattice cell, variance = area."""
    rng = seed.stream(0)
    cells = rng.standard_normal((grid.s_steps, grid.t_steps)) * math.sqrt(grid.ds * grid.dt)
    return WhiteNoiseField(grid=grid, cells=cells)


def sheet_from_white_noise(noise: WhiteNoiseField) -> SheetField:
    """Double cumulative sum of the cells of an origin-anchored field."""
    if not noise.grid.anchored:
        raise ArgumentError("sheet_from_white_noise needs a grid anchored at (0, 0)")
    ns, nt = noise.cells.shape
    values = np.zeros((ns + 1, nt + 1))
    values[1:, 1:] = np.cumsum(np.cumsum(noise.cells, axis=0), axis=1)
    return SheetField(grid=noise.grid, values=values)


def sample_sheet(grid: GridSpec, seed: Seed) -> SheetField:
    """One sheet sample on the grid window, exact joint covariance."""
    return SheetField(grid=grid, values=lattice_values(grid.s_points, grid.t_points, seed.stream(0)))


def sample_sheet_d(grid: GridSpec, d: int, seed: Seed) -> list[SheetField]:
    """d independent component sheets drawn from one stream."""
    if d <= 0:
        raise ArgumentError(f"dimension must be positive, got {d}")
    rng = seed.stream(0)
    s, t = grid.s_points, grid.t_points
    return [SheetField(grid=grid, values=lattice_values(s, t, rng)) for _ in range(d)]


def multiscale_values(
    theta: float, n_min: int, n_max: int, s_grid: np.ndarray, rng: np.random.Generator
) -> np.ndarray:
    """Level matrix for :func:`sample_multiscale`, reusable inside replicas.

    The deepest level n_max is drawn first as a Brownian motion in s with
    variance s * theta^-n_max; each shallower level adds an independent
    Brownian increment of variance s * (theta^-n - theta^-n-1). Cross-level
    covariance is s * theta^-max(n, m) by construction.
    """
    if theta <= 1.0:
        raise ArgumentError(f"theta must exceed 1, got {theta}")
    if n_min > n_max:
        raise ArgumentError(f"need n_min <= n_max, got [{n_min}, {n_max}]")
    deepest = theta ** float(-n_max)
    if deepest == 0.0:
        raise RangeError(f"theta^-n_max underflows for theta={theta}, n_max={n_max}")
    count = n_max - n_min + 1
    levels = np.empty((count, s_grid.size))
    levels[count - 1] = scaled_bm(s_grid, deepest, rng)
    for k in range(count - 2, -1, -1):
        n = n_min + k
        delta = theta ** float(-n) - theta ** float(-n - 1)
        levels[k] = levels[k + 1] + scaled_bm(s_grid, delta, rng)
    return levels


def sample_multiscale(theta: float, n_min: int, n_max: int, s_steps: int, seed: Seed) -> MultiScaleSheet:
    """Joint sample of s -> W(s, theta^-n) across n in [n_min, n_max] on [1, e]."""
    if s_steps < 2:
        raise ArgumentError(f"s_steps must be >= 2, got {s_steps}")
    s_grid = np.linspace(1.0, math.e, s_steps)
    levels = multiscale_values(theta, n_min, n_max, s_grid, seed.stream(0))
    return MultiScaleSheet(theta=theta, n_min=n_min, n_max=n_max, s_grid=s_grid, levels=levels)


def corner_values(r: float, steps: int, rng: np.random.Generator) -> CornerDecomposition:
    """Corner decomposition components drawn from one stream (X, Y, Z, base order)."""
    if not 0.0 < r < 1.0:
        raise ArgumentError(f"corner scale r must lie in (0, 1), got {r}")
    if steps < 2:
        raise ArgumentError(f"steps must be >= 2, got {steps}")
    u = np.linspace(0.0, 2.0, steps + 1)
    x = scaled_bm(u, 1.0, rng)
    y = scaled_bm(u, 1.0, rng)
    z = lattice_values(u, u, rng)
    base = (1.0 - r) * float(rng.standard_normal())
    return CornerDecomposition(r=r, u_grid=u, x=x, y=y, z=z, base=base)


def sample_corner(r: float, steps: int, seed: Seed) -> CornerDecomposition:
    """Independent X, Y (Brownian motions on [0, 2]), Z (sheet on [0, 2]^2), base."""
    return corner_values(r, steps, seed.stream(0))


def slice_t(sheet: SheetField, s_index: int) -> Path:
    """The path t -> W(s*, t) along one grid row."""
    n_rows = sheet.values.shape[0]
    if not 0 <= s_index < n_rows:
        raise ArgumentError(f"s_index {s_index} out of range [0, {n_rows})")
    return Path(t=sheet.t_points.copy(), x=sheet.values[s_index].copy())


def rect_increment(sheet: SheetField, i0: int, i1: int, j0: int, j1: int) -> float:
    """W-increment of the node rectangle [s_i0, s_i1] x [t_j0, t_j1]."""
    v = sheet.values
    return float(v[i1, j1] - v[i0, j1] - v[i1, j0] + v[i0, j0])


def sheet_to_csv(sheet: SheetField, out: IO[str]) -> None:
    """Serialize as `s,t,value` rows, row-major in s then t, 17 significant digits."""
    out.write("s,t,value\n")
    s, t = sheet.s_points, sheet.t_points
    for i in range(s.size):
        row = sheet.values[i]
        for j in range(t.size):
            out.write(f"{s[i]:.17g},{t[j]:.17g},{row[j]:.17g}\n")
