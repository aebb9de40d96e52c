"""Sheet samplers: exactness, covariance structure, and serialization."""

import io
import math

import numpy as np
import pytest

from qsheet.errors import ArgumentError, RangeError
from qsheet.mc import EnsembleConfig, ks_distance, mc_collect
from qsheet.rng import Seed
from qsheet.sheet import (
    CornerDecomposition,
    GridSpec,
    SheetField,
    corner_values,
    lattice_values,
    multiscale_values,
    rect_increment,
    sample_corner,
    sample_multiscale,
    sample_sheet,
    sample_sheet_d,
    sample_white_noise,
    sheet_from_white_noise,
    sheet_to_csv,
    slice_t,
)

SEED = Seed(2_026_081)


def test_gridspec_rejects_degenerate_windows():
    with pytest.raises(ArgumentError):
        GridSpec(0.0, 0.0, 0.0, 1.0, 4, 4)  # zero-area window
    with pytest.raises(ArgumentError):
        GridSpec(1.0, 0.5, 0.0, 1.0, 4, 4)
    with pytest.raises(ArgumentError):
        GridSpec(0.0, 1.0, 0.0, 1.0, 0, 4)
    with pytest.raises(ArgumentError):
        GridSpec(-1.0, 1.0, 0.0, 1.0, 4, 4)


def test_white_noise_deterministic_and_cell_variance():
    grid = GridSpec(0.0, 1.0, 0.0, 1.0, 64, 64)
    a = sample_white_noise(grid, SEED)
    b = sample_white_noise(grid, SEED)
    assert np.array_equal(a.cells, b.cells)

    # chi-square oracle: mean of cell^2 over all cells and replicas estimates
    # ds*dt with stderr ds*dt*sqrt(2/count)
    def pooled(rng):
        cells = rng.standard_normal((64, 64)) * math.sqrt(grid.ds * grid.dt)
        return float(np.mean(cells**2))

    reps = 10_000
    values = mc_collect(pooled, EnsembleConfig(replicas=reps, seed=SEED))
    target = grid.ds * grid.dt
    stderr = target * math.sqrt(2.0 / (64 * 64 * reps))
    assert abs(values.mean() - target) <= 3.0 * stderr


def test_white_noise_additivity_exact():
    grid = GridSpec(0.0, 1.0, 0.0, 1.0, 16, 16)
    noise = sample_white_noise(grid, SEED)
    whole = noise.rect_value(2, 10, 3, 13)
    parts = (
        noise.rect_value(2, 6, 3, 13)
        + noise.rect_value(6, 10, 3, 8)
        + noise.rect_value(6, 10, 8, 13)
    )
    assert whole == pytest.approx(parts, rel=1e-12)


def test_sheet_from_white_noise_zero_and_single_cell():
    grid = GridSpec(0.0, 1.0, 0.0, 1.0, 4, 4)
    noise = sample_white_noise(grid, SEED)
    zero = sheet_from_white_noise(
        type(noise)(grid=grid, cells=np.zeros_like(noise.cells))
    )
    assert np.all(zero.values == 0.0)

    cells = np.zeros((4, 4))
    cells[1, 1] = 3.25
    single = sheet_from_white_noise(type(noise)(grid=grid, cells=cells))
    # node (i, j) accumulates cells with index < (i, j)
    expected = np.zeros((5, 5))
    expected[2:, 2:] = 3.25
    assert np.array_equal(single.values, expected)


def test_sheet_from_white_noise_needs_anchor():
    grid = GridSpec(1.0, 2.0, 0.0, 1.0, 4, 4)
    noise = sample_white_noise(grid, SEED)
    with pytest.raises(ArgumentError):
        sheet_from_white_noise(noise)


def test_sheet_axes_zero_and_covariance():
    grid = GridSpec(0.0, 1.0, 0.0, 1.0, 16, 16)

    def probes(rng):
        w = lattice_values(grid.s_points, grid.t_points, rng)
        return np.array([w[-1, -1], w[8, -1], w[-1, 8]])  # W(1,1), W(.5,1), W(1,.5)

    sheet = sample_sheet(grid, SEED)
    assert np.all(sheet.values[0] == 0.0)
    assert np.all(sheet.values[:, 0] == 0.0)

    reps = 10_000
    vals = mc_collect(probes, EnsembleConfig(replicas=reps, seed=SEED))
    var11 = vals[:, 0].var(ddof=1)
    # Var of the sample variance of N(0,1): ~2/n
    assert abs(var11 - 1.0) <= 3.0 * math.sqrt(2.0 / reps)
    cov = np.mean(vals[:, 1] * vals[:, 2])
    spread = np.std(vals[:, 1] * vals[:, 2], ddof=1) / math.sqrt(reps)
    assert abs(cov - 0.25) <= 3.0 * spread


def test_rect_increment_variance():
    grid = GridSpec(0.0, 2.0, 0.0, 2.0, 8, 8)

    def inc(rng):
        w = lattice_values(grid.s_points, grid.t_points, rng)
        field = SheetField(grid=grid, values=w)
        return rect_increment(field, 2, 6, 3, 7)  # (1.5-0.5)*(1.75-0.75) = 1

    reps = 10_000
    vals = mc_collect(inc, EnsembleConfig(replicas=reps, seed=SEED))
    assert abs(vals.var(ddof=1) - 1.0) <= 3.0 * math.sqrt(2.0 / reps)


def test_offgrid_window_exact_covariance():
    # window [1,2]^2 never touches the axes; joint law must still be exact
    def probes(rng):
        w = lattice_values([1.0, 2.0], [1.0, 2.0], rng)
        return np.array([w[0, 0], w[1, 1]])

    reps = 20_000
    vals = mc_collect(probes, EnsembleConfig(replicas=reps, seed=SEED))
    assert abs(vals[:, 0].var(ddof=1) - 1.0) <= 3.0 * math.sqrt(2.0 / reps)
    assert abs(vals[:, 1].var(ddof=1) - 4.0) <= 3.0 * 4.0 * math.sqrt(2.0 / reps)
    cov = np.mean(vals[:, 0] * vals[:, 1])
    spread = np.std(vals[:, 0] * vals[:, 1], ddof=1) / math.sqrt(reps)
    assert abs(cov - 1.0) <= 3.0 * spread  # min(1,2)*min(1,2) = 1


def test_scaling_invariance_ks():
    # W(a s, b t)/sqrt(a b) matches W(s, t) in distribution
    s, t, a, b = 0.7, 0.6, 2.5, 1.7

    def scaled(rng):
        return float(lattice_values([a * s], [b * t], rng)[0, 0] / math.sqrt(a * b))

    def plain(rng):
        return float(lattice_values([s], [t], rng)[0, 0])

    n = 10_000
    sample_a = mc_collect(scaled, EnsembleConfig(replicas=n, seed=SEED))
    sample_b = mc_collect(plain, EnsembleConfig(replicas=n, seed=SEED, stream_offset=n))
    # two-sample KS critical value at the 1% level: 1.628 sqrt(2/n)
    assert ks_distance(sample_a, sample_b) < 1.628 * math.sqrt(2.0 / n)


def test_multiscale_validation_and_degenerate_level():
    with pytest.raises(ArgumentError):
        sample_multiscale(1.0, 5, 10, 8, SEED)
    with pytest.raises(ArgumentError):
        sample_multiscale(2.0, 11, 10, 8, SEED)
    with pytest.raises(ArgumentError):
        sample_multiscale(2.0, 5, 10, 1, SEED)
    with pytest.raises(RangeError):
        sample_multiscale(2.0, 5, 2000, 8, SEED)  # 2^-2000 underflows

    ms = sample_multiscale(2.0, 20, 20, 16, SEED)
    assert ms.levels.shape == (1, 16)

    def single(rng):
        return float(multiscale_values(2.0, 20, 20, np.array([1.0]), rng)[0, 0])

    reps = 10_000
    vals = mc_collect(single, EnsembleConfig(replicas=reps, seed=SEED))
    target = 2.0**-20
    assert abs(vals.var(ddof=1) - target) <= 3.0 * target * math.sqrt(2.0 / reps)


def test_multiscale_cross_level_covariance():
    s_grid = np.array([1.0, 2.0])

    def pair(rng):
        levels = multiscale_values(2.0, 10, 14, s_grid, rng)
        return np.array([levels[0, 1], levels[4, 1]])  # W(2, 2^-10), W(2, 2^-14)

    reps = 20_000
    vals = mc_collect(pair, EnsembleConfig(replicas=reps, seed=SEED))
    target = 2.0 * 2.0**-14  # s * theta^-max(n, m)
    cov = np.mean(vals[:, 0] * vals[:, 1])
    spread = np.std(vals[:, 0] * vals[:, 1], ddof=1) / math.sqrt(reps)
    assert abs(cov - target) <= 3.0 * spread


def test_corner_validation_and_zero_debug():
    with pytest.raises(ArgumentError):
        sample_corner(0.0, 8, SEED)
    with pytest.raises(ArgumentError):
        sample_corner(1.0, 8, SEED)

    u = np.linspace(0.0, 2.0, 9)
    zero = CornerDecomposition(
        r=0.5, u_grid=u, x=np.zeros(9), y=np.zeros(9), z=np.zeros((9, 9)), base=0.0
    )
    assert np.all(zero.reconstruct() == 0.0)


def test_corner_reconstruction_variance_and_independence():
    r = 0.5
    c = 4  # index of u = 1 on an 8-segment grid

    def stats(rng):
        cd = corner_values(r, 8, rng)
        field = cd.reconstruct()
        return np.array([field[c, c], cd.x[c], cd.z[c, c]])

    reps = 10_000
    vals = mc_collect(stats, EnsembleConfig(replicas=reps, seed=SEED))
    # reconstructed W(1,1) has unit variance for every r
    assert abs(vals[:, 0].var(ddof=1) - 1.0) <= 3.0 * math.sqrt(2.0 / reps)
    # X(1) and Z(1,1) are independent by construction
    cov = np.mean(vals[:, 1] * vals[:, 2])
    spread = np.std(vals[:, 1] * vals[:, 2], ddof=1) / math.sqrt(reps)
    assert abs(cov) <= 3.0 * spread


def test_sheet_d_validation_and_independence():
    grid = GridSpec(1.0, 2.0, 1.0, 2.0, 8, 8)
    with pytest.raises(ArgumentError):
        sample_sheet_d(grid, 0, SEED)

    def pair(rng):
        comps = [lattice_values(grid.s_points, grid.t_points, rng) for _ in range(2)]
        return np.array([comps[0][0, 0], comps[1][0, 0]])

    reps = 10_000
    vals = mc_collect(pair, EnsembleConfig(replicas=reps, seed=SEED))
    cov = np.mean(vals[:, 0] * vals[:, 1])
    spread = np.std(vals[:, 0] * vals[:, 1], ddof=1) / math.sqrt(reps)
    assert abs(cov) <= 3.0 * spread

    fields = sample_sheet_d(grid, 5, SEED)
    assert len(fields) == 5

    def var_each(rng):
        return np.array([lattice_values(grid.s_points, grid.t_points, rng)[0, 0] for _ in range(5)])

    vals = mc_collect(var_each, EnsembleConfig(replicas=10_000, seed=SEED))
    for c in range(5):
        assert abs(vals[:, c].var(ddof=1) - 1.0) <= 3.0 * math.sqrt(2.0 / 10_000)


def test_slice_t():
    grid = GridSpec(0.0, 1.0, 0.0, 1.0, 4, 4)
    sheet = sample_sheet(grid, SEED)
    assert np.all(slice_t(sheet, 0).x == 0.0)  # s = 0 row
    with pytest.raises(ArgumentError):
        slice_t(sheet, 9)

    # deterministic single-cell field slices to a step function
    cells = np.zeros((4, 4))
    cells[0, 1] = 2.0
    values = np.zeros((5, 5))
    values[1:, 2:] = 2.0
    path = slice_t(SheetField(grid=grid, values=values), 3)
    assert list(path.x) == [0.0, 0.0, 2.0, 2.0, 2.0]

    # s* = 1 row is a standard Brownian motion: Var at t=1 equals 1
    def end(rng):
        return float(lattice_values(grid.s_points, grid.t_points, rng)[-1, -1])

    reps = 10_000
    vals = mc_collect(end, EnsembleConfig(replicas=reps, seed=SEED))
    assert abs(vals.var(ddof=1) - 1.0) <= 3.0 * math.sqrt(2.0 / reps)


def test_sheet_csv_format():
    grid = GridSpec(0.0, 1.0, 0.0, 1.0, 1, 1)
    sheet = SheetField(grid=grid, values=np.array([[0.0, 0.0], [0.0, 1.0 / 3.0]]))
    buf = io.StringIO()
    sheet_to_csv(sheet, buf)
    lines = buf.getvalue().splitlines()
    assert lines[0] == "s,t,value"
    assert len(lines) == 5
    assert lines[-1] == "1,1,0.33333333333333331"  # 17 significant digits
