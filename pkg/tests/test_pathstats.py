"""Path statistics: LIL profiles, moduli, quadratic variation, integral tests."""

import math

import numpy as np
import pytest

from qsheet.errors import ArgumentError, RangeError
from qsheet.pathstats import (
    CHUNG_CONSTANT,
    PhiAlpha,
    TabulatedPhi,
    chung_modulus,
    custom_partitions,
    levy_modulus,
    lil_block_scan,
    lil_profile,
    nowhere_diff_stat,
    partition_dyadic,
    quadratic_variation,
    reflection_check,
    upper_class_test,
)
from qsheet.rng import Seed
from qsheet.sheet import GridSpec, MultiScaleSheet, SheetField, sample_multiscale, sample_sheet

SEED = Seed(1_618_033)


def _zero_multiscale(theta=2.0, n_min=10, n_max=20, s_pts=8) -> MultiScaleSheet:
    s = np.linspace(1.0, math.e, s_pts)
    return MultiScaleSheet(
        theta=theta, n_min=n_min, n_max=n_max, s_grid=s,
        levels=np.zeros((n_max - n_min + 1, s_pts)),
    )


def _linear_sheet(grid: GridSpec, slope: float = 1.0) -> SheetField:
    # W(s, t) = slope * t on every row
    vals = np.tile(slope * grid.t_points, (grid.s_steps + 1, 1))
    return SheetField(grid=grid, values=vals)


# --- iterated logarithm ------------------------------------------------------


def test_lil_zero_field_and_monotonicity():
    prof = lil_profile(_zero_multiscale())
    assert np.all(prof.ratios == 0.0)
    assert prof.global_sup == 0.0

    prof = lil_profile(sample_multiscale(2.0, 10, 30, 16, SEED))
    assert np.all(np.diff(prof.running_max, axis=0) >= 0.0)


def test_lil_denominator_domain():
    with pytest.raises(RangeError):
        lil_profile(_zero_multiscale(theta=2.0, n_min=1, n_max=5))  # 2^1 < e


def test_lil_denominator_identity():
    # ln ln theta^n via n ln theta agrees with the direct evaluation
    theta, n = 2.0, np.arange(10, 41)
    direct = np.log(np.log(theta**n.astype(float)))
    stable = np.log(n * math.log(theta))
    assert np.allclose(direct, stable, rtol=1e-12)


def test_block_scan_zero_field_and_validation():
    ms = _zero_multiscale()
    scan = lil_block_scan(ms, 0.5, 0.1)
    assert not scan.e_occurred.any()
    assert not scan.f_occurred.any()
    with pytest.raises(ArgumentError):
        lil_block_scan(ms, 0.0, 0.1)
    with pytest.raises(ArgumentError):
        lil_block_scan(ms, 0.5, 0.0)


# --- continuity modulus --------------------------------------------------------


def test_levy_modulus_linear_field():
    grid = GridSpec(1.0, math.e, 0.0, 1.0, 4, 1024)
    sheet = _linear_sheet(grid)
    eps = [2.0**-4, 2.0**-6]
    prof = levy_modulus(sheet, eps)
    for k, e in enumerate(prof.eps):
        expected = e / math.sqrt(2.0 * 1.0 * e * abs(math.log(e)))
        assert prof.ratios[k, 0] == pytest.approx(expected, rel=1e-12)
    # deterministic ratio shrinks with the window
    assert prof.sup_ratio[1] < prof.sup_ratio[0]


def test_levy_modulus_resolution_error():
    grid = GridSpec(1.0, math.e, 0.0, 1.0, 4, 64)
    with pytest.raises(ArgumentError):
        levy_modulus(sample_sheet(grid, SEED), [2.0**-8])


def test_levy_modulus_numerator_monotone_in_eps():
    grid = GridSpec(1.0, math.e, 0.0, 1.0, 8, 2048)
    sheet = sample_sheet(grid, SEED)
    prof = levy_modulus(sheet, [2.0**-4, 2.0**-5, 2.0**-6])
    # recover the raw spreads: ratio * denominator, per s; wider windows
    # scan supersets of pairs, exactly
    for k in range(2):
        wide = prof.ratios[k] * np.sqrt(2.0 * prof.s_grid * prof.eps[k] * abs(math.log(prof.eps[k])))
        narrow = prof.ratios[k + 1] * np.sqrt(
            2.0 * prof.s_grid * prof.eps[k + 1] * abs(math.log(prof.eps[k + 1]))
        )
        assert np.all(wide >= narrow - 1e-12)


# --- small-ball modulus ---------------------------------------------------------


def test_chung_linear_field_deterministic():
    grid = GridSpec(1.0, math.e, 0.0, 1.0, 4, 2**12)
    # rows t * sqrt(s) normalize to exactly t
    vals = np.sqrt(grid.s_points)[:, None] * grid.t_points[None, :]
    sheet = SheetField(grid=grid, values=vals)
    eps = 2.0**-6
    prof = chung_modulus(sheet, eps, 0.5)
    expected = eps / math.sqrt(eps / abs(math.log(eps)))
    assert np.allclose(prof.stats, expected, rtol=1e-12)


def test_chung_resolution_error():
    grid = GridSpec(1.0, math.e, 0.0, 1.0, 4, 256)
    with pytest.raises(ArgumentError):
        chung_modulus(sample_sheet(grid, SEED), 2.0**-6, 0.5)  # dt > eps/32


def test_chung_constant_value():
    assert CHUNG_CONSTANT == pytest.approx(1.1107207345, rel=1e-9)


# --- nowhere differentiability ---------------------------------------------------


def test_nowhere_diff_controls():
    grid = GridSpec(1.0, math.e, 0.0, 1.0, 4, 2**12)
    linear = _linear_sheet(grid)
    prof = nowhere_diff_stat(linear, [16, 32, 64], 0.5)
    assert np.allclose(prof.stats, 1.0, rtol=1e-12)

    zero = SheetField(grid=grid, values=np.zeros((5, 2**12 + 1)))
    prof = nowhere_diff_stat(zero, [16, 32], 0.5)
    assert np.all(prof.stats == 0.0)

    with pytest.raises(ArgumentError):
        nowhere_diff_stat(linear, [512], 0.5)  # resolution 2^-12 > 1/(32*512)


# --- quadratic variation -----------------------------------------------------------


def test_partition_dyadic_structure():
    scheme = partition_dyadic(20)
    assert list(scheme.points(2)) == [0.0, 0.5, 1.0]
    for k in range(1, 21):
        assert scheme.mesh(2**k) == 2.0**-k
    partial = sum(scheme.mesh(2**k) for k in range(1, 21))
    assert partial == pytest.approx(1.0 - 2.0**-20, rel=1e-12)
    assert scheme.certificate.total_bound is not None


def test_custom_partitions_validation():
    with pytest.raises(ArgumentError):
        custom_partitions([[0.0, 0.6, 0.5, 1.0]])
    with pytest.raises(ArgumentError):
        custom_partitions([[0.1, 0.5, 1.0]])
    scheme = custom_partitions([[0.0, 0.25, 1.0], [0.0, 0.25, 0.5, 1.0]])
    assert scheme.sizes == [2, 3]
    assert scheme.certificate.tail_bound is None


def test_qv_single_term_identity():
    grid = GridSpec(1.0, math.e, 0.0, 1.0, 16, 256)
    sheet = sample_sheet(grid, SEED)
    scheme = partition_dyadic(4)
    prof = quadratic_variation(sheet, scheme, 1, 1.0)
    direct = sheet.values[:, -1] ** 2 - sheet.s_points
    np.testing.assert_allclose(prof.vn, direct, rtol=1e-12)
    assert prof.snap_distance == 0.0


def test_qv_depth_vs_resolution():
    grid = GridSpec(1.0, math.e, 0.0, 1.0, 4, 64)
    sheet = sample_sheet(grid, SEED)
    scheme = partition_dyadic(8)
    with pytest.raises(ArgumentError):
        quadratic_variation(sheet, scheme, 256, 1.0)


def test_qv_median_decreasing_in_depth():
    grid = GridSpec(1.0, math.e, 0.0, 1.0, 16, 2**12)
    scheme = partition_dyadic(10)
    sups = {16: [], 1024: []}
    for k in range(20):
        sheet = sample_sheet(grid, SEED.child(k))
        for n in sups:
            sups[n].append(quadratic_variation(sheet, scheme, n, 1.0).sup_abs)
    assert np.median(sups[1024]) < np.median(sups[16])


# --- upper-class integral tests -------------------------------------------------------


@pytest.mark.parametrize(
    "alpha,which,verdict",
    [
        (2.0, "erdos", "diverges"),
        (2.0, "mountford", "diverges"),
        (4.0, "erdos", "converges"),
        (4.0, "mountford", "diverges"),
        (6.0, "erdos", "converges"),
        (6.0, "mountford", "converges"),
    ],
)
def test_upper_class_verdicts(alpha, which, verdict):
    res = upper_class_test(PhiAlpha(alpha), which)
    assert res.verdict == verdict
    assert np.isfinite(res.partial_value) and res.partial_value >= 0.0


def test_upper_class_cutoff_invariance():
    a = upper_class_test(PhiAlpha(4.0), "erdos", cutoff=1e12)
    b = upper_class_test(PhiAlpha(4.0), "erdos", cutoff=1e14)
    assert a.verdict == b.verdict
    assert b.partial_value >= a.partial_value  # longer range, same verdict


def test_upper_class_tabulated_and_validation():
    t = np.geomspace(4.0, 1e13, 400)
    with np.errstate(invalid="ignore"):
        sq = 2.0 * np.log(np.log(t)) + 6.0 * np.log(np.log(np.log(t)))
    phi = TabulatedPhi(t_values=t, phi_values=np.sqrt(np.maximum(sq, 0.0)))
    res = upper_class_test(phi, "erdos")
    assert res.verdict == "converges"

    with pytest.raises(ArgumentError):
        TabulatedPhi(t_values=t[:4], phi_values=np.array([1.0, 0.5, 2.0, 3.0]))
    with pytest.raises(ArgumentError):
        upper_class_test(PhiAlpha(4.0), "unknown")
    with pytest.raises(ArgumentError):
        PhiAlpha(0.0)


# --- reflection inequality ---------------------------------------------------------------


def test_reflection_zero_threshold_exact():
    lhs, rhs = reflection_check(1.0, 0.0, 100, SEED)
    assert lhs.mean == rhs.mean == 1.0
    assert lhs.stderr == 0.0


def test_reflection_validation():
    with pytest.raises(ArgumentError):
        reflection_check(1.0, -0.5, 100, SEED)
    with pytest.raises(ArgumentError):
        reflection_check(0.0, 1.0, 100, SEED)


def test_reflection_inequality_and_order():
    lhs, rhs = reflection_check(1.0, 1.0, 2000, SEED, s_steps=32, t_steps=64)
    # lhs counts a superset of replicas: exact dominance on one ensemble
    assert lhs.mean >= rhs.mean
    combined = math.sqrt(lhs.stderr**2 + (2.0 * rhs.stderr) ** 2)
    assert lhs.mean <= 2.0 * rhs.mean + 3.0 * combined


def test_reflection_large_threshold():
    lhs, rhs = reflection_check(1.0, 6.0, 2000, SEED, s_steps=32, t_steps=64)
    assert lhs.mean <= 3.0 * lhs.stderr + 1e-12
    assert rhs.mean <= 3.0 * rhs.stderr + 1e-12
