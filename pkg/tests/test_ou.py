"""OU transform, Mehler averaging, capacity, and the strong Markov harness."""

import math

import numpy as np
import pytest

from qsheet.errors import ArgumentError, NumericError
from qsheet.mc import EnsembleConfig, mc_collect
from qsheet.ou import (
    PathEvent,
    PathFunctional,
    capacity_estimate,
    mehler_apply,
    mehler_symmetry_check,
    ou_from_sheet,
    ou_propagate,
    ou_trajectory_values,
    propagate,
    strong_markov_test,
)
from qsheet.rng import Seed
from qsheet.sheet import GridSpec, Path, lattice_values, sample_sheet, wiener_path

SEED = Seed(3_141_592)


def _linear_path(steps: int = 128) -> Path:
    t = np.linspace(0.0, 1.0, steps + 1)
    return Path(t=t, x=t.copy())


# --- transform ------------------------------------------------------------


def test_ou_from_sheet_identity_at_s0():
    grid = GridSpec(1.0, math.e, 0.0, 1.0, 32, 16)
    sheet = sample_sheet(grid, SEED)
    ou = ou_from_sheet(sheet, 1.0)
    assert ou.s_grid[0] == 0.0
    np.testing.assert_array_equal(ou.values[0], sheet.values[0])  # e^0 = 1


def test_ou_from_sheet_window_check():
    grid = GridSpec(1.0, 2.0, 0.0, 1.0, 8, 8)
    with pytest.raises(ArgumentError):
        ou_from_sheet(sample_sheet(grid, SEED), 1.0)  # needs s up to e


def test_ou_stationarity_and_snapshot_covariance():
    # Var U(s, 1) = 1 for every s; Cov(U(0,1), U(s,1)) = e^{-s/2}
    s_grid = np.array([0.0, 0.5, 1.0])
    t_grid = np.array([0.0, 1.0])

    def snap(rng):
        return ou_trajectory_values(s_grid, t_grid, rng)[:, 1]

    reps = 10_000
    vals = mc_collect(snap, EnsembleConfig(replicas=reps, seed=SEED))
    for c in range(3):
        assert abs(vals[:, c].var(ddof=1) - 1.0) <= 3.0 * math.sqrt(2.0 / reps)
    for c, s in ((1, 0.5), (2, 1.0)):
        prod = vals[:, 0] * vals[:, c]
        stderr = np.std(prod, ddof=1) / math.sqrt(reps)
        assert abs(np.mean(prod) - math.exp(-s / 2.0)) <= 3.0 * stderr


# --- one-step transition ---------------------------------------------------


def test_propagate_identity_and_validation():
    x = _linear_path()
    out = ou_propagate(x, 0.0, SEED)
    np.testing.assert_array_equal(out.x, x.x)
    with pytest.raises(ArgumentError):
        ou_propagate(x, -0.1, SEED)


def test_propagate_mixes_to_wiener():
    # at s = 50 the start is forgotten: Var at t=1 is 1 regardless of x
    x = _linear_path(64)

    def end(rng):
        return float(propagate(x, 50.0, rng).x[-1])

    reps = 10_000
    vals = mc_collect(end, EnsembleConfig(replicas=reps, seed=SEED))
    assert abs(vals.mean()) <= 3.0 * vals.std(ddof=1) / math.sqrt(reps)
    assert abs(vals.var(ddof=1) - 1.0) <= 3.0 * math.sqrt(2.0 / reps)


def test_propagate_conditional_mean():
    x = _linear_path(64)
    s = 0.8

    def end(rng):
        return float(propagate(x, s, rng).x[-1])

    reps = 10_000
    vals = mc_collect(end, EnsembleConfig(replicas=reps, seed=SEED))
    target = math.exp(-s / 2.0) * x.x[-1]
    assert abs(vals.mean() - target) <= 3.0 * vals.std(ddof=1) / math.sqrt(reps)


# --- Mehler averaging -------------------------------------------------------


def test_mehler_zero_time_exact():
    x = _linear_path()
    f = PathFunctional("eval", t0=1.0)
    rep = mehler_apply(f, x, 0.0, 100, SEED)
    assert rep.mean == 1.0
    assert rep.stderr == 0.0


def test_mehler_first_and_second_moment():
    x = _linear_path()
    s = 0.7
    rep = mehler_apply(PathFunctional("eval", t0=1.0), x, s, 4000, SEED)
    target = math.exp(-s / 2.0)
    assert rep.ci95[0] <= target <= rep.ci95[1]

    rep = mehler_apply(PathFunctional("square-eval", t0=1.0), x, s, 4000, SEED.child(1))
    target = (1.0 - math.exp(-s)) + math.exp(-s)
    assert rep.ci95[0] <= target <= rep.ci95[1]


def test_mehler_flags_non_finite():
    t = np.linspace(0.0, 1.0, 17)
    x = Path(t=t, x=np.full(17, np.inf))
    rep = mehler_apply(PathFunctional("eval", t0=1.0), x, 0.5, 10, SEED)
    assert "non-finite" in rep.note


def test_mehler_functional_validation():
    with pytest.raises(ArgumentError):
        PathFunctional("eval")  # missing t0
    with pytest.raises(ArgumentError):
        PathFunctional("nope")


def test_semigroup_composition():
    # one step of s1+s2 agrees with two chained steps, f = eval(1)
    x = _linear_path(64)
    s1, s2 = 0.4, 0.9
    f = PathFunctional("eval", t0=1.0)
    single = mehler_apply(f, x, s1 + s2, 4000, SEED)

    def chained(rng):
        return f(propagate(propagate(x, s1, rng), s2, rng))

    from qsheet.mc import mc_run

    double = mc_run(chained, EnsembleConfig(replicas=4000, seed=SEED.child(2)))
    assert single.ci_overlaps(double)


def test_mehler_symmetry():
    f = PathFunctional("eval", t0=1.0)
    g = PathFunctional("eval", t0=0.5)
    lhs, rhs = mehler_symmetry_check(f, g, 0.7, 4000, SEED)
    assert lhs.ci_overlaps(rhs)
    # both sides estimate e^{-s/2} * min(t_f, t_g) = e^{-0.35} * 0.5
    target = math.exp(-0.35) * 0.5
    width = 4.0 * max(lhs.stderr, rhs.stderr)
    assert abs(lhs.mean - target) <= width
    assert abs(rhs.mean - target) <= width

    # large s mixes: both sides approach E f * E g = 0
    lhs, rhs = mehler_symmetry_check(f, g, 50.0, 4000, SEED.child(3))
    assert lhs.ci_overlaps(rhs)
    assert abs(lhs.mean) <= 4.0 * lhs.stderr


# --- capacity ----------------------------------------------------------------


def test_capacity_trivial_events_exact():
    assert capacity_estimate(PathEvent("all"), replicas=100, seed=SEED).mean == 1.0
    assert capacity_estimate(PathEvent("none"), replicas=100, seed=SEED).mean == 0.0
    with pytest.raises(ArgumentError):
        capacity_estimate(PathEvent("all"), replicas=10, seed=SEED)


def test_capacity_zero_crossing_positive():
    # one-dimensional stationary-slice oracle: with perfect detection the
    # killed-hitting probability is exactly 1/2 (arc-sine law integrated
    # against the kill time); grid sign-change detection undercounts a
    # little. Calibrated band at s-step 0.01, horizon 10.
    event = PathEvent("zero-crossing-at", t0=1.0)
    rep = capacity_estimate(event, 10.0, 1000, 16, 800, SEED)
    assert rep.ci95[0] > 0.0
    assert 0.35 <= rep.mean <= 0.55


def test_capacity_truncation_warning():
    rep = capacity_estimate(PathEvent("none"), s_horizon_max=2.0, replicas=100, seed=SEED)
    assert "truncation" in rep.note


def test_capacity_dominates_snapshot_measure():
    # hitting before the kill time contains the event {Y_0 in G}
    event = PathEvent("sup-exceeds", level=1.0)
    cap = capacity_estimate(event, 10.0, 200, 32, 400, SEED)

    t_grid = np.linspace(0.0, 1.0, 33)

    def at_start(rng):
        return 1.0 if np.max(wiener_path(t_grid, rng).x) >= 1.0 else 0.0

    from qsheet.mc import mc_run

    snap = mc_run(at_start, EnsembleConfig(replicas=400, seed=SEED))
    assert cap.mean >= snap.mean - 3.0 * snap.stderr


def test_path_event_validation():
    with pytest.raises(ArgumentError):
        PathEvent("zero-crossing-at")
    with pytest.raises(ArgumentError):
        PathEvent("sup-exceeds")
    with pytest.raises(ArgumentError):
        PathEvent("modulus-violation", eps=0.1)


# --- strong Markov harness ----------------------------------------------------


def test_strong_markov_deterministic_stop():
    # lam = 0 fires at s = 0: the harness reduces to a plain sheet check
    report = strong_markov_test(0.0, [(0.5, 1.0), (1.0, 1.0)], 400, SEED)
    assert report.unfired == 0
    assert report.max_cov_sigma() <= 3.0


def test_strong_markov_fresh_increments():
    report = strong_markov_test(1.0, [(0.5, 0.5), (1.0, 1.0)], 600, SEED)
    entry = next(e for e in report.cov if e.i == e.j == 1)
    assert entry.oracle == 1.0
    assert abs(entry.cov - 1.0) <= 3.0 * entry.stderr
    assert report.max_corr_sigma() <= 3.0


def test_strong_markov_unfired_error():
    with pytest.raises(NumericError):
        strong_markov_test(50.0, [(0.5, 1.0)], 100, SEED, horizon=2.0)


def test_strong_markov_lag_alignment():
    with pytest.raises(ArgumentError):
        strong_markov_test(1.0, [(0.512, 1.0)], 100, SEED)
