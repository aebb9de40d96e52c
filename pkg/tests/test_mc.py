"""Stream derivation, Monte Carlo execution, and aggregation helpers."""

import numpy as np
import pytest

from qsheet.errors import ArgumentError, NumericError
from qsheet.mc import (
    EnsembleConfig,
    covariance_table,
    ks_distance,
    mc_collect,
    mc_run,
    report_from_samples,
)
from qsheet.rng import Seed


def test_seed_validation():
    with pytest.raises(ArgumentError):
        Seed(-1)
    with pytest.raises(ArgumentError):
        Seed(2**64)
    with pytest.raises(ArgumentError):
        Seed(4).stream(-1)


def test_streams_deterministic_and_distinct():
    seed = Seed(123)
    a = seed.stream(0).standard_normal(16)
    b = seed.stream(0).standard_normal(16)
    c = seed.stream(1).standard_normal(16)
    assert np.array_equal(a, b)
    assert not np.array_equal(a, c)


def test_stream_cross_correlation_small():
    # lag-0 and lag-3 cross correlations of distinct streams within 3/sqrt(N)
    seed = Seed(99)
    n = 20_000
    x = seed.stream(0).standard_normal(n)
    y = seed.stream(1).standard_normal(n)
    limit = 3.0 / np.sqrt(n)
    assert abs(np.mean(x * y)) < limit
    assert abs(np.mean(x[3:] * y[:-3])) < limit


def test_mc_run_constant():
    rep = mc_run(lambda rng: 2.5, EnsembleConfig(replicas=50, seed=Seed(1)))
    assert rep.mean == 2.5
    assert rep.stderr == 0.0
    assert rep.ci95 == (2.5, 2.5)


def test_mc_run_parallelism_bit_identical():
    def draw(rng):
        return float(rng.standard_normal())

    serial = mc_run(draw, EnsembleConfig(replicas=200, seed=Seed(7), parallelism=1))
    threaded = mc_run(draw, EnsembleConfig(replicas=200, seed=Seed(7), parallelism=8))
    assert serial == threaded


def test_mc_run_clt_scale():
    # 1e4 standard normal replicas: mean within 3 stderr, stderr near 0.01
    rep = mc_run(lambda rng: float(rng.standard_normal()), EnsembleConfig(replicas=10_000, seed=Seed(11)))
    assert abs(rep.mean) <= 3.0 * rep.stderr
    assert 0.009 <= rep.stderr <= 0.011


def test_mc_replica_failure_names_index():
    def sometimes(rng):
        v = float(rng.standard_normal())
        if rng.uniform() < 0.05:
            raise ValueError("boom")
        return v

    with pytest.raises(NumericError, match=r"replica \d+ failed"):
        mc_collect(sometimes, EnsembleConfig(replicas=200, seed=Seed(3)))


def test_report_flags_non_finite():
    rep = report_from_samples(np.array([1.0, np.inf, 2.0]))
    assert "non-finite" in rep.note


def test_ks_distance_trivial_and_disjoint():
    assert ks_distance([1.0, 2.0, 3.0], [1.0, 2.0, 3.0]) == 0.0
    assert ks_distance([0.0, 0.0], [1.0, 1.0]) == 1.0
    with pytest.raises(ArgumentError):
        ks_distance([], [1.0])


def test_ks_distance_same_normal():
    # two 1e4 draws from one normal: distance below the 1% KS critical value
    # 1.628 * sqrt(2/n) = 0.023
    seed = Seed(21)
    a = seed.stream(0).standard_normal(10_000)
    b = seed.stream(1).standard_normal(10_000)
    assert ks_distance(a, b) < 0.023


def test_covariance_table_constants_and_self():
    ens = np.ones((100, 2))
    table = covariance_table(ens, [(0, 1), (0, 0)])
    assert table.entry(0, 1).cov == 0.0
    assert table.entry(0, 0).cov == 0.0  # constant column has zero variance

    rng = Seed(5).stream(0)
    data = rng.standard_normal((5000, 1)) * 2.0
    table = covariance_table(np.hstack([data, data]), [(0, 0)])
    assert table.entry(0, 0).cov == pytest.approx(np.var(data, ddof=1), rel=1e-12)


def test_covariance_table_sheet_probes():
    # probes W(1,1) vs W(2,1): covariance min(1,2)*min(1,1) = 1
    from qsheet.sheet import lattice_values

    seed = Seed(17)

    def one(rng):
        w = lattice_values([1.0, 2.0], [1.0], rng)
        return np.array([w[0, 0], w[1, 0]])

    ens = mc_collect(one, EnsembleConfig(replicas=10_000, seed=seed))
    entry = covariance_table(ens, [(0, 1)]).entry(0, 1)
    assert abs(entry.cov - 1.0) <= 3.0 * entry.stderr
