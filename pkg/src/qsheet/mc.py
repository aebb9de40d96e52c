"""Reproducible Monte Carlo execution and estimate aggregation.

Every stochastic experiment in this package is a pure function of a
:class:`numpy.random.Generator`; :func:`mc_run` executes it over derived
per-replica streams and aggregates in ascending replica order with numpy's
pairwise summation, so reports are bit-identical regardless of the degree
of parallelism.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .errors import ArgumentError, NumericError
from .rng import Seed


@dataclass(frozen=True)
class EstimateReport:
    """A Monte Carlo estimate with its sampling uncertainty.

    ``ci95`` is ``mean +- 1.96 * stderr`` and ``stderr`` is the sample
    standard deviation over replicas divided by ``sqrt(replicas)``.
    """

    mean: float
    stderr: float
    replicas: int
    ci95: tuple[float, float]
    note: str = ""

    def ci_excludes(self, value: float) -> bool:
        lo, hi = self.ci95
        return value < lo or value > hi

    def ci_overlaps(self, other: "EstimateReport") -> bool:
        lo_a, hi_a = self.ci95
        lo_b, hi_b = other.ci95
        return lo_a <= hi_b and lo_b <= hi_a


def report_from_samples(values: np.ndarray, note: str = "") -> EstimateReport:
    """Aggregate replica values in fixed order into an EstimateReport."""
    values = np.asarray(values, dtype=float)
    if values.ndim != 1 or values.size == 0:
        raise ArgumentError("replica values must form a nonempty 1-d array")
    n = values.size
    if not np.isfinite(values).all():
        msg = "numeric error: non-finite replica values"
        note = f"{note}; {msg}" if note else msg
    with np.errstate(invalid="ignore"):
        mean = float(np.sum(values) / n)
        if n > 1:
            var = float(np.sum((values - mean) ** 2) / (n - 1))
            stderr = float(np.sqrt(var / n))
        else:
            stderr = 0.0
    return EstimateReport(
        mean=mean,
        stderr=stderr,
        replicas=n,
        ci95=(mean - 1.96 * stderr, mean + 1.96 * stderr),
        note=note,
    )


@dataclass(frozen=True)
class EnsembleConfig:
    """Execution plan for a replicated experiment.

    ``stream_offset`` shifts the replica-to-stream mapping so that several
    ensembles under one master seed stay independent. Results never depend
    on ``parallelism``.
    """

    replicas: int
    seed: Seed
    parallelism: int = 1
    stream_offset: int = 0
    params: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.replicas < 1:
            raise ArgumentError(f"replicas must be >= 1, got {self.replicas}")
        if self.parallelism < 1:
            raise ArgumentError(f"parallelism must be >= 1, got {self.parallelism}")


def mc_collect(experiment: Callable[[np.random.Generator], object], cfg: EnsembleConfig) -> np.ndarray:
    """Run ``experiment`` once per replica and stack results by replica index.

    The experiment receives the stream derived from ``(seed, offset + k)``
    and must be pure given that stream. A replica failure aborts the whole
    run and names the replica.
    """
    results: list[object] = [None] * cfg.replicas

    def run_one(k: int) -> None:
        rng = cfg.seed.stream(cfg.stream_offset + k)
        results[k] = experiment(rng)

    if cfg.parallelism == 1:
        for k in range(cfg.replicas):
            try:
                run_one(k)
            except Exception as exc:  # noqa: BLE001 - re-raise with replica index
                raise NumericError(f"replica {k} failed: {exc}") from exc
    else:
        with ThreadPoolExecutor(max_workers=cfg.parallelism) as pool:
            futures = {k: pool.submit(run_one, k) for k in range(cfg.replicas)}
        for k in range(cfg.replicas):
            exc = futures[k].exception()
            if exc is not None:
                raise NumericError(f"replica {k} failed: {exc}") from exc
    return np.asarray(results, dtype=float)


def mc_run(experiment: Callable[[np.random.Generator], float], cfg: EnsembleConfig, note: str = "") -> EstimateReport:
    """Mean / stderr over replicas of a scalar experiment."""
    values = mc_collect(experiment, cfg)
    if values.ndim != 1:
        raise ArgumentError("mc_run needs a scalar-valued experiment; use mc_collect for vectors")
    return report_from_samples(values, note=note)


def ks_distance(sample_a: Sequence[float], sample_b: Sequence[float]) -> float:
    """Sup distance between the empirical CDFs of two samples."""
    a = np.sort(np.asarray(sample_a, dtype=float))
    b = np.sort(np.asarray(sample_b, dtype=float))
    if a.size == 0 or b.size == 0:
        raise ArgumentError("ks_distance needs two nonempty samples")
    grid = np.concatenate([a, b])
    cdf_a = np.searchsorted(a, grid, side="right") / a.size
    cdf_b = np.searchsorted(b, grid, side="right") / b.size
    return float(np.max(np.abs(cdf_a - cdf_b)))


@dataclass(frozen=True)
class CovarianceEntry:
    i: int
    j: int
    cov: float
    stderr: float


@dataclass(frozen=True)
class CovarianceTable:
    entries: tuple[CovarianceEntry, ...]

    def entry(self, i: int, j: int) -> CovarianceEntry:
        for e in self.entries:
            if (e.i, e.j) == (i, j) or (e.i, e.j) == (j, i):
                return e
        raise KeyError((i, j))


def covariance_table(ensemble: np.ndarray, probes: Sequence[tuple[int, int]]) -> CovarianceTable:
    """Unbiased sample covariances between probe columns of an ensemble.

    ``ensemble`` has one row per replica. The standard error of each
    covariance is the replica-to-replica spread of the demeaned products.
    """
    data = np.asarray(ensemble, dtype=float)
    if data.ndim != 2 or data.shape[0] < 2:
        raise ArgumentError("ensemble must be a (replicas, probes) array with >= 2 replicas")
    n = data.shape[0]
    centered = data - np.sum(data, axis=0) / n
    entries = []
    for i, j in probes:
        prod = centered[:, i] * centered[:, j]
        cov = float(np.sum(prod) / (n - 1))
        spread = float(np.sqrt(np.sum((prod - np.sum(prod) / n) ** 2) / (n - 1)))
        entries.append(CovarianceEntry(i=i, j=j, cov=cov, stderr=spread / np.sqrt(n)))
    return CovarianceTable(entries=tuple(entries))
