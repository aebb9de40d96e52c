"""Acceptance-band evaluation for every verified statistic.

Each check runs one experiment at its registered scale and compares the
result against a fixed band. Statistical bands were frozen ahead of time
from 1000-seed calibration runs (or are analytic where possible) and are
never tuned against an individual run; the CLI exposes them through
``--check`` and the acceptance test suite executes all of them.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .geometry import (
    HitQuery,
    hit_min_distances,
    hit_scaling,
    kendall_J,
    kendall_limit,
    sojourn_Q,
    sojourn_factor,
    sojourn_tail_factor,
)
from .mc import EnsembleConfig, covariance_table, mc_collect, report_from_samples
from .ou import (
    PathEvent,
    PathFunctional,
    capacity_estimate,
    mehler_apply,
    mehler_symmetry_check,
    strong_markov_test,
)
from .pathstats import (
    CHUNG_CONSTANT,
    PhiAlpha,
    chung_modulus,
    levy_modulus,
    lil_block_scan,
    lil_profile,
    nowhere_diff_stat,
    partition_dyadic,
    quadratic_variation,
    reflection_check,
    upper_class_test,
)
from .ou import OUSheet
from .rng import Seed
from .sheet import GridSpec, Path, SheetField, lattice_values, sample_multiscale, sample_sheet

DEFAULT_MASTER = 20260810

# Frozen acceptance bands. Empirical ones were committed from
# pre-registered 1000-seed (or stated-scale) calibration runs before final
# testing; where a calibration contradicted an earlier indicative number,
# the calibrated band is the committed one and the decision log records it.
LIL_SUP_BAND = (0.55, 1.60)  # calibration: sup quantiles p1=0.52, p99=1.69; coverage 0.965
LIL_PASS_FRACTION = 0.90
BLOCK_E_MIN_FREQ = 0.02  # calibration: mean per-seed frequency 0.0348
BLOCK_F_CLEAR_FRACTION = 0.90  # calibration: clear fraction 0.939
MODULUS_BAND = (0.95, 1.30)  # calibration: median 1.126, p5..p95 = 1.046..1.222
MODULUS_PASS_FRACTION = 0.90
CHUNG_BAND = (0.60, 0.85)  # at (eps=2^-12, t-grid 2^18); calibration median 0.699
# Deviation trend measured with windows resolved ever more finely so the
# discrete small-ball bias shrinks along with eps.
CHUNG_TREND = ((2.0**-8, 2**16), (2.0**-10, 2**19), (2.0**-12, 2**22))
QV_SUP_LIMIT = 0.15
QV_PASS_FRACTION = 0.95
QV_VAR_SLOPE_BAND = (-1.3, -0.7)
HIT_SLOPE_BANDS = {5: (1.0, 0.5), 6: (2.0, 0.7)}  # asymptotic exponent d - 4
HIT_GRID_STEPS = 128  # finest detection lattice inside the runtime cap
SOJOURN_TAIL_VARIATION = 0.10
KENDALL_FLOOR = 0.01  # calibration: J(r) = 0.0168..0.0197 on these radii


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    detail: str


def _seeds(base: Seed, count: int) -> list[Seed]:
    return [base.child(10_000 + 7 * k) for k in range(count)]


# --- criterion 1: sheet covariance against min(s,s') min(t,t') ----------

def check_covariance_suite(seed: Seed, jobs: int = 1) -> CheckResult:
    probes = [(0.25, 0.25), (0.5, 1.0), (1.0, 0.5), (1.0, 1.0), (0.75, 0.25)]
    s_pts = np.array(sorted({p[0] for p in probes}))
    t_pts = np.array(sorted({p[1] for p in probes}))
    locs = [(int(np.searchsorted(s_pts, a)), int(np.searchsorted(t_pts, b))) for a, b in probes]

    def one(rng: np.random.Generator) -> np.ndarray:
        w = lattice_values(s_pts, t_pts, rng)
        return np.array([w[i, j] for i, j in locs])

    cfg = EnsembleConfig(replicas=10_000, seed=seed, parallelism=jobs)
    ensemble = mc_collect(one, cfg)
    pairs = [(i, j) for i in range(5) for j in range(i + 1, 5)]
    table = covariance_table(ensemble, pairs)
    worst = 0.0
    for e in table.entries:
        (s1, t1), (s2, t2) = probes[e.i], probes[e.j]
        oracle = min(s1, s2) * min(t1, t2)
        worst = max(worst, abs(e.cov - oracle) / e.stderr)
    return CheckResult(
        name="covariance-suite",
        passed=worst <= 3.0,
        detail=f"10 probe pairs at 1e4 replicas; worst |cov-oracle| = {worst:.2f} stderr (limit 3)",
    )


# --- criterion 2: iterated-logarithm profile ----------------------------

def check_lil(seed: Seed, jobs: int = 1, n_seeds: int = 50) -> CheckResult:
    in_band = 0
    monotone = True
    for sd in _seeds(seed, n_seeds):
        prof = lil_profile(sample_multiscale(2.0, 10, 40, 64, sd))
        lo, hi = LIL_SUP_BAND
        if lo <= prof.global_sup <= hi:
            in_band += 1
        if np.any(np.diff(prof.running_max, axis=0) < 0):
            monotone = False
    frac = in_band / n_seeds
    return CheckResult(
        name="lil-profile",
        passed=frac >= LIL_PASS_FRACTION and monotone,
        detail=(
            f"global sup in {LIL_SUP_BAND} for {in_band}/{n_seeds} seeds "
            f"(need >= {LIL_PASS_FRACTION:.0%}); running max monotone: {monotone}"
        ),
    )


# --- criterion 3: block-scan event frequencies --------------------------

def check_lil_blocks(seed: Seed, jobs: int = 1, n_seeds: int = 100) -> CheckResult:
    e_freqs = []
    f_clear = 0
    for sd in _seeds(seed, n_seeds):
        ms = sample_multiscale(2.0, 10, 40, 64, sd)
        low = lil_block_scan(ms, c=0.5, eps=0.1)
        e_freqs.append(float(np.mean(low.e_occurred)))
        high = lil_block_scan(ms, c=1.5, eps=0.1)
        late = high.f_levels >= 25
        if not np.any(high.f_occurred[late]):
            f_clear += 1
    mean_freq = float(np.mean(e_freqs))
    clear_frac = f_clear / n_seeds
    passed = mean_freq >= BLOCK_E_MIN_FREQ and clear_frac >= BLOCK_F_CLEAR_FRACTION
    return CheckResult(
        name="lil-blocks",
        passed=passed,
        detail=(
            f"mean E-frequency {mean_freq:.3f} (need >= {BLOCK_E_MIN_FREQ}); "
            f"no F at n >= 25 in {clear_frac:.0%} of seeds (need >= {BLOCK_F_CLEAR_FRACTION:.0%})"
        ),
    )


# --- criterion 4: uniform continuity modulus ----------------------------

def check_levy_modulus(seed: Seed, jobs: int = 1, n_seeds: int = 30) -> CheckResult:
    eps_levels = [2.0**-k for k in range(8, 15)]
    grid = GridSpec(1.0, math.e, 0.0, 1.0, 64, 2**17)
    finest = []
    sup_matrix = []
    for sd in _seeds(seed, n_seeds):
        prof = levy_modulus(sample_sheet(grid, sd), eps_levels)
        sup_matrix.append(prof.sup_ratio)
        finest.append(prof.sup_ratio[-1])  # eps sorted descending; last = 2^-14
    finest = np.array(finest)
    lo, hi = MODULUS_BAND
    in_band = int(np.sum((finest >= lo) & (finest <= hi)))
    dev_median = np.median(np.abs(np.array(sup_matrix) - 1.0), axis=0)
    trend = bool(np.all(np.diff(dev_median) < 0))
    frac = in_band / n_seeds
    return CheckResult(
        name="levy-modulus",
        passed=frac >= MODULUS_PASS_FRACTION and trend,
        detail=(
            f"sup ratio at eps=2^-14 in {MODULUS_BAND} for {in_band}/{n_seeds} seeds; "
            f"median |ratio-1| decreasing across eps: {trend} "
            f"({', '.join(f'{d:.3f}' for d in dev_median)})"
        ),
    )


# --- criterion 5: small-ball modulus ------------------------------------

def _ou_sheet_for_chung(sd: Seed, t_steps: int, s_levels: int) -> OUSheet:
    # OU s-grid uniform on [0, 1]: sheet sampled on the matching log-spaced lattice.
    s_grid = np.linspace(0.0, 1.0, s_levels)
    t_grid = np.linspace(0.0, 1.0, t_steps + 1)
    coords = np.exp(s_grid)
    values = lattice_values(coords, t_grid, sd.stream(0)) / np.sqrt(coords)[:, None]
    return OUSheet(s_grid=s_grid, t_grid=t_grid, values=values)


def check_chung_modulus(seed: Seed, jobs: int = 1, n_seeds: int = 15) -> CheckResult:
    # Band at the registered (eps, grid) pair.
    band_vals = []
    for sd in _seeds(seed, n_seeds):
        ou = _ou_sheet_for_chung(sd, t_steps=2**18, s_levels=16)
        band_vals.append(float(np.median(chung_modulus(ou, 2.0**-12, t_max=0.9).stats)))
    band_median = float(np.median(band_vals))
    lo, hi = CHUNG_BAND

    # Trend toward pi/sqrt(8) with per-level grids refining as eps shrinks.
    medians = []
    for eps, t_steps in CHUNG_TREND:
        vals = []
        for sd in _seeds(seed.child(1), n_seeds):
            ou = _ou_sheet_for_chung(sd, t_steps=t_steps, s_levels=16)
            vals.append(float(np.median(chung_modulus(ou, eps, t_max=0.9).stats)))
        medians.append(float(np.median(vals)))
    devs = [abs(m - CHUNG_CONSTANT) for m in medians]
    trend = bool(np.all(np.diff(devs) < 0))
    return CheckResult(
        name="chung-modulus",
        passed=(lo <= band_median <= hi) and trend,
        detail=(
            f"seed-median at (2^-12, grid 2^18): {band_median:.3f} in {CHUNG_BAND}; "
            f"|median - pi/sqrt(8)| across refining eps: "
            f"{', '.join(f'{d:.3f}' for d in devs)} (decreasing: {trend})"
        ),
    )


# --- criterion 6: nowhere-differentiability statistic -------------------

def check_nowhere_diff(seed: Seed, jobs: int = 1, n_seeds: int = 30) -> CheckResult:
    n_levels = [16, 32, 64, 128, 256]
    grid = GridSpec(1.0, math.e, 0.0, 1.0, 16, 2**13)
    stats = []
    for sd in _seeds(seed, n_seeds):
        prof = nowhere_diff_stat(sample_sheet(grid, sd), n_levels, t_max=0.5)
        stats.append(prof.stats)
    median = np.median(np.array(stats), axis=0)
    monotone = bool(np.all(np.diff(median) > 0))

    linear = SheetField(grid=grid, values=np.tile(grid.t_points, (grid.s_steps + 1, 1)))
    control = nowhere_diff_stat(linear, n_levels, t_max=0.5)
    control_ok = bool(np.allclose(control.stats, 1.0, rtol=1e-12, atol=1e-12))
    return CheckResult(
        name="nowhere-diff",
        passed=monotone and control_ok,
        detail=(
            f"seed-median statistic across n=16..256: {', '.join(f'{v:.3f}' for v in median)} "
            f"(increasing: {monotone}); linear control pinned at 1: {control_ok}"
        ),
    )


# --- criterion 7: quadratic variation -----------------------------------

def check_quadratic_variation(seed: Seed, jobs: int = 1, n_seeds: int = 50) -> CheckResult:
    grid = GridSpec(1.0, math.e, 0.0, 1.0, 64, 2**13)
    scheme = partition_dyadic(12)
    within = 0
    identity_ok = True
    for sd in _seeds(seed, n_seeds):
        sheet = sample_sheet(grid, sd)
        prof = quadratic_variation(sheet, scheme, 2**12, 1.0)
        if prof.sup_abs <= QV_SUP_LIMIT:
            within += 1
        v1 = quadratic_variation(sheet, scheme, 1, 1.0)
        direct = sheet.values[:, -1] ** 2 - sheet.s_points
        if not np.allclose(v1.vn, direct, rtol=1e-12, atol=1e-12):
            identity_ok = False

    # Depth scaling of Var V_n at s = 1 on 1000 auxiliary replicas.
    depths = [2**k for k in range(4, 13)]
    t_pts = np.linspace(0.0, 1.0, 2**13 + 1)

    def one(rng: np.random.Generator) -> np.ndarray:
        path = lattice_values([1.0], t_pts, rng)[0]
        out = np.empty(len(depths))
        for m, n in enumerate(depths):
            idx = np.arange(n + 1) * (2**13 // n)
            inc = np.diff(path[idx])
            out[m] = float(np.sum(inc**2) - 1.0)
        return out

    cfg = EnsembleConfig(replicas=1000, seed=seed.child(5), parallelism=jobs)
    vn_matrix = mc_collect(one, cfg)
    variances = vn_matrix.var(axis=0, ddof=1)
    slope = float(np.polyfit(np.log(depths), np.log(variances), 1)[0])
    frac = within / n_seeds
    lo, hi = QV_VAR_SLOPE_BAND
    passed = frac >= QV_PASS_FRACTION and identity_ok and lo <= slope <= hi
    return CheckResult(
        name="quadratic-variation",
        passed=passed,
        detail=(
            f"sup |V_n| <= {QV_SUP_LIMIT} in {within}/{n_seeds} seeds; single-term identity exact: "
            f"{identity_ok}; Var(V_n) log-log slope {slope:.2f} in [{lo}, {hi}]"
        ),
    )


# --- criterion 8: upper-class verdict table ------------------------------

def check_upper_class(seed: Seed, jobs: int = 1) -> CheckResult:
    expected = {
        (2.0, "erdos"): "diverges",
        (2.0, "mountford"): "diverges",
        (4.0, "erdos"): "converges",
        (4.0, "mountford"): "diverges",
        (6.0, "erdos"): "converges",
        (6.0, "mountford"): "converges",
    }
    rows = []
    ok = True
    for (alpha, which), want in expected.items():
        got = upper_class_test(PhiAlpha(alpha), which).verdict
        ok &= got == want
        rows.append(f"alpha={alpha:g} {which}: {got}")
    return CheckResult(name="upper-class", passed=ok, detail="; ".join(rows))


# --- criterion 9: reflection inequality ----------------------------------

def check_reflection(seed: Seed, jobs: int = 1) -> CheckResult:
    grid_points = [(0.5, 1.0), (1.0, 0.5), (1.0, 1.0), (1.0, 2.0), (2.0, 1.5)]
    details = []
    ok = True
    for k, (t_max, lam) in enumerate(grid_points):
        lhs, rhs = reflection_check(t_max, lam, replicas=10_000, seed=seed.child(100 + k), parallelism=jobs)
        combined = math.sqrt(lhs.stderr**2 + (2.0 * rhs.stderr) ** 2)
        slack = 2.0 * rhs.mean + 3.0 * combined - lhs.mean
        ok &= slack >= 0.0
        details.append(f"(T={t_max:g}, lam={lam:g}): lhs={lhs.mean:.4f} 2rhs={2 * rhs.mean:.4f}")
    return CheckResult(name="reflection", passed=ok, detail="; ".join(details))


# --- criterion 10: strong Markov harness ---------------------------------

def check_strong_markov(seed: Seed, jobs: int = 1) -> CheckResult:
    report = strong_markov_test(
        lam=1.0,
        lags=[(0.5, 0.5), (0.5, 1.0), (1.0, 1.0)],
        replicas=1000,
        seed=seed,
        parallelism=jobs,
    )
    cov_sigma = report.max_cov_sigma()
    corr_sigma = report.max_corr_sigma()
    passed = cov_sigma <= 3.0 and corr_sigma <= 3.0
    return CheckResult(
        name="strong-markov",
        passed=passed,
        detail=(
            f"worst covariance deviation {cov_sigma:.2f} stderr; worst pre-S correlation "
            f"{corr_sigma:.2f} stderr (limits 3); unfired {report.unfired}"
        ),
    )


# --- criterion 11: transition-semigroup averages -------------------------

def check_mehler(seed: Seed, jobs: int = 1) -> CheckResult:
    t_grid = np.linspace(0.0, 1.0, 257)
    x = Path(t=t_grid, x=t_grid.copy())
    s = 0.7
    ok = True
    details = []

    rep = mehler_apply(PathFunctional("eval", t0=1.0), x, s, 4000, seed.child(1), parallelism=jobs)
    target = math.exp(-s / 2.0) * 1.0
    ok &= rep.ci95[0] <= target <= rep.ci95[1]
    details.append(f"eval(1): {rep.mean:.4f} ci {rep.ci95[0]:.4f}..{rep.ci95[1]:.4f} target {target:.4f}")

    rep = mehler_apply(PathFunctional("square-eval", t0=1.0), x, s, 4000, seed.child(2), parallelism=jobs)
    target = (1.0 - math.exp(-s)) + math.exp(-s) * 1.0
    ok &= rep.ci95[0] <= target <= rep.ci95[1]
    details.append(f"sq-eval(1): {rep.mean:.4f} target {target:.4f}")

    triples = [
        (PathFunctional("eval", t0=1.0), PathFunctional("eval", t0=0.5), 0.7),
        (PathFunctional("eval", t0=1.0), PathFunctional("integral"), 0.3),
        (PathFunctional("sup"), PathFunctional("eval", t0=0.25), 1.0),
    ]
    for k, (f, g, s_k) in enumerate(triples):
        lhs, rhs = mehler_symmetry_check(f, g, s_k, 4000, seed.child(10 + k), parallelism=jobs)
        ok &= lhs.ci_overlaps(rhs)
        details.append(f"symmetry s={s_k:g}: {lhs.mean:.4f} vs {rhs.mean:.4f}")
    return CheckResult(name="mehler", passed=ok, detail="; ".join(details))


# --- criterion 12: capacity of the zero-crossing event -------------------

def check_capacity(seed: Seed, jobs: int = 1) -> CheckResult:
    event = PathEvent("zero-crossing-at", t0=1.0)
    rep = capacity_estimate(
        event, s_horizon_max=10.0, s_steps=1000, t_steps=16, replicas=1000, seed=seed, parallelism=jobs
    )
    positive = rep.mean > 0.0 and rep.ci95[0] > 0.0

    def snapshot_zero(rng: np.random.Generator) -> float:
        path = lattice_values([1.0], np.linspace(0.0, 1.0, 17), rng)[0]
        return 1.0 if path[-1] == 0.0 else 0.0

    cfg = EnsembleConfig(replicas=1000, seed=seed.child(3), parallelism=jobs)
    wiener_mass = report_from_samples(mc_collect(snapshot_zero, cfg))
    return CheckResult(
        name="capacity",
        passed=positive and wiener_mass.mean == 0.0,
        detail=(
            f"killed-hitting estimate {rep.mean:.3f} ci ({rep.ci95[0]:.3f}, {rep.ci95[1]:.3f}) "
            f"excludes 0: {positive}; Wiener mass of {{f(1)=0}}: {wiener_mass.mean}"
        ),
    )


# --- criterion 13: hitting scaling ---------------------------------------

def hit_scaling_subchecks(seed: Seed, jobs: int = 1, replicas: int = 10_000) -> dict[int, CheckResult]:
    """Per-dimension slope checks at the registered radii and resolution.

    The supercritical slopes are checked against the asymptotic exponent
    d - 4 at the stated tolerances; d = 3 is checked for statistical
    flatness (within 3 fitted standard errors of zero).
    """
    eps_levels = [0.4, 0.3, 0.2]
    out: dict[int, CheckResult] = {}
    for d, (target, tol) in HIT_SLOPE_BANDS.items():
        hs = hit_scaling(d, eps_levels, HIT_GRID_STEPS, replicas, seed.child(d), parallelism=jobs)
        out[d] = CheckResult(
            name=f"hit-scaling-d{d}",
            passed=abs(hs.slope - target) <= tol,
            detail=f"slope {hs.slope:.3f} +- {hs.slope_stderr:.3f} (band {target} +- {tol})",
        )
    hs3 = hit_scaling(3, eps_levels, HIT_GRID_STEPS, replicas, seed.child(3), parallelism=jobs)
    out[3] = CheckResult(
        name="hit-scaling-d3",
        passed=abs(hs3.slope) <= 3.0 * hs3.slope_stderr,
        detail=f"slope {hs3.slope:.3f} +- {hs3.slope_stderr:.3f} (flat within 3 stderr)",
    )
    return out


def check_hit_scaling(seed: Seed, jobs: int = 1) -> CheckResult:
    subs = hit_scaling_subchecks(seed, jobs=jobs)
    ok = all(r.passed for r in subs.values())
    detail = "; ".join(f"d={d}: {r.detail} -> {'ok' if r.passed else 'FAIL'}" for d, r in sorted(subs.items()))
    return CheckResult(name="hit-scaling", passed=ok, detail=detail)


# --- criterion 14: sojourn spectrum --------------------------------------

def check_sojourn(seed: Seed, jobs: int = 1) -> CheckResult:
    q0 = sojourn_factor(0.0) ** 2
    q0_ok = abs(q0 - 0.25) <= 1e-6 * 0.25

    mags = [1e2, 1e3, 1e4]
    ratios = [sojourn_factor(m) ** 2 / sojourn_tail_factor(m) ** 2 for m in mags]
    variation = max(ratios) / min(ratios) - 1.0
    tail_ok = variation < SOJOURN_TAIL_VARIATION

    verdict_ok = all(sojourn_Q(d, [0.0]).integrable == (d <= 3) for d in range(1, 7))
    passed = q0_ok and tail_ok and verdict_ok
    return CheckResult(
        name="sojourn",
        passed=passed,
        detail=(
            f"Q(0) = {q0:.8f} (target 0.25); tail ratio variation {variation:.4f} "
            f"(limit {SOJOURN_TAIL_VARIATION}); verdicts finite iff d<=3: {verdict_ok}"
        ),
    )


# --- criterion 15: level-component pinning --------------------------------

def check_kendall(seed: Seed, jobs: int = 1) -> CheckResult:
    r_levels = [0.1, 0.05, 0.02]
    details = []
    floors_ok = True
    reports = []
    for k, r in enumerate(r_levels):
        rep = kendall_J(r, 64, 2000, seed.child(20 + k), parallelism=jobs)
        reports.append(rep)
        floors_ok &= rep.mean >= KENDALL_FLOOR and rep.ci95[0] > 0.0
        details.append(f"J({r:g}) = {rep.mean:.4f}")
    limit = kendall_limit(10_000, seed.child(30), parallelism=jobs)
    details.append(f"limit = {limit.mean:.4f}")

    # Trend toward the limit: the curve is shallow (calibration: J falls
    # 0.0197 -> 0.0168 across r = 0.2 -> 0.02 against a limit of 0.0155),
    # so it is resolved at 20k replicas and judged within sampling noise.
    gaps = []
    sigmas = []
    for k, r in enumerate(r_levels):
        rep = kendall_J(r, 64, 20_000, seed.child(50 + k), parallelism=jobs)
        gaps.append(rep.mean - limit.mean)
        sigmas.append(math.hypot(rep.stderr, limit.stderr))
    above = all(g >= -2.0 * s for g, s in zip(gaps, sigmas))
    closing = gaps[-1] <= gaps[0] + 2.0 * math.hypot(sigmas[0], sigmas[-1])
    details.append(f"gap to limit: {', '.join(f'{g:.4f}' for g in gaps)}")
    return CheckResult(
        name="kendall",
        passed=floors_ok and above and closing,
        detail="; ".join(details),
    )


CRITERIA: dict[str, Callable[..., CheckResult]] = {
    "covariance-suite": check_covariance_suite,
    "lil-profile": check_lil,
    "lil-blocks": check_lil_blocks,
    "levy-modulus": check_levy_modulus,
    "chung-modulus": check_chung_modulus,
    "nowhere-diff": check_nowhere_diff,
    "quadratic-variation": check_quadratic_variation,
    "upper-class": check_upper_class,
    "reflection": check_reflection,
    "strong-markov": check_strong_markov,
    "mehler": check_mehler,
    "capacity": check_capacity,
    "hit-scaling": check_hit_scaling,
    "sojourn": check_sojourn,
    "kendall": check_kendall,
}


def run_criterion(name: str, seed: Seed | None = None, jobs: int = 1) -> CheckResult:
    if name not in CRITERIA:
        raise KeyError(name)
    return CRITERIA[name](seed or Seed(DEFAULT_MASTER), jobs=jobs)
