"""Command-line front end: one subcommand per experiment.

Every subcommand writes CSV (UTF-8, LF, '.' decimals, mandatory header,
effective config echoed as a leading comment) and optionally a standalone
SVG plot. Identical flags and seed give byte-identical output; ``--jobs``
only schedules replica work and never changes bytes. ``--check`` evaluates
the experiment's frozen acceptance band instead of emitting a profile.

Exit codes: 0 success, 1 usage error, 2 numeric or runtime failure,
3 acceptance-band violation in ``--check`` mode.
"""

from __future__ import annotations

import argparse
import math
import os
import sys
from typing import IO, Sequence

import numpy as np

from . import checks
from .errors import ArgumentError, NumericError, RangeError
from .geometry import (
    HitQuery,
    hit_min_distances,
    hit_scaling,
    kendall_limit,
    kendall_profile,
    range_volume,
    sojourn_Q,
    sojourn_fourier_mc,
)
from .mc import EstimateReport
from .ou import (
    PathEvent,
    PathFunctional,
    capacity_estimate,
    mehler_apply,
    strong_markov_test,
)
from .pathstats import (
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
from .rng import Seed
from .sheet import GridSpec, Path, sample_multiscale, sample_sheet, sheet_to_csv
from .svgplot import PlotSpec, Table, render_svg

ENV_SEED = "QSHEET_SEED"
DEFAULT_SEED = checks.DEFAULT_MASTER


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message: str) -> None:  # exit 1 instead of argparse's 2
        raise UsageError(message)


def _reals(text: str) -> list[float]:
    try:
        return [float(v) for v in text.split(",") if v != ""]
    except ValueError as exc:
        raise UsageError(f"expected a comma-separated real list, got {text!r}") from exc


def _ints(text: str) -> list[int]:
    try:
        return [int(v) for v in text.split(",") if v != ""]
    except ValueError as exc:
        raise UsageError(f"expected a comma-separated integer list, got {text!r}") from exc


def _fmt(value: float) -> str:
    return f"{value:.10g}"


def _write_csv(
    out: IO[str],
    header: Sequence[str],
    rows: Sequence[Sequence[object]],
    config: dict[str, object],
) -> None:
    cfg = " ".join(f"{k}={v}" for k, v in sorted(config.items()))
    out.write(f"# config: {cfg}\n")
    out.write(",".join(header) + "\n")
    for row in rows:
        out.write(",".join(v if isinstance(v, str) else _fmt(float(v)) for v in row) + "\n")


def _report_rows(experiment: str, items: Sequence[tuple[str, EstimateReport]]) -> list[list[object]]:
    return [
        [experiment, param, rep.mean, rep.stderr, rep.replicas]
        for param, rep in items
    ]


_REPORT_HEADER = ("experiment", "param", "estimate", "stderr", "replicas")


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--seed", type=int, default=None, help="master seed (default: env QSHEET_SEED or builtin)")
    p.add_argument("--out", default=None, help="CSV output path (default stdout)")
    p.add_argument("--svg", default=None, help="also render an SVG plot to this path")
    p.add_argument("--jobs", type=int, default=1, help="replica parallelism; never changes output bytes")
    p.add_argument("--check", action="store_true", help="evaluate the acceptance band; exit 3 on violation")


def build_parser() -> _Parser:
    parser = _Parser(prog="qsheet", description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = parser.add_subparsers(dest="command", required=True)

    def cmd(name: str, help_text: str) -> argparse.ArgumentParser:
        p = sub.add_parser(name, help=help_text, formatter_class=argparse.ArgumentDefaultsHelpFormatter)
        _add_common(p)
        return p

    p = cmd("simulate", "sample one sheet and emit s,t,value rows")
    p.add_argument("--s-min", type=float, default=0.0)
    p.add_argument("--s-max", type=float, default=1.0)
    p.add_argument("--t-min", type=float, default=0.0)
    p.add_argument("--t-max", type=float, default=1.0)
    p.add_argument("--s-steps", type=int, default=64)
    p.add_argument("--t-steps", type=int, default=64)

    p = cmd("lil", "iterated-logarithm ratio profile over geometric t-levels")
    p.add_argument("--theta", type=float, default=2.0)
    p.add_argument("--n-min", type=int, default=10)
    p.add_argument("--n-max", type=int, default=40)
    p.add_argument("--s-steps", type=int, default=64)

    p = cmd("lil-blocks", "lower/upper threshold events per level")
    p.add_argument("--theta", type=float, default=2.0)
    p.add_argument("--n-min", type=int, default=10)
    p.add_argument("--n-max", type=int, default=40)
    p.add_argument("--s-steps", type=int, default=64)
    p.add_argument("--c", type=float, default=0.5)
    p.add_argument("--eps", type=float, default=0.1)

    p = cmd("modulus", "uniform continuity modulus across window widths")
    p.add_argument("--s-steps", type=int, default=64)
    p.add_argument("--t-steps", type=int, default=2**17)
    p.add_argument("--eps-powers", type=_ints, default=list(range(8, 15)), help="negative dyadic powers")

    p = cmd("chung", "small-ball modulus statistic per OU time-slice")
    p.add_argument("--eps-power", type=int, default=12, help="eps = 2^-power")
    p.add_argument("--t-steps", type=int, default=2**18)
    p.add_argument("--s-levels", type=int, default=16)
    p.add_argument("--t-max", type=float, default=0.9)

    p = cmd("nodiff", "nowhere-differentiability statistic across window counts")
    p.add_argument("--n-levels", type=_ints, default=[16, 32, 64, 128, 256])
    p.add_argument("--s-steps", type=int, default=16)
    p.add_argument("--t-steps", type=int, default=2**13)
    p.add_argument("--t-max", type=float, default=0.5)

    p = cmd("qv", "centered quadratic variation along dyadic partitions")
    p.add_argument("--depth", type=int, default=12, help="partition size 2^depth")
    p.add_argument("--t", type=float, default=1.0)
    p.add_argument("--s-steps", type=int, default=64)
    p.add_argument("--t-steps", type=int, default=2**13)

    p = cmd("upperclass", "upper-class integral tests for the three-log family")
    p.add_argument("--alpha", type=_reals, default=[4.0])

    p = cmd("capacity", "killed-hitting probability of a path event")
    p.add_argument("--t0", type=float, default=1.0, help="zero-crossing coordinate")
    p.add_argument("--horizon", type=float, default=10.0)
    p.add_argument("--s-steps", type=int, default=1000)
    p.add_argument("--t-steps", type=int, default=16)
    p.add_argument("--replicas", type=int, default=1000)

    p = cmd("markov", "post-stopping increment independence harness")
    p.add_argument("--lam", type=float, default=1.0)
    p.add_argument("--lags", default="0.5:0.5,0.5:1,1:1", help="comma list of s:t lag pairs")
    p.add_argument("--replicas", type=int, default=1000)

    p = cmd("reflect", "reflection inequality for the scaled sup functional")
    p.add_argument("--t-horizon", type=float, default=1.0)
    p.add_argument("--lam", type=float, default=1.0)
    p.add_argument("--replicas", type=int, default=10_000)

    p = cmd("mehler", "transition-semigroup Monte Carlo average from a linear start")
    p.add_argument("--s", type=float, default=0.7)
    p.add_argument("--kind", default="eval", choices=["eval", "square-eval", "sup", "integral", "sign-zero"])
    p.add_argument("--t0", type=float, default=1.0)
    p.add_argument("--replicas", type=int, default=4000)
    p.add_argument("--t-steps", type=int, default=256)

    p = cmd("hit", "point-hitting probabilities across radii")
    p.add_argument("--dim", type=int, default=5)
    p.add_argument("--eps", type=_reals, default=[0.4, 0.3, 0.2])
    p.add_argument("--grid", type=int, default=64)
    p.add_argument("--replicas", type=int, default=10_000)

    p = cmd("hitscale", "fitted log-log slope of the hitting probability")
    p.add_argument("--dim", type=int, default=5)
    p.add_argument("--eps", type=_reals, default=[0.4, 0.3, 0.2])
    p.add_argument("--grid", type=int, default=64)
    p.add_argument("--replicas", type=int, default=10_000)

    p = cmd("rangevol", "box-occupancy proxy for the range volume")
    p.add_argument("--dim", type=int, default=2)
    p.add_argument("--grid", type=int, default=256)
    p.add_argument("--box", type=_reals, default=[0.1, 0.05])
    p.add_argument("--replicas", type=int, default=100)

    p = cmd("sojourn", "sojourn spectrum by quadrature, optional Monte Carlo")
    p.add_argument("--dim", type=int, default=3)
    p.add_argument("--xi", type=_reals, default=[0.0, 1.0, 100.0, 1000.0, 10000.0])
    p.add_argument("--mc-replicas", type=int, default=0, help="if > 0, add an MC column at each |xi|")
    p.add_argument("--mc-grid", type=int, default=64)

    p = cmd("kendall", "level-component pinning probabilities and their limit")
    p.add_argument("--r", type=_reals, default=[0.1, 0.05, 0.02])
    p.add_argument("--boundary", type=int, default=64)
    p.add_argument("--replicas", type=int, default=2000)
    p.add_argument("--limit-replicas", type=int, default=10_000)

    return parser


_CHECK_BY_COMMAND = {
    "simulate": "covariance-suite",
    "lil": "lil-profile",
    "lil-blocks": "lil-blocks",
    "modulus": "levy-modulus",
    "chung": "chung-modulus",
    "nodiff": "nowhere-diff",
    "qv": "quadratic-variation",
    "upperclass": "upper-class",
    "capacity": "capacity",
    "markov": "strong-markov",
    "reflect": "reflection",
    "mehler": "mehler",
    "hitscale": "hit-scaling",
    "sojourn": "sojourn",
    "kendall": "kendall",
}


def _run_hit_check(args: argparse.Namespace, seed: Seed) -> checks.CheckResult:
    hs = hit_scaling(args.dim, args.eps, args.grid, args.replicas, seed, parallelism=args.jobs)
    if args.dim in checks.HIT_SLOPE_BANDS:
        target, tol = checks.HIT_SLOPE_BANDS[args.dim]
        ok = abs(hs.slope - target) <= tol
        detail = f"d={args.dim}: slope {hs.slope:.3f}, band {target} +- {tol}"
    else:
        ok = abs(hs.slope) <= 3.0 * hs.slope_stderr
        detail = f"d={args.dim}: slope {hs.slope:.3f} +- {hs.slope_stderr:.3f}, flat within 3 stderr"
    return checks.CheckResult(name="hit", passed=ok, detail=detail)


def _execute(args: argparse.Namespace, seed: Seed, out: IO[str]) -> tuple[Table | None, PlotSpec | None]:
    """Run the experiment, write its CSV, and return the plottable table."""
    cmd = args.command
    jobs = args.jobs

    if cmd == "simulate":
        grid = GridSpec(args.s_min, args.s_max, args.t_min, args.t_max, args.s_steps, args.t_steps)
        sheet = sample_sheet(grid, seed)
        out.write(
            f"# config: command=simulate s_min={args.s_min} s_max={args.s_max} t_min={args.t_min} "
            f"t_max={args.t_max} s_steps={args.s_steps} t_steps={args.t_steps} seed={seed.master}\n"
        )
        sheet_to_csv(sheet, out)
        return None, None

    if cmd == "lil":
        prof = lil_profile(sample_multiscale(args.theta, args.n_min, args.n_max, args.s_steps, seed))
        rows = []
        for ni, n in enumerate(prof.n_values):
            for si, s in enumerate(prof.s_grid):
                rows.append([s, int(n), prof.ratios[ni, si], prof.running_max[ni, si]])
        cfg = dict(command=cmd, theta=args.theta, n_min=args.n_min, n_max=args.n_max,
                   s_steps=args.s_steps, seed=seed.master)
        _write_csv(out, ("s", "n", "ratio", "running_max"), rows, cfg)
        return Table(("s", "n", "ratio", "running_max"), tuple(tuple(map(float, r)) for r in rows)), PlotSpec(
            x="n", y=("running_max",), title="iterated-logarithm running max"
        )

    if cmd == "lil-blocks":
        ms = sample_multiscale(args.theta, args.n_min, args.n_max, args.s_steps, seed)
        scan = lil_block_scan(ms, args.c, args.eps)
        f_map = dict(zip(scan.f_levels.tolist(), scan.f_occurred.tolist()))
        rows = [
            [int(n), int(e), int(f_map[int(n)])]
            for n, e in zip(scan.e_levels.tolist(), scan.e_occurred.tolist())
        ]
        cfg = dict(command=cmd, theta=args.theta, n_min=args.n_min, n_max=args.n_max,
                   s_steps=args.s_steps, c=args.c, eps=args.eps, seed=seed.master)
        _write_csv(out, ("n", "e_n", "f_n"), rows, cfg)
        return None, None

    if cmd == "modulus":
        grid = GridSpec(1.0, math.e, 0.0, 1.0, args.s_steps, args.t_steps)
        eps = [2.0**-k for k in args.eps_powers]
        prof = levy_modulus(sample_sheet(grid, seed), eps)
        rows = [[e, r] for e, r in zip(prof.eps, prof.sup_ratio)]
        cfg = dict(command=cmd, s_steps=args.s_steps, t_steps=args.t_steps,
                   eps_powers=",".join(map(str, args.eps_powers)), seed=seed.master)
        _write_csv(out, ("eps", "sup_ratio"), rows, cfg)
        table = Table(("eps", "sup_ratio"), tuple(tuple(map(float, r)) for r in rows))
        return table, PlotSpec(x="eps", y=("sup_ratio",), logx=True, title="uniform modulus ratio")

    if cmd == "chung":
        eps = 2.0**-args.eps_power
        ou = checks._ou_sheet_for_chung(seed, args.t_steps, args.s_levels)
        prof = chung_modulus(ou, eps, args.t_max)
        rows = [[eps, s, v] for s, v in zip(prof.s_values, prof.stats)]
        cfg = dict(command=cmd, eps_power=args.eps_power, t_steps=args.t_steps,
                   s_levels=args.s_levels, t_max=args.t_max, seed=seed.master)
        _write_csv(out, ("eps", "s", "stat"), rows, cfg)
        table = Table(("eps", "s", "stat"), tuple(tuple(map(float, r)) for r in rows))
        return table, PlotSpec(x="s", y=("stat",), title="small-ball modulus statistic")

    if cmd == "nodiff":
        grid = GridSpec(1.0, math.e, 0.0, 1.0, args.s_steps, args.t_steps)
        prof = nowhere_diff_stat(sample_sheet(grid, seed), args.n_levels, args.t_max)
        rows = [[int(n), v] for n, v in zip(prof.n_values, prof.stats)]
        cfg = dict(command=cmd, n_levels=",".join(map(str, args.n_levels)), s_steps=args.s_steps,
                   t_steps=args.t_steps, t_max=args.t_max, seed=seed.master)
        _write_csv(out, ("n", "stat"), rows, cfg)
        table = Table(("n", "stat"), tuple(tuple(map(float, r)) for r in rows))
        return table, PlotSpec(x="n", y=("stat",), logx=True, title="smallest local oscillation * n")

    if cmd == "qv":
        grid = GridSpec(1.0, math.e, 0.0, 1.0, args.s_steps, args.t_steps)
        scheme = partition_dyadic(args.depth)
        prof = quadratic_variation(sample_sheet(grid, seed), scheme, 2**args.depth, args.t)
        rows = [[s, prof.n, v] for s, v in zip(prof.s_values, prof.vn)]
        cfg = dict(command=cmd, depth=args.depth, t=args.t, s_steps=args.s_steps,
                   t_steps=args.t_steps, seed=seed.master)
        _write_csv(out, ("s", "n", "vn"), rows, cfg)
        table = Table(("s", "n", "vn"), tuple(tuple(map(float, r)) for r in rows))
        return table, PlotSpec(x="s", y=("vn",), title="centered quadratic variation")

    if cmd == "upperclass":
        rows = []
        for alpha in args.alpha:
            for which in ("erdos", "mountford"):
                res = upper_class_test(PhiAlpha(alpha), which)
                rows.append([alpha, which, res.verdict, res.partial_value])
        cfg = dict(command=cmd, alpha=",".join(map(str, args.alpha)), seed=seed.master)
        _write_csv(out, ("alpha", "test", "verdict", "partial_value"), rows, cfg)
        return None, None

    if cmd == "capacity":
        event = PathEvent("zero-crossing-at", t0=args.t0)
        rep = capacity_estimate(event, args.horizon, args.s_steps, args.t_steps,
                                args.replicas, seed, parallelism=jobs)
        rows = _report_rows("capacity", [(f"zero-crossing-at({args.t0:g})", rep)])
        cfg = dict(command=cmd, t0=args.t0, horizon=args.horizon, s_steps=args.s_steps,
                   t_steps=args.t_steps, replicas=args.replicas, seed=seed.master)
        _write_csv(out, _REPORT_HEADER, rows, cfg)
        return None, None

    if cmd == "markov":
        lags = []
        for chunk in args.lags.split(","):
            a, _, b = chunk.partition(":")
            lags.append((float(a), float(b)))
        rep = strong_markov_test(args.lam, lags, args.replicas, seed, parallelism=jobs)
        rows: list[list[object]] = [
            ["cov", e.i, e.j, e.cov, e.oracle, e.stderr] for e in rep.cov
        ] + [
            ["corr", e.lag_index, e.statistic, e.corr, 0.0, e.stderr] for e in rep.pre_corr
        ]
        cfg = dict(command=cmd, lam=args.lam, lags=args.lags, replicas=args.replicas, seed=seed.master)
        _write_csv(out, ("kind", "i", "j", "value", "oracle", "stderr"), rows, cfg)
        return None, None

    if cmd == "reflect":
        lhs, rhs = reflection_check(args.t_horizon, args.lam, args.replicas, seed, parallelism=jobs)
        rows = _report_rows("reflect", [("lhs", lhs), ("rhs", rhs)])
        cfg = dict(command=cmd, t_horizon=args.t_horizon, lam=args.lam,
                   replicas=args.replicas, seed=seed.master)
        _write_csv(out, _REPORT_HEADER, rows, cfg)
        return None, None

    if cmd == "mehler":
        t_grid = np.linspace(0.0, 1.0, args.t_steps + 1)
        x = Path(t=t_grid, x=t_grid.copy())
        f = PathFunctional(args.kind, t0=args.t0 if args.kind in ("eval", "square-eval", "sign-zero") else None)
        rep = mehler_apply(f, x, args.s, args.replicas, seed, parallelism=jobs)
        rows = _report_rows("mehler", [(f"{args.kind}@s={args.s:g}", rep)])
        cfg = dict(command=cmd, s=args.s, kind=args.kind, t0=args.t0, replicas=args.replicas,
                   t_steps=args.t_steps, seed=seed.master)
        _write_csv(out, _REPORT_HEADER, rows, cfg)
        return None, None

    if cmd in ("hit", "hitscale"):
        hs = hit_scaling(args.dim, args.eps, args.grid, args.replicas, seed, parallelism=jobs)
        cfg = dict(command=cmd, dim=args.dim, eps=",".join(map(str, args.eps)), grid=args.grid,
                   replicas=args.replicas, seed=seed.master)
        if cmd == "hit":
            rows = [[args.dim, e, r.mean, r.stderr] for e, r in zip(hs.eps, hs.reports)]
            _write_csv(out, ("d", "eps", "estimate", "stderr"), rows, cfg)
            table = Table(("d", "eps", "estimate", "stderr"), tuple(tuple(map(float, r)) for r in rows))
            return table, PlotSpec(x="eps", y=("estimate",), logx=True, logy=True,
                                   title="hitting probability", fit_slope=True)
        rows = [[args.dim, hs.slope, hs.slope_stderr]]
        _write_csv(out, ("d", "slope", "slope_stderr"), rows, cfg)
        return None, None

    if cmd == "rangevol":
        items = []
        for box in args.box:
            rep = range_volume(args.dim, args.grid, box, args.replicas, seed, parallelism=jobs)
            items.append((f"box={box:g}", rep))
        rows = _report_rows("rangevol", items)
        cfg = dict(command=cmd, dim=args.dim, grid=args.grid, box=",".join(map(str, args.box)),
                   replicas=args.replicas, seed=seed.master)
        _write_csv(out, _REPORT_HEADER, rows, cfg)
        return None, None

    if cmd == "sojourn":
        spec = sojourn_Q(args.dim, args.xi)
        rows = []
        for m, qv in zip(spec.xi, spec.q_values):
            if args.mc_replicas > 0:
                xi_vec = [float(m)] + [0.0] * (args.dim - 1)
                rep = sojourn_fourier_mc(args.dim, xi_vec, args.mc_replicas, seed,
                                         grid_steps=args.mc_grid, parallelism=jobs)
                rows.append([args.dim, m, qv, _fmt(rep.mean), _fmt(rep.stderr)])
            else:
                rows.append([args.dim, m, qv, "", ""])
        cfg = dict(command=cmd, dim=args.dim, xi=",".join(map(str, args.xi)),
                   mc_replicas=args.mc_replicas, seed=seed.master)
        _write_csv(out, ("d", "xi", "Q", "mc_estimate", "mc_stderr"), rows, cfg)
        return None, None

    if cmd == "kendall":
        est = kendall_profile(args.r, args.boundary, args.replicas, seed,
                              limit_replicas=args.limit_replicas, parallelism=jobs)
        rows = [[r, rep.mean, rep.stderr] for r, rep in zip(est.r_levels, est.reports)]
        rows.append([0.0, est.limit.mean, est.limit.stderr])
        cfg = dict(command=cmd, r=",".join(map(str, args.r)), boundary=args.boundary,
                   replicas=args.replicas, limit_replicas=args.limit_replicas, seed=seed.master)
        _write_csv(out, ("r", "estimate", "stderr"), rows, cfg)
        return None, None

    raise UsageError(f"unknown command {cmd!r}")


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 1

    master = args.seed
    if master is None:
        master = int(os.environ.get(ENV_SEED, DEFAULT_SEED))
    try:
        seed = Seed(master)

        if args.check:
            if args.command == "hit":
                result = _run_hit_check(args, seed)
            elif args.command in _CHECK_BY_COMMAND:
                result = checks.run_criterion(_CHECK_BY_COMMAND[args.command], seed=seed, jobs=args.jobs)
            else:
                raise UsageError(f"no acceptance band registered for {args.command!r}")
            status = "PASS" if result.passed else "FAIL"
            print(f"{status} {result.name}: {result.detail}")
            return 0 if result.passed else 3

        if args.out:
            with open(args.out, "w", encoding="utf-8", newline="\n") as fh:
                table, plot = _execute(args, seed, fh)
        else:
            table, plot = _execute(args, seed, sys.stdout)

        if args.svg:
            if table is None or plot is None:
                raise UsageError(f"subcommand {args.command!r} has no plottable table")
            svg = render_svg(table, plot)
            with open(args.svg, "w", encoding="utf-8", newline="\n") as fh:
                fh.write(svg)
        return 0
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 1
    except ArgumentError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 1
    except (RangeError, NumericError) as exc:
        print(f"numeric error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # noqa: BLE001 - CLI boundary
        print(f"runtime error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
