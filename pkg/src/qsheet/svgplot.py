"""Self-contained SVG rendering of result tables.

No plotting dependency: the renderer emits a standalone SVG document with
axes, tick labels, one polyline-plus-markers series per requested column,
optional log scales, and an optional least-squares slope annotation
recomputed from the plotted points.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import ArgumentError

_WIDTH, _HEIGHT = 640, 440
_MARGIN_L, _MARGIN_R, _MARGIN_T, _MARGIN_B = 70, 20, 36, 50
_COLORS = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e")


@dataclass(frozen=True)
class PlotSpec:
    x: str
    y: tuple[str, ...]
    logx: bool = False
    logy: bool = False
    title: str = ""
    fit_slope: bool = False  # annotate the LS slope of the first series


@dataclass(frozen=True)
class Table:
    columns: tuple[str, ...]
    rows: tuple[tuple[float, ...], ...] = field(default_factory=tuple)

    def column(self, name: str) -> np.ndarray:
        if name not in self.columns:
            raise ArgumentError(f"column {name!r} not in table (has {self.columns})")
        k = self.columns.index(name)
        return np.array([row[k] for row in self.rows], dtype=float)


def _ticks(lo: float, hi: float, log: bool) -> list[float]:
    if log:
        lo_e, hi_e = math.floor(math.log10(lo)), math.ceil(math.log10(hi))
        return [10.0**e for e in range(lo_e, hi_e + 1)]
    span = hi - lo
    step = 10.0 ** math.floor(math.log10(span / 4))
    for mult in (1, 2, 5, 10):
        if span / (step * mult) <= 6:
            step *= mult
            break
    start = math.ceil(lo / step) * step
    out = []
    v = start
    while v <= hi + 1e-12 * span:
        out.append(v)
        v += step
    return out


def _fmt(v: float) -> str:
    return f"{v:.6g}"


def render_svg(table: Table, spec: PlotSpec) -> str:
    """Standalone SVG for the requested columns; empty tables get bare axes."""
    for name in (spec.x, *spec.y):
        if name not in table.columns:
            raise ArgumentError(f"column {name!r} not in table (has {table.columns})")

    xs = table.column(spec.x) if table.rows else np.array([])
    series = [table.column(name) if table.rows else np.array([]) for name in spec.y]

    def transform(vals: np.ndarray, log: bool) -> np.ndarray:
        if log:
            if np.any(vals <= 0):
                raise ArgumentError("log scale needs strictly positive values")
            return np.log10(vals)
        return vals

    if xs.size:
        tx = transform(xs, spec.logx)
        ty_all = np.concatenate([transform(s, spec.logy) for s in series])
        x_lo, x_hi = float(tx.min()), float(tx.max())
        y_lo, y_hi = float(ty_all.min()), float(ty_all.max())
        if x_lo == x_hi:
            x_lo, x_hi = x_lo - 1.0, x_hi + 1.0
        if y_lo == y_hi:
            y_lo, y_hi = y_lo - 1.0, y_hi + 1.0
    else:
        x_lo, x_hi, y_lo, y_hi = 0.0, 1.0, 0.0, 1.0

    plot_w = _WIDTH - _MARGIN_L - _MARGIN_R
    plot_h = _HEIGHT - _MARGIN_T - _MARGIN_B

    def px(v: float) -> float:
        return _MARGIN_L + (v - x_lo) / (x_hi - x_lo) * plot_w

    def py(v: float) -> float:
        return _MARGIN_T + (y_hi - v) / (y_hi - y_lo) * plot_h

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_WIDTH}" height="{_HEIGHT}" '
        f'viewBox="0 0 {_WIDTH} {_HEIGHT}">',
        f'<rect width="{_WIDTH}" height="{_HEIGHT}" fill="white"/>',
        f'<rect x="{_MARGIN_L}" y="{_MARGIN_T}" width="{plot_w}" height="{plot_h}" '
        'fill="none" stroke="black"/>',
    ]
    if spec.title:
        parts.append(
            f'<text x="{_WIDTH / 2}" y="22" text-anchor="middle" font-size="14">{spec.title}</text>'
        )

    x_tick_vals = _ticks(10.0**x_lo if spec.logx else x_lo, 10.0**x_hi if spec.logx else x_hi, spec.logx)
    for v in x_tick_vals:
        t = math.log10(v) if spec.logx else v
        if not x_lo - 1e-9 <= t <= x_hi + 1e-9:
            continue
        parts.append(
            f'<line x1="{px(t):.2f}" y1="{_MARGIN_T + plot_h}" x2="{px(t):.2f}" '
            f'y2="{_MARGIN_T + plot_h + 5}" stroke="black"/>'
        )
        parts.append(
            f'<text x="{px(t):.2f}" y="{_MARGIN_T + plot_h + 18}" text-anchor="middle" '
            f'font-size="11">{_fmt(v)}</text>'
        )
    y_tick_vals = _ticks(10.0**y_lo if spec.logy else y_lo, 10.0**y_hi if spec.logy else y_hi, spec.logy)
    for v in y_tick_vals:
        t = math.log10(v) if spec.logy else v
        if not y_lo - 1e-9 <= t <= y_hi + 1e-9:
            continue
        parts.append(
            f'<line x1="{_MARGIN_L - 5}" y1="{py(t):.2f}" x2="{_MARGIN_L}" y2="{py(t):.2f}" stroke="black"/>'
        )
        parts.append(
            f'<text x="{_MARGIN_L - 8}" y="{py(t) + 4:.2f}" text-anchor="end" font-size="11">{_fmt(v)}</text>'
        )
    parts.append(
        f'<text x="{_MARGIN_L + plot_w / 2}" y="{_HEIGHT - 12}" text-anchor="middle" '
        f'font-size="12">{spec.x}{" (log)" if spec.logx else ""}</text>'
    )

    for idx, (name, vals) in enumerate(zip(spec.y, series)):
        if not vals.size:
            continue
        color = _COLORS[idx % len(_COLORS)]
        tx = transform(xs, spec.logx)
        ty = transform(vals, spec.logy)
        order = np.argsort(tx)
        pts = " ".join(f"{px(tx[i]):.2f},{py(ty[i]):.2f}" for i in order)
        if xs.size > 1:
            parts.append(f'<polyline points="{pts}" fill="none" stroke="{color}" stroke-width="1.5"/>')
        for i in order:
            parts.append(f'<circle cx="{px(tx[i]):.2f}" cy="{py(ty[i]):.2f}" r="3" fill="{color}"/>')
        parts.append(
            f'<text x="{_MARGIN_L + plot_w - 6}" y="{_MARGIN_T + 16 + 14 * idx}" text-anchor="end" '
            f'font-size="11" fill="{color}">{name}</text>'
        )

    if spec.fit_slope and xs.size >= 2:
        tx = transform(xs, spec.logx)
        ty = transform(series[0], spec.logy)
        slope = float(np.polyfit(tx, ty, 1)[0])
        if spec.logx and spec.logy:
            slope_label = f"fitted slope {slope:.4g}"
        else:
            slope_label = f"fitted linear slope {slope:.4g}"
        parts.append(
            f'<text x="{_MARGIN_L + 8}" y="{_MARGIN_T + 16}" font-size="12" '
            f'fill="#333">{slope_label}</text>'
        )

    parts.append("</svg>")
    return "\n".join(parts)


def fitted_loglog_slope(table: Table, x: str, y: str) -> float:
    """LS slope of log10(y) on log10(x), as annotated by render_svg."""
    xs, ys = table.column(x), table.column(y)
    if xs.size < 2:
        raise ArgumentError("slope fit needs at least two points")
    return float(np.polyfit(np.log10(xs), np.log10(ys), 1)[0])


def table_from_rows(columns: Sequence[str], rows: Sequence[Sequence[float]]) -> Table:
    return Table(columns=tuple(columns), rows=tuple(tuple(float(v) for v in r) for r in rows))
