"""Sliding-window extremes over sampled paths.

All scanners below run in O(n) per row via scipy's 1-d min/max filters,
independent of the window width, which keeps modulus statistics affordable
at fine grids.
"""

from __future__ import annotations

import numpy as np
from scipy.ndimage import maximum_filter1d, minimum_filter1d

from .errors import ArgumentError


def forward_window_max(x: np.ndarray, width: int) -> np.ndarray:
    """out[i] = max(x[i : i + width]) for i in [0, n - width]."""
    n = x.shape[-1]
    if not 1 <= width <= n:
        raise ArgumentError(f"window width {width} outside [1, {n}]")
    g = maximum_filter1d(x, size=width, mode="nearest", axis=-1)
    return g[..., width // 2 : width // 2 + n - width + 1]


def forward_window_min(x: np.ndarray, width: int) -> np.ndarray:
    """out[i] = min(x[i : i + width]) for i in [0, n - width]."""
    n = x.shape[-1]
    if not 1 <= width <= n:
        raise ArgumentError(f"window width {width} outside [1, {n}]")
    g = minimum_filter1d(x, size=width, mode="nearest", axis=-1)
    return g[..., width // 2 : width // 2 + n - width + 1]


def window_spread_max(x: np.ndarray, strides: int) -> np.ndarray:
    """Largest |x_u - x_v| over index pairs with |u - v| <= strides.

    Equals the largest (max - min) over windows of strides + 1 consecutive
    points: the extremes of any window are themselves within ``strides`` of
    each other. Works along the last axis.
    """
    width = strides + 1
    spread = forward_window_max(x, width) - forward_window_min(x, width)
    return np.max(spread, axis=-1)


def anchored_oscillation(x: np.ndarray, strides: int) -> np.ndarray:
    """osc[i] = max_{0 <= u <= strides} |x[i + u] - x[i]| for valid anchors i."""
    width = strides + 1
    hi = forward_window_max(x, width)
    lo = forward_window_min(x, width)
    n_anchor = hi.shape[-1]
    anchor = x[..., :n_anchor]
    return np.maximum(hi - anchor, anchor - lo)


def grid_stride(eps: float, dt: float, tol: float = 1e-9) -> int:
    """eps expressed in grid strides; eps must align with the grid."""
    k = eps / dt
    k_round = int(round(k))
    if k_round < 1 or abs(k - k_round) > tol * max(1.0, k):
        raise ArgumentError(f"window {eps} does not align with grid step {dt}")
    return k_round
