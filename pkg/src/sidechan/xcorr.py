"""Normalized cross-correlation between source distributions.

Signals are real and nonnegative, so the correlation is bounded in [0, 1]
once divided by the geometric mean of the two signal energies.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import AllZeroSignal, GridMismatch
from .signal import Axis, SampledDistribution1D, SpatialMode2D


@dataclass(frozen=True)
class CorrelationCurve:
    shifts: np.ndarray
    values: np.ndarray
    zero_lag_index: int

    @property
    def zero_lag(self) -> float:
        return float(self.values[self.zero_lag_index])


def _check_grid(f: SampledDistribution1D, g: SampledDistribution1D) -> None:
    if not f.axis.matches(g.axis):
        raise GridMismatch(
            "signals are on different grids; call resample_common first"
        )


def _energy_norm(f: np.ndarray, g: np.ndarray, step: float) -> float:
    ef = float(np.dot(f, f)) * step
    eg = float(np.dot(g, g)) * step
    if ef <= 0 or eg <= 0:
        raise AllZeroSignal("cannot correlate an all-zero signal")
    return math.sqrt(ef * eg)


def cross_correlation(
    f: SampledDistribution1D, g: SampledDistribution1D, max_shift: float
) -> CorrelationCurve:
    """R(k) = sum_i f[i] g[i+k] step / sqrt(E_f E_g) for |k*step| <= max_shift.

    Samples shifted past either end of the grid count as zero.
    """
    _check_grid(f, g)
    step = f.axis.step
    a, b = f.density, g.density
    norm = _energy_norm(a, b, step)
    n = a.size
    lags = min(int(math.floor(max_shift / step + 1e-9)), n - 1)
    lags = max(lags, 0)
    ks = np.arange(-lags, lags + 1)
    values = np.empty(ks.size)
    for j, k in enumerate(ks):
        if k >= 0:
            s = np.dot(a[: n - k], b[k:])
        else:
            s = np.dot(a[-k:], b[: n + k])
        values[j] = s * step / norm
    return CorrelationCurve(ks * step, values, lags)


def overlap_at_zero(f: SampledDistribution1D, g: SampledDistribution1D) -> float:
    """Zero-lag normalized overlap R(0)."""
    _check_grid(f, g)
    step = f.axis.step
    norm = _energy_norm(f.density, g.density, step)
    return float(np.dot(f.density, g.density) * step / norm)


def best_shift(curve: CorrelationCurve) -> tuple[float, float]:
    """Shift of the largest correlation value, and that value.

    Ties (within 1e-12 relative) go to the smaller ``|shift|``, then to the
    smaller shift.
    """
    v = curve.values
    top = v.max()
    cand = np.flatnonzero(v >= top - 1e-12 * abs(top))
    shifts = curve.shifts[cand]
    order = np.lexsort((shifts, np.abs(shifts)))
    i = cand[order[0]]
    return float(curve.shifts[i]), float(v[i])


def cross_correlation_2d(F: SpatialMode2D, G: SpatialMode2D) -> float:
    """Zero-lag normalized overlap of two images on the same pixel grid."""
    if not (F.x_axis.matches(G.x_axis) and F.y_axis.matches(G.y_axis)):
        raise GridMismatch("images are on different pixel grids")
    a = F.intensity.ravel()
    b = G.intensity.ravel()
    ea, eb = float(np.dot(a, a)), float(np.dot(b, b))
    if ea <= 0 or eb <= 0:
        raise AllZeroSignal("cannot correlate an all-zero image")
    return float(np.dot(a, b) / math.sqrt(ea * eb))


def block_sum_2d(m: np.ndarray, factor: int) -> np.ndarray:
    """Sum non-overlapping ``factor x factor`` blocks.

    Trailing rows/columns that do not fill a whole block are summed as
    smaller edge blocks, so every pixel lands in exactly one output cell.
    """
    ny, nx = m.shape
    ry = np.arange(0, ny, factor)
    rx = np.arange(0, nx, factor)
    rows = np.add.reduceat(m, ry, axis=0)
    return np.add.reduceat(rows, rx, axis=1)


def downsample_2d(F: SpatialMode2D, factor: int) -> SpatialMode2D:
    """Coarsen an image by summing ``factor x factor`` pixel blocks.

    Models a camera with ``factor`` times larger pixels. The new axes start at
    the center of each full block; partial edge blocks keep the coarse step.
    """
    if int(factor) != factor or factor < 1:
        raise ValueError("downsample factor must be a positive integer")
    factor = int(factor)
    if factor == 1:
        return F
    summed = block_sum_2d(F.intensity, factor)
    ny, nx = summed.shape
    if nx < 2 or ny < 2:
        raise ValueError(f"factor {factor} leaves fewer than 2 pixels per side")

    def coarse(ax: Axis, n: int) -> Axis:
        step = ax.step * factor
        return Axis(ax.start + (factor - 1) * ax.step / 2, step, n, ax.unit)

    xa, ya = coarse(F.x_axis, nx), coarse(F.y_axis, ny)
    total = summed.sum() * xa.step * ya.step
    if total <= 0:
        raise AllZeroSignal("cannot downsample an all-zero image")
    return SpatialMode2D(xa, ya, summed / total, normalized=True)
