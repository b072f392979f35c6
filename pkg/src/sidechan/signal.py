"""Sampled distributions on uniform grids.

Everything downstream (correlation, leakage, ingestion) works on the two
value types defined here: :class:`SampledDistribution1D` for spectra, pulse
traces and arrival-time histograms, and :class:`SpatialMode2D` for camera
images of the beam profile.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import (
    AllZeroSignal,
    EmptyInput,
    NegativeValue,
    NoCrossing,
    NonPositivePeriod,
    NoOverlap,
    NotNormalized,
    UnitMismatch,
)

UNITS = ("nm", "ps", "ns", "mm", "dimensionless")

NORM_TOL = 1e-9


def _frozen(values) -> np.ndarray:
    arr = np.array(values, dtype=float)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class Axis:
    """Uniform grid ``start + i * step`` for ``i in range(count)``."""

    start: float
    step: float
    count: int
    unit: str = "dimensionless"

    def __post_init__(self):
        if self.unit not in UNITS:
            raise ValueError(f"unknown unit {self.unit!r}")
        if not (math.isfinite(self.start) and math.isfinite(self.step)):
            raise ValueError("axis start and step must be finite")
        if self.step <= 0:
            raise ValueError("axis step must be positive")
        if int(self.count) != self.count or self.count < 2:
            raise ValueError("axis needs at least 2 points")
        object.__setattr__(self, "count", int(self.count))
        if not math.isfinite(self.stop):
            raise ValueError("axis end point is not finite")

    @classmethod
    def spanning(cls, lo: float, hi: float, count: int, unit: str = "dimensionless") -> Axis:
        """Axis with ``count`` points from ``lo`` to ``hi`` inclusive."""
        return cls(lo, (hi - lo) / (count - 1), count, unit)

    @property
    def stop(self) -> float:
        """Last grid point."""
        return self.start + (self.count - 1) * self.step

    @property
    def points(self) -> np.ndarray:
        return self.start + np.arange(self.count) * self.step

    def matches(self, other: Axis, rtol: float = 1e-9) -> bool:
        """Same unit, count, and start/step within ``rtol`` of the step."""
        return (
            self.unit == other.unit
            and self.count == other.count
            and abs(self.step - other.step) <= rtol * self.step
            and abs(self.start - other.start) <= rtol * self.step
        )


@dataclass(frozen=True)
class SampledDistribution1D:
    axis: Axis
    density: np.ndarray
    normalized: bool = False

    def __post_init__(self):
        d = _frozen(self.density)
        if d.ndim != 1 or d.size != self.axis.count:
            raise ValueError(
                f"density has shape {d.shape}, axis expects ({self.axis.count},)"
            )
        if not np.all(np.isfinite(d)):
            raise ValueError("density contains non-finite values")
        if np.any(d < 0):
            raise NegativeValue("density contains negative values")
        object.__setattr__(self, "density", d)
        if self.normalized and abs(self.integral() - 1.0) > NORM_TOL:
            raise NotNormalized(f"density integrates to {self.integral()!r}, not 1")

    @property
    def unit(self) -> str:
        return self.axis.unit

    def integral(self) -> float:
        return float(np.sum(self.density) * self.axis.step)


@dataclass(frozen=True)
class SpatialMode2D:
    """Nonnegative intensity image; rows follow ``y_axis``, columns ``x_axis``."""

    x_axis: Axis
    y_axis: Axis
    intensity: np.ndarray
    normalized: bool = False

    def __post_init__(self):
        m = _frozen(self.intensity)
        if m.shape != (self.y_axis.count, self.x_axis.count):
            raise ValueError(
                f"intensity has shape {m.shape}, axes expect "
                f"({self.y_axis.count}, {self.x_axis.count})"
            )
        if not np.all(np.isfinite(m)):
            raise ValueError("intensity contains non-finite values")
        if np.any(m < 0):
            raise NegativeValue("intensity contains negative values")
        object.__setattr__(self, "intensity", m)
        if self.normalized and abs(self.integral() - 1.0) > NORM_TOL:
            raise NotNormalized(f"intensity integrates to {self.integral()!r}, not 1")

    @property
    def cell_area(self) -> float:
        return self.x_axis.step * self.y_axis.step

    def integral(self) -> float:
        return float(np.sum(self.intensity) * self.cell_area)


def normalize(d: SampledDistribution1D) -> SampledDistribution1D:
    """Rescale ``d`` so that it integrates to one."""
    total = d.integral()
    if total <= 0:
        raise AllZeroSignal("cannot normalize a signal with zero integral")
    return SampledDistribution1D(d.axis, d.density / total, normalized=True)


def normalize_2d(m: SpatialMode2D) -> SpatialMode2D:
    total = m.integral()
    if total <= 0:
        raise AllZeroSignal("cannot normalize an all-zero image")
    return SpatialMode2D(m.x_axis, m.y_axis, m.intensity / total, normalized=True)


def resample_common(
    a: SampledDistribution1D, b: SampledDistribution1D
) -> tuple[SampledDistribution1D, SampledDistribution1D]:
    """Put ``a`` and ``b`` on one shared grid.

    The shared grid covers the intersection of both ranges at the finer of
    the two steps. Values are linearly interpolated and both outputs are
    renormalized over the shared range.
    """
    if a.unit != b.unit:
        raise UnitMismatch(f"cannot combine {a.unit} with {b.unit}")
    if a.axis.matches(b.axis):
        return normalize(a), normalize(SampledDistribution1D(a.axis, b.density))

    step = min(a.axis.step, b.axis.step)
    lo = max(a.axis.start, b.axis.start)
    hi = min(a.axis.stop, b.axis.stop)
    if hi <= lo:
        raise NoOverlap(f"ranges [{a.axis.start}, {a.axis.stop}] and "
                        f"[{b.axis.start}, {b.axis.stop}] do not overlap")
    # small slack so an exact multiple of step is not lost to rounding
    count = int(math.floor((hi - lo) / step + 1e-9)) + 1
    if count < 2:
        raise NoOverlap("overlap is narrower than one grid step")
    axis = Axis(lo, step, count, a.unit)
    x = axis.points
    out = []
    for d in (a, b):
        vals = np.interp(x, d.axis.points, d.density)
        out.append(normalize(SampledDistribution1D(axis, vals)))
    return out[0], out[1]


def fwhm(d: SampledDistribution1D) -> float:
    """Full width at half maximum, crossings located by linear interpolation."""
    y = d.density
    x = d.axis.points
    k = int(np.argmax(y))
    half = y[k] / 2.0
    if half <= 0:
        raise AllZeroSignal("signal is identically zero")

    left = None
    for i in range(k, 0, -1):
        if y[i - 1] < half:
            # y[i-1] < half <= y[i]
            left = x[i - 1] + (half - y[i - 1]) / (y[i] - y[i - 1]) * d.axis.step
            break
    right = None
    for i in range(k, len(y) - 1):
        if y[i + 1] < half:
            right = x[i] + (y[i] - half) / (y[i] - y[i + 1]) * d.axis.step
            break
    if left is None or right is None:
        side = "left" if left is None else "right"
        raise NoCrossing(f"signal never drops below half maximum on the {side}")
    return float(right - left)


def peak_location(d: SampledDistribution1D) -> float:
    """Axis value of the maximum, refined by a parabola through 3 points.

    Equal maxima resolve to the smallest axis value.
    """
    y = d.density
    top = y.max()
    k = int(np.flatnonzero(y >= top * (1 - 1e-12))[0])
    x0 = d.axis.start + k * d.axis.step
    if k == 0 or k == len(y) - 1:
        return float(x0)
    ym, yc, yp = y[k - 1], y[k], y[k + 1]
    denom = ym - 2 * yc + yp
    if denom >= 0:
        return float(x0)
    offset = 0.5 * (ym - yp) / denom
    return float(x0 + offset * d.axis.step)


def mean_std(d: SampledDistribution1D) -> tuple[float, float]:
    """First moment and standard deviation of a normalized density."""
    if abs(d.integral() - 1.0) > NORM_TOL:
        raise NotNormalized("mean_std needs a normalized distribution")
    x = d.axis.points
    w = d.density * d.axis.step
    mean = float(np.sum(w * x))
    var = float(np.sum(w * (x - mean) ** 2))
    return mean, math.sqrt(max(var, 0.0))


def timetag_counts(tags, clock_period: float, bins: int) -> np.ndarray:
    """Raw bin counts of tags folded onto ``[0, clock_period)``."""
    if not clock_period > 0:
        raise NonPositivePeriod(f"clock period must be positive, got {clock_period}")
    if bins < 2:
        raise ValueError("need at least 2 bins")
    t = np.asarray(tags, dtype=float).ravel()
    if t.size == 0:
        raise EmptyInput("no time tags")
    folded = np.mod(t, clock_period)
    idx = np.floor(folded / clock_period * bins).astype(np.int64)
    # np.mod can return clock_period itself for tiny negative inputs
    np.clip(idx, 0, bins - 1, out=idx)
    return np.bincount(idx, minlength=bins)


def histogram_from_timetags(tags, clock_period: float, bins: int) -> SampledDistribution1D:
    """Normalized arrival-time histogram relative to the clock.

    Bin ``i`` covers ``[i*w, (i+1)*w)`` with ``w = clock_period / bins`` and
    is placed on the axis at its center.
    """
    counts = timetag_counts(tags, clock_period, bins)
    step = clock_period / bins
    axis = Axis(step / 2, step, bins, "ns")
    return normalize(SampledDistribution1D(axis, counts.astype(float)))

