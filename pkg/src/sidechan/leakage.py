"""Eavesdropper information from source mismatch, in bits per pulse.

Three routes are provided for one basis (two diodes that encode bit 0 and
bit 1):

* ``exact_mutual_information`` treats Eve's full measured value as her
  observation and computes I(label; observation) on the grid.
* ``leakage_eq8_literal`` plugs the zero-lag overlap R0 into the closed
  formula ``1 + R0 log2(R0 / (4 p))``. It goes negative for R0 in (0.5, 1);
  the raw value is kept in the diagnostics and the reported value is
  clamped at 0.
* ``leakage_guessing`` reads R0 / 2 as Eve's probability of naming the
  wrong diode, giving ``1 - h(R0 / 2)``.

The exact route is the one used for budgets; the two overlap estimators are
what a bench measurement of R0 gives you quickly.
"""

from __future__ import annotations

import enum
import math
import os
import zlib
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .ensemble import BASES, Distribution, PolarizationErrors, SourceEnsemble
from .errors import (
    GridMismatch,
    MissingInput,
    NotNormalized,
    OutOfRange,
    TooManyParameters,
)
from .signal import (
    NORM_TOL,
    Axis,
    SampledDistribution1D,
    SpatialMode2D,
    normalize,
    normalize_2d,
    resample_common,
)
from .xcorr import cross_correlation_2d, overlap_at_zero

__all__ = [
    "Method",
    "BasisPair",
    "LeakageResult",
    "BasisReport",
    "PolarizationErrors",
    "binary_entropy",
    "exact_mutual_information",
    "leakage_eq8_literal",
    "leakage_guessing",
    "pair_overlap",
    "polarization_leakage",
    "joint_leakage",
    "coarsen",
    "key_rate_bound",
    "qber_to_iab",
    "basis_report",
    "cell_budget",
]

DEFAULT_CELL_BUDGET = 1 << 22
MAX_JOINT_PARAMETERS = 3
POLARIZATION_PROXY_CONSTANT = 1.0


class Method(enum.Enum):
    EXACT = "exact"
    EQ8 = "eq8"
    GUESSING = "guessing"
    MONTE_CARLO = "mc"


@dataclass(frozen=True)
class LeakageResult:
    method: Method
    bits_per_pulse: float
    diagnostics: dict = field(default_factory=dict)


@dataclass(frozen=True)
class BasisPair:
    """The two diodes of one basis on a shared grid.

    ``dist0`` encodes bit 0 and is sent with probability ``prior0``.
    Use :meth:`from_records` to build a pair from raw loaded distributions;
    the constructor itself only validates.
    """

    label: str
    dist0: Distribution
    dist1: Distribution
    prior0: float = 0.5

    def __post_init__(self):
        if not 0.0 < self.prior0 < 1.0:
            raise OutOfRange(f"prior0 must lie in (0, 1), got {self.prior0}")
        a, b = self.dist0, self.dist1
        if type(a) is not type(b):
            raise GridMismatch("both sources must be the same kind of distribution")
        if isinstance(a, SampledDistribution1D):
            if not a.axis.matches(b.axis):
                raise GridMismatch("sources are on different grids")
        elif not (a.x_axis.matches(b.x_axis) and a.y_axis.matches(b.y_axis)):
            raise GridMismatch("images are on different pixel grids")

    @classmethod
    def from_records(cls, label, dist0, dist1, prior0=0.5) -> BasisPair:
        """Resample (1D) or check (2D) onto a common grid, then normalize."""
        if isinstance(dist0, SampledDistribution1D) and isinstance(dist1, SampledDistribution1D):
            a, b = resample_common(dist0, dist1)
        elif isinstance(dist0, SpatialMode2D) and isinstance(dist1, SpatialMode2D):
            a, b = normalize_2d(dist0), normalize_2d(dist1)
        else:
            raise GridMismatch("both sources must be the same kind of distribution")
        return cls(label, a, b, prior0)

    @property
    def prior1(self) -> float:
        return 1.0 - self.prior0

    @property
    def cell(self) -> float:
        if isinstance(self.dist0, SampledDistribution1D):
            return self.dist0.axis.step
        return self.dist0.cell_area

    def cell_masses(self) -> tuple[np.ndarray, np.ndarray]:
        """Per-cell probability of each source, flattened; each sums to 1."""
        out = []
        for d in (self.dist0, self.dist1):
            if abs(d.integral() - 1.0) > NORM_TOL:
                raise NotNormalized("basis pair distributions must be normalized")
            vals = d.density if isinstance(d, SampledDistribution1D) else d.intensity
            out.append(np.ravel(vals) * self.cell)
        return out[0], out[1]


@dataclass(frozen=True)
class BasisReport:
    parameter: str
    method: Method
    results: dict

    @property
    def max_bits(self) -> float:
        return max(r.bits_per_pulse for r in self.results.values())


def binary_entropy(p: float) -> float:
    """h(p) in bits, with 0 log 0 = 0."""
    if not 0.0 <= p <= 1.0:
        raise OutOfRange(f"probability must lie in [0, 1], got {p}")
    if p == 0.0 or p == 1.0:
        return 0.0
    return -p * math.log2(p) - (1.0 - p) * math.log2(1.0 - p)


def _label_information(m0: np.ndarray, m1: np.ndarray, prior0: float) -> float:
    """I(label; cell) for cell masses ``m0``, ``m1`` of the two sources.

    Written as the prior-weighted divergence of each source from the mixture,
    which avoids subtracting two numbers near H(prior) when leakage is small.
    """
    mix = prior0 * m0 + (1.0 - prior0) * m1
    total = 0.0
    for prior, m in ((prior0, m0), (1.0 - prior0, m1)):
        nz = m > 0
        total += prior * float(np.sum(m[nz] * np.log2(m[nz] / mix[nz])))
    return total


def _clamp_info(raw: float, prior0: float) -> float:
    return min(max(raw, 0.0), binary_entropy(prior0))


def exact_mutual_information(pair: BasisPair) -> LeakageResult:
    """Mutual information between the source label and Eve's observation.

    Every grid cell is a distinct observation, with
    ``p(a | obs) = prior_a f_a(obs) / sum_a' prior_a' f_a'(obs)``.
    """
    m0, m1 = pair.cell_masses()
    raw = _label_information(m0, m1, pair.prior0)
    return LeakageResult(
        Method.EXACT,
        _clamp_info(raw, pair.prior0),
        {"raw_value": raw, "cells": int(m0.size)},
    )


def _check_r0(r0: float) -> float:
    if not (-1e-9 <= r0 <= 1.0 + 1e-9):
        raise OutOfRange(f"R(0) must lie in [0, 1], got {r0}")
    return min(max(r0, 0.0), 1.0)


def leakage_eq8_literal(r0: float, prior: float = 0.5) -> LeakageResult:
    """``1 + R0 log2(R0 / (4 prior))``, clamped at 0 for reporting.

    The sum runs over the two sources of a basis times Eve's two bit values,
    four equal terms of ``(R0/4) log2(R0 / (4 prior))``.
    """
    r0 = _check_r0(r0)
    if not 0.0 < prior < 1.0:
        raise OutOfRange(f"prior must lie in (0, 1), got {prior}")
    raw = 1.0 if r0 == 0.0 else 1.0 + r0 * math.log2(r0 / (4.0 * prior))
    return LeakageResult(
        Method.EQ8,
        max(raw, 0.0),
        {"R0": r0, "raw_value": raw, "negative": raw < 0.0},
    )


def leakage_guessing(r0: float) -> LeakageResult:
    """``1 - h(R0 / 2)``: Eve names the wrong diode with probability R0/2."""
    r0 = _check_r0(r0)
    raw = 1.0 - binary_entropy(r0 / 2.0)
    return LeakageResult(Method.GUESSING, raw, {"R0": r0, "raw_value": raw})


def pair_overlap(pair: BasisPair) -> float:
    """Zero-lag normalized correlation R0 of the two sources."""
    if isinstance(pair.dist0, SpatialMode2D):
        return cross_correlation_2d(pair.dist0, pair.dist1)
    return overlap_at_zero(pair.dist0, pair.dist1)


def polarization_leakage(err: PolarizationErrors) -> tuple[float, float]:
    """Basis-dependent error mismatch and the leakage proxy derived from it.

    Only proportionality between mismatch and leakage is known, so the proxy
    uses ``POLARIZATION_PROXY_CONSTANT`` (1.0).
    """
    delta = abs(err.e_hv - err.e_da)
    return delta, POLARIZATION_PROXY_CONSTANT * delta


def cell_budget() -> int:
    """Joint-grid cell cap, overridable via ``SIDECHAN_CELL_BUDGET``."""
    env = os.environ.get("SIDECHAN_CELL_BUDGET")
    if env is None:
        return DEFAULT_CELL_BUDGET
    try:
        value = int(env)
    except ValueError:
        raise OutOfRange(f"SIDECHAN_CELL_BUDGET must be an integer, got {env!r}") from None
    if value < 1:
        raise OutOfRange("SIDECHAN_CELL_BUDGET must be positive")
    return value


def joint_leakage(pairs: Sequence[BasisPair], budget: Optional[int] = None) -> LeakageResult:
    """Exact information from observing every parameter at once.

    Parameters are taken as independent given the source label, so each
    source's joint density is the outer product of its per-parameter
    densities. The product grid is enumerated in full.
    """
    if not pairs:
        raise MissingInput("joint_leakage needs at least one pair")
    prior0 = pairs[0].prior0
    if any(p.prior0 != prior0 for p in pairs):
        raise OutOfRange("all pairs must share the same priors")
    if budget is None:
        budget = cell_budget()
    if len(pairs) > MAX_JOINT_PARAMETERS:
        raise TooManyParameters(
            f"{len(pairs)} parameters requested, at most {MAX_JOINT_PARAMETERS} supported"
        )
    masses = [p.cell_masses() for p in pairs]
    cells = math.prod(m0.size for m0, _ in masses)
    if cells > budget:
        raise TooManyParameters(
            f"joint grid has {cells} cells, budget is {budget}; coarsen the inputs"
        )
    j0, j1 = masses[0]
    for m0, m1 in masses[1:]:
        j0 = np.multiply.outer(j0, m0).ravel()
        j1 = np.multiply.outer(j1, m1).ravel()
    raw = _label_information(j0, j1, prior0)
    return LeakageResult(
        Method.EXACT,
        _clamp_info(raw, prior0),
        {"raw_value": raw, "cells": int(cells), "parameters": len(pairs)},
    )


def coarsen(d: Distribution, factor: int) -> Distribution:
    """Merge runs of ``factor`` adjacent bins (2D: pixel blocks).

    A trailing partial run is merged into a smaller bin; total mass is kept.
    The result is renormalized on the coarse grid.
    """
    from .xcorr import downsample_2d

    if isinstance(d, SpatialMode2D):
        return downsample_2d(d, factor)
    factor = int(factor)
    if factor < 1:
        raise ValueError("coarsen factor must be >= 1")
    if factor == 1:
        return d
    summed = np.add.reduceat(d.density, np.arange(0, d.density.size, factor))
    if summed.size < 2:
        raise ValueError(f"factor {factor} leaves fewer than 2 bins")
    ax = d.axis
    axis = Axis(ax.start + (factor - 1) * ax.step / 2, ax.step * factor, summed.size, ax.unit)
    # summed bins hold mass/step; rescale to density on the coarse step
    return normalize(SampledDistribution1D(axis, summed))


def coarsen_to(d: Distribution, max_bins: int) -> Distribution:
    """Coarsen by the smallest integer factor giving at most ``max_bins`` per axis."""
    if isinstance(d, SpatialMode2D):
        n = max(d.x_axis.count, d.y_axis.count)
    else:
        n = d.axis.count
    factor = max(1, -(-n // max_bins))
    return coarsen(d, factor)


def key_rate_bound(
    i_ab: float, i_ae: float, direction: str = "DR", i_be: Optional[float] = None
) -> float:
    """Lower bound on the secret fraction; negative means abort.

    ``DR`` is ``I(A:B) - I(A:E)``, ``RR`` is ``I(A:B) - I(B:E)``.
    """
    direction = direction.upper()
    for name, v in (("i_ab", i_ab), ("i_ae", i_ae), ("i_be", i_be)):
        if v is not None and not 0.0 <= v <= 1.0:
            raise OutOfRange(f"{name} must lie in [0, 1], got {v}")
    if direction == "DR":
        return i_ab - i_ae
    if direction == "RR":
        if i_be is None:
            raise MissingInput("reverse reconciliation needs i_be")
        return i_ab - i_be
    raise OutOfRange(f"unknown reconciliation direction {direction!r}")


def qber_to_iab(qber: float) -> float:
    """Alice-Bob information per sifted bit, ``1 - h(QBER)``."""
    if not 0.0 <= qber <= 0.5:
        raise OutOfRange(f"QBER must lie in [0, 0.5], got {qber}")
    return 1.0 - binary_entropy(qber)


def _mc_seed(seed: int, parameter: str, basis: str) -> int:
    ss = np.random.SeedSequence([seed, zlib.crc32(parameter.encode()), zlib.crc32(basis.encode())])
    return int(ss.generate_state(1)[0])


def leakage_for_pair(pair: BasisPair, method: Method, *, n_samples: int = 1_000_000,
                     seed: int = 0) -> LeakageResult:
    method = Method(method)
    if method is Method.EXACT:
        return exact_mutual_information(pair)
    if method is Method.EQ8:
        return leakage_eq8_literal(pair_overlap(pair), prior=pair.prior0)
    if method is Method.GUESSING:
        return leakage_guessing(pair_overlap(pair))
    from .synth import mc_mutual_information

    return mc_mutual_information(pair, n_samples, seed)


def basis_report(
    ensemble: SourceEnsemble,
    parameter: str,
    method,
    *,
    prior0: float = 0.5,
    n_samples: int = 1_000_000,
    seed: int = 0,
) -> BasisReport:
    """Leakage of one parameter in each basis, pairing the basis's two diodes."""
    method = Method(method)
    results = {}
    for basis in BASES:
        d0, d1 = ensemble.basis_distributions(basis, parameter)
        pair = BasisPair.from_records(basis, d0, d1, prior0)
        results[basis] = leakage_for_pair(
            pair, method, n_samples=n_samples, seed=_mc_seed(seed, parameter, basis)
        )
    return BasisReport(parameter, method, results)
