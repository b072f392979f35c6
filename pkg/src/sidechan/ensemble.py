"""The four-diode transmitter as a value type."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping, Union

from .errors import MissingDiode, MissingParameter, OutOfRange
from .signal import SampledDistribution1D, SpatialMode2D

Distribution = Union[SampledDistribution1D, SpatialMode2D]

LABELS = ("H", "V", "D", "A")
# bit 0 first, bit 1 second
BASES = {"HV": ("H", "V"), "DA": ("D", "A")}

PARAMETERS = ("wavelength", "pulse", "arrival", "spatial")
PARAMETER_UNITS = {"wavelength": "nm", "pulse": "ps", "arrival": "ns", "spatial": "mm"}


@dataclass(frozen=True)
class PolarizationErrors:
    e_hv: float
    e_da: float

    def __post_init__(self):
        for name in ("e_hv", "e_da"):
            v = getattr(self, name)
            if not (math.isfinite(v) and 0.0 <= v <= 1.0):
                raise OutOfRange(f"{name} must lie in [0, 1], got {v}")


@dataclass(frozen=True)
class DiodeRecord:
    polarization: str
    mean_photon_number: float = 0.5
    parameters: Mapping[str, Distribution] = field(default_factory=dict)

    def __post_init__(self):
        if self.polarization not in LABELS:
            raise ValueError(f"unknown polarization label {self.polarization!r}")


@dataclass(frozen=True)
class ClampRecord:
    """Negative samples zeroed while loading one file."""

    path: str
    count: int
    fraction: float
    # fraction above the manifest's clamp_warn_fraction
    flagged: bool = False


@dataclass(frozen=True)
class SourceEnsemble:
    diodes: Mapping[str, DiodeRecord]
    polarization_errors: PolarizationErrors
    clock_period_ns: float = 200.0
    clamps: tuple = ()

    def __post_init__(self):
        missing = [lab for lab in LABELS if lab not in self.diodes]
        if missing:
            raise MissingDiode(f"ensemble is missing diode(s) {', '.join(missing)}")

    def parameter_names(self) -> list[str]:
        """Parameters recorded for all four diodes, in canonical order."""
        common = set.intersection(*(set(d.parameters) for d in self.diodes.values()))
        known = [p for p in PARAMETERS if p in common]
        return known + sorted(common - set(PARAMETERS))

    def basis_distributions(self, basis: str, parameter: str) -> tuple[Distribution, Distribution]:
        lab0, lab1 = BASES[basis]
        out = []
        for lab in (lab0, lab1):
            params = self.diodes[lab].parameters
            if parameter not in params:
                raise MissingParameter(f"diode {lab} has no {parameter!r} record")
            out.append(params[parameter])
        return out[0], out[1]
