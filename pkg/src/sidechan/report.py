"""JSON report assembly shared by the CLI subcommands.

Layout (``schema_version`` 1)::

    {
      "schema_version": 1,
      "tool": {"name": "sidechan", "version": "..."},
      "input": {...fingerprint...},
      "parameters": {
        "<parameter>": {
          "<method>": {
            "bases": {"HV": {"bits_per_pulse": x, "diagnostics": {...}},
                      "DA": {...}},
            "max": x
          }
        }
      },
      "polarization": {"e_hv", "e_da", "delta_e", "leakage_proxy", "proxy_constant"},
      "budget": {"exact_total": x, "components": {"<parameter>": x},
                 "joint": null | {"HV": x, "DA": x, "max": x, "parameters": [...]}},
      "key_rate": null | {"qber", "i_ab", "i_ae", "direction", "r"},
      "warnings": [{"kind": "...", ...}]
    }

Keys are only ever added within a schema version.
"""

from __future__ import annotations

import json
import math
from typing import Iterable, Optional, Sequence

from . import __version__
from .ensemble import BASES, SourceEnsemble
from .errors import MissingParameter, TooManyParameters
from .leakage import (
    POLARIZATION_PROXY_CONSTANT,
    BasisPair,
    Method,
    basis_report,
    coarsen_to,
    joint_leakage,
    key_rate_bound,
    polarization_leakage,
    qber_to_iab,
)

SCHEMA_VERSION = 1
JOINT_MAX_BINS_1D = 128
JOINT_MAX_PIXELS = 16

DEFAULT_METHODS = (Method.EXACT, Method.EQ8, Method.GUESSING)


def _plain(value):
    """Convert numpy scalars and nested containers to JSON-ready values."""
    if isinstance(value, dict):
        return {str(k): _plain(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_plain(v) for v in value]
    if isinstance(value, bool) or value is None or isinstance(value, str):
        return value
    if hasattr(value, "item"):
        value = value.item()
    if isinstance(value, float) and not math.isfinite(value):
        raise ValueError(f"non-finite number in report: {value}")
    return value


def exact_budget(ensemble: SourceEnsemble, parameters: Optional[Iterable[str]] = None) -> dict:
    """Sum over parameters of the larger of the two per-basis exact leakages."""
    names = list(parameters) if parameters is not None else ensemble.parameter_names()
    components = {p: basis_report(ensemble, p, Method.EXACT).max_bits for p in names}
    return {"exact_total": sum(components.values()), "components": components}


def _joint(ensemble: SourceEnsemble, parameters: Sequence[str], prior0: float) -> dict:
    out = {"parameters": list(parameters)}
    for basis in BASES:
        pairs = []
        for p in parameters:
            d0, d1 = ensemble.basis_distributions(basis, p)
            pair = BasisPair.from_records(basis, d0, d1, prior0)
            limit = JOINT_MAX_PIXELS if hasattr(pair.dist0, "intensity") else JOINT_MAX_BINS_1D
            pairs.append(BasisPair(basis, coarsen_to(pair.dist0, limit),
                                   coarsen_to(pair.dist1, limit), prior0))
        out[basis] = joint_leakage(pairs).bits_per_pulse
    out["max"] = max(out[b] for b in BASES)
    return out


def build_report(
    ensemble: SourceEnsemble,
    fingerprint: dict,
    *,
    parameters: Optional[Sequence[str]] = None,
    methods: Sequence[Method] = DEFAULT_METHODS,
    n_samples: int = 200_000,
    seed: int = 0,
    joint: bool = False,
    qber: Optional[float] = None,
    prior0: float = 0.5,
) -> dict:
    available = ensemble.parameter_names()
    names = list(parameters) if parameters else available
    for p in names:
        if p not in available:
            raise MissingParameter(f"parameter {p!r} is not recorded for all four diodes")
    methods = sorted({Method(m) for m in methods}, key=lambda m: m.value)
    warnings = []

    params = {}
    components = {}
    for p in names:
        per_method = {}
        for m in sorted(set(methods) | {Method.EXACT}, key=lambda m: m.value):
            rep = basis_report(ensemble, p, m, prior0=prior0, n_samples=n_samples, seed=seed)
            if m is Method.EXACT:
                components[p] = rep.max_bits
            if m not in methods:
                continue
            bases = {}
            for basis, res in rep.results.items():
                bases[basis] = {"bits_per_pulse": res.bits_per_pulse,
                                "diagnostics": dict(res.diagnostics)}
                if res.diagnostics.get("negative"):
                    warnings.append({
                        "kind": "eq8_negative",
                        "parameter": p,
                        "basis": basis,
                        "raw_value": res.diagnostics["raw_value"],
                    })
            per_method[m.value] = {"bases": bases, "max": rep.max_bits}
        params[p] = per_method

    delta_e, proxy = polarization_leakage(ensemble.polarization_errors)
    budget = {"exact_total": sum(components.values()), "components": components, "joint": None}
    if joint:
        try:
            budget["joint"] = _joint(ensemble, names, prior0)
        except TooManyParameters as exc:
            warnings.append({"kind": "joint_skipped", "reason": str(exc)})

    key_rate = None
    if qber is not None:
        i_ab = qber_to_iab(qber)
        i_ae = min(budget["exact_total"], 1.0)
        key_rate = {"qber": qber, "i_ab": i_ab, "i_ae": i_ae, "direction": "DR",
                    "r": key_rate_bound(i_ab, i_ae, "DR")}

    for rec in ensemble.clamps:
        warnings.append({"kind": "clamp", "path": rec.path, "count": rec.count,
                         "fraction": rec.fraction, "exceeds_threshold": rec.flagged})

    report = {
        "schema_version": SCHEMA_VERSION,
        "tool": {"name": "sidechan", "version": __version__},
        "input": fingerprint,
        "parameters": params,
        "polarization": {
            "e_hv": ensemble.polarization_errors.e_hv,
            "e_da": ensemble.polarization_errors.e_da,
            "delta_e": delta_e,
            "leakage_proxy": proxy,
            "proxy_constant": POLARIZATION_PROXY_CONSTANT,
        },
        "budget": budget,
        "key_rate": key_rate,
        "warnings": warnings,
    }
    return _plain(report)


def dumps(report: dict) -> str:
    return json.dumps(report, indent=2, sort_keys=True) + "\n"

