"""Command-line entry point.

Exit codes: 0 success (or positive key rate), 1 internal error, 2 invalid
input, 3 key rate not positive.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .ensemble import BASES, PARAMETERS
from .errors import BadSweep, MissingInput, SidechanError
from .ingest import load_ensemble, write_ensemble
from .leakage import (
    BasisPair,
    Method,
    key_rate_bound,
    leakage_for_pair,
    pair_overlap,
    qber_to_iab,
)
from .report import build_report, dumps, exact_budget
from .synth import preset, synth_distribution, synth_ensemble, synth_mode
from .signal import Axis
from .xcorr import downsample_2d

EXIT_OK = 0
EXIT_INTERNAL = 1
EXIT_INVALID = 2
EXIT_INSECURE = 3

METHOD_CHOICES = [m.value for m in Method]


def parse_sweep(text: str) -> dict:
    """``param:lo:hi:steps`` (offset in widths) or ``pixel:f1,f2,...``."""
    head, _, rest = text.partition(":")
    if head == "pixel":
        try:
            factors = [int(t) for t in rest.split(",") if t.strip()]
        except ValueError:
            raise BadSweep(f"pixel factors must be integers: {rest!r}") from None
        if not factors or any(f < 1 for f in factors):
            raise BadSweep("pixel sweep needs one or more factors >= 1")
        return {"kind": "pixel", "parameter": "spatial", "values": factors}
    if head not in PARAMETERS:
        raise BadSweep(f"unknown sweep {text!r}; use <param>:lo:hi:steps or pixel:f1,f2,...")
    parts = rest.split(":")
    if len(parts) != 3:
        raise BadSweep(f"offset sweep must look like {head}:lo:hi:steps, got {text!r}")
    try:
        lo, hi, steps = float(parts[0]), float(parts[1]), int(parts[2])
    except ValueError:
        raise BadSweep(f"cannot parse sweep bounds in {text!r}") from None
    if not (0 <= lo <= hi) or steps < 1 or (steps == 1 and lo != hi):
        raise BadSweep(f"need 0 <= lo <= hi and steps >= 1 in {text!r}")
    values = np.linspace(lo, hi, steps).tolist()
    return {"kind": "offset", "parameter": head, "values": values}


def _offset_pair(config, parameter: str, delta: float, hi: float) -> BasisPair:
    """H diode against a copy of itself moved by ``delta`` widths."""
    spec = next(d for d in config.diodes if d.polarization == "H")
    other = spec.shifted(parameter, delta * spec.width(parameter))
    k = config.span_sigmas
    bins = config.bins[parameter]
    sigma = spec.width(parameter)
    c = spec.center(parameter)
    if parameter == "spatial":
        cx, cy, wx, wy = spec.spatial_mm
        x_axis = Axis.spanning(cx - k * wx, cx + (hi + k) * wx, bins, "mm")
        y_axis = Axis.spanning(cy - k * wy, cy + k * wy, bins, "mm")
        return BasisPair("HV", synth_mode(*spec.spatial_mm, x_axis, y_axis),
                         synth_mode(*other.spatial_mm, x_axis, y_axis))
    unit = {"wavelength": "nm", "pulse": "ps", "arrival": "ns"}[parameter]
    axis = Axis.spanning(c - k * sigma, c + (hi + k) * sigma, bins, unit)
    return BasisPair("HV", synth_distribution(c, sigma, axis),
                     synth_distribution(other.center(parameter), sigma, axis))


def _write_curve(path: Path, xlabel: str, xs, ys) -> None:
    lines = [f"# {xlabel}\tleakage_bits_per_pulse"]
    lines += [f"{x!r}\t{float(y)!r}" for x, y in zip(xs, ys)]
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def run_sweep(config, sweep: dict, methods, out: Path, n_samples: int, seed: int) -> dict:
    """Evaluate a sweep and write one two-column curve file per method (and R0)."""
    values = sweep["values"]
    curves = {}
    if sweep["kind"] == "offset":
        param = sweep["parameter"]
        hi = max(values)
        pairs = {"HV": [_offset_pair(config, param, v, hi) for v in values]}
        xlabel = f"{param}_offset_in_widths"
        stem = f"sweep_{param}"
    else:
        ens = synth_ensemble(config)
        pairs = {}
        for basis in BASES:
            d0, d1 = ens.basis_distributions(basis, "spatial")
            pairs[basis] = [BasisPair(basis, downsample_2d(d0, f), downsample_2d(d1, f))
                            for f in values]
        xlabel = "pixel_factor"
        stem = "sweep_pixel"

    files = []
    for basis, plist in pairs.items():
        suffix = "" if sweep["kind"] == "offset" else f"_{basis}"
        r0 = [pair_overlap(p) for p in plist]
        curves[f"{basis}:R0"] = r0
        name = f"{stem}{suffix}_r0.dat"
        _write_curve(out / name, xlabel, values, r0)
        files.append(name)
        for m in methods:
            ys = [leakage_for_pair(p, m, n_samples=n_samples, seed=seed + i).bits_per_pulse
                  for i, p in enumerate(plist)]
            curves[f"{basis}:{m.value}"] = ys
            name = f"{stem}{suffix}_{m.value}.dat"
            _write_curve(out / name, xlabel, values, ys)
            files.append(name)
    return {**sweep, "curves": curves, "files": files}


def cmd_analyze(args) -> int:
    ensemble = load_ensemble(args.manifest)
    methods = [Method(m) for m in args.method] if args.method else None
    kwargs = {"methods": methods} if methods else {}
    report = build_report(
        ensemble,
        {"manifest": str(args.manifest)},
        parameters=args.param,
        n_samples=args.mc_samples,
        seed=args.seed,
        joint=args.joint,
        qber=args.qber,
        **kwargs,
    )
    text = dumps(report)
    if args.out:
        Path(args.out).parent.mkdir(parents=True, exist_ok=True)
        Path(args.out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    _print_summary(report, sys.stderr if not args.out else sys.stdout)
    return EXIT_OK


def _print_summary(report: dict, stream) -> None:
    for param, per_method in report["parameters"].items():
        for method, entry in per_method.items():
            vals = "  ".join(f"{b}={v['bits_per_pulse']:.3e}" for b, v in entry["bases"].items())
            print(f"{param:<10} {method:<8} {vals}", file=stream)
    print(f"delta_e = {report['polarization']['delta_e']:.4g}", file=stream)
    print(f"exact budget = {report['budget']['exact_total']:.4e} bits/pulse", file=stream)
    for w in report["warnings"]:
        print(f"warning: {json.dumps(w, sort_keys=True)}", file=stream)


def cmd_simulate(args) -> int:
    config = preset(args.preset, args.seed)
    sweeps = [parse_sweep(s) for s in args.sweep or []]
    methods = [Method(m) for m in args.method] if args.method else [
        Method.EXACT, Method.EQ8, Method.GUESSING]
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    ensemble = synth_ensemble(config)
    report = build_report(
        ensemble,
        {"preset": args.preset, "seed": args.seed},
        methods=methods,
        n_samples=args.mc_samples,
        seed=args.seed,
        joint=args.joint,
    )
    report["sweeps"] = [run_sweep(config, s, methods, out, args.mc_samples, args.seed)
                        for s in sweeps]
    (out / "summary.json").write_text(dumps(report), encoding="utf-8")
    _print_summary(report, sys.stdout)
    return EXIT_OK


def cmd_keyrate(args) -> int:
    i_ab = qber_to_iab(args.qber)
    if args.manifest:
        ensemble = load_ensemble(args.manifest)
    elif args.preset:
        ensemble = synth_ensemble(preset(args.preset, args.seed))
    else:
        raise MissingInput("keyrate needs --manifest or --preset")
    budget = exact_budget(ensemble)
    i_ae = min(budget["exact_total"], 1.0)
    if args.direction == "rr":
        if args.i_be is None:
            raise MissingInput("--direction rr needs --i-be")
        r = key_rate_bound(i_ab, i_ae, "RR", args.i_be)
    else:
        r = key_rate_bound(i_ab, i_ae, "DR")
    print(f"I(A:B) = {i_ab!r}")
    print(f"I(A:E) budget = {i_ae!r}")
    print(f"r_{args.direction.upper()} = {r!r}")
    if r <= 0:
        print("key rate is not positive: abort", file=sys.stderr)
        return EXIT_INSECURE
    return EXIT_OK


def cmd_export(args) -> int:
    ensemble = synth_ensemble(preset(args.preset, args.seed))
    manifest = write_ensemble(ensemble, args.out)
    print(manifest)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sidechan",
        description="Side-channel leakage of four-diode BB84 sources.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command")

    def add_common(p):
        p.add_argument("--method", action="append", choices=METHOD_CHOICES,
                       help="leakage method (repeatable); default exact, eq8, guessing")
        p.add_argument("--mc-samples", type=int, default=200_000)
        p.add_argument("--joint", action="store_true",
                       help="also report joint leakage assuming independent parameters")

    p = sub.add_parser("analyze", help="leakage report for a measured ensemble")
    p.add_argument("--manifest", required=True)
    p.add_argument("--param", action="append", help="parameter to analyze (repeatable)")
    p.add_argument("--out", help="JSON report path (default: stdout)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--qber", type=float, help="include a key-rate section")
    add_common(p)
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("simulate", help="synthetic preset study with optional sweeps")
    p.add_argument("--preset", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--sweep", action="append",
                   help="<param>:lo:hi:steps (offset in widths) or pixel:f1,f2,...")
    p.add_argument("--out", required=True, help="output directory")
    add_common(p)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("keyrate", help="secret key rate after source leakage")
    p.add_argument("--qber", type=float, required=True)
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--manifest")
    src.add_argument("--preset")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--direction", choices=["dr", "rr"], default="dr")
    p.add_argument("--i-be", type=float, help="I(B:E) for reverse reconciliation")
    p.set_defaults(func=cmd_keyrate)

    p = sub.add_parser("export", help="write a preset ensemble as files + manifest")
    p.add_argument("--preset", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_export)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_INVALID
    if args.command is None:
        parser.print_help()
        return EXIT_OK
    try:
        return args.func(args)
    except SidechanError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except Exception as exc:  # noqa: BLE001 - last-resort exit code contract
        print(f"internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
