"""Acceptance gate: one test per criterion, each reporting a PASS/FAIL line.

The lines are printed in the terminal summary (see ``conftest.py``) and also
straight to the terminal as each criterion finishes.
"""

import functools
import math
import time

import numpy as np
import pytest

from sidechan import errors
from sidechan.cli import main
from sidechan.ensemble import BASES, PARAMETERS
from sidechan.ingest import load_ensemble, write_ensemble
from sidechan.leakage import (
    BasisPair,
    Method,
    basis_report,
    coarsen,
    exact_mutual_information,
    key_rate_bound,
    leakage_eq8_literal,
    leakage_for_pair,
    leakage_guessing,
    pair_overlap,
    polarization_leakage,
    qber_to_iab,
)
from sidechan.report import build_report, exact_budget
from sidechan.signal import (
    Axis,
    SampledDistribution1D,
    SpatialMode2D,
    normalize,
    normalize_2d,
)
from sidechan.synth import (
    DiodeSpec,
    EnsembleConfig,
    mc_mutual_information,
    preset,
    synth_distribution,
    synth_ensemble,
)
from sidechan.xcorr import downsample_2d

from conftest import ACCEPTANCE_RESULTS, MALFORMED_CASES, gaussian, gaussian_axis

pytestmark = pytest.mark.acceptance

ALL_METHODS = (Method.EXACT, Method.EQ8, Method.GUESSING, Method.MONTE_CARLO)


def criterion(number, title):
    def wrap(fn):
        @functools.wraps(fn)
        def run(*args, **kwargs):
            passed = False
            try:
                fn(*args, **kwargs)
                passed = True
            finally:
                ACCEPTANCE_RESULTS.append((number, title, passed))
                print(f"\ncriterion {number}: {'PASS' if passed else 'FAIL'}  {title}")
        return run
    return wrap


def _random_identical_ensemble(seed):
    """Four copies of one arbitrary nonnegative profile per parameter."""
    rng = np.random.default_rng(seed)
    ax = Axis(0.0, 0.1, 300, "ps")
    one = normalize(SampledDistribution1D(ax, rng.random(300) ** 3))
    sx = Axis(-1.0, 0.25, 9, "mm")
    sy = Axis(-2.0, 0.25, 17, "mm")
    mode = normalize_2d(SpatialMode2D(sx, sy, rng.random((17, 9))))
    ens = synth_ensemble(preset("identical", seed))
    diodes = {lab: type(rec)(lab, rec.mean_photon_number,
                             {"pulse": one, "spatial": mode})
              for lab, rec in ens.diodes.items()}
    return type(ens)(diodes, ens.polarization_errors)


@criterion(1, "identical diodes leak nothing under every method")
def test_c1_identity():
    start = time.perf_counter()
    ensembles = [synth_ensemble(preset("identical"))]
    ensembles += [_random_identical_ensemble(s) for s in (1, 2)]
    for ens in ensembles:
        for p in ens.parameter_names():
            for m in (Method.EXACT, Method.EQ8, Method.GUESSING):
                for res in basis_report(ens, p, m).results.values():
                    assert abs(res.bits_per_pulse) <= 1e-9, (p, m)
    ens = ensembles[0]
    for p in ens.parameter_names():
        rep = basis_report(ens, p, Method.MONTE_CARLO, n_samples=1_000_000, seed=0)
        for res in rep.results.values():
            se = res.diagnostics["stderr"]
            assert res.bits_per_pulse <= 3 * se, (p, res.bits_per_pulse, se)
            assert res.bits_per_pulse < 2e-3
    assert time.perf_counter() - start < 10.0


@criterion(2, "disjoint supports give exactly one bit")
def test_c2_disjoint():
    ax = Axis(0.0, 1.0, 200, "nm")
    x = ax.points
    pairs = [
        BasisPair("HV", normalize(SampledDistribution1D(ax, (x < 50).astype(float))),
                  normalize(SampledDistribution1D(ax, (x >= 120).astype(float)))),
        BasisPair("DA", normalize(SampledDistribution1D(
                      ax, np.where(x < 70, np.exp(-0.5 * ((x - 40) / 3) ** 2), 0.0))),
                  normalize(SampledDistribution1D(ax, ((x > 100) & (x < 180)) * np.sin(x) ** 2))),
    ]
    sx = Axis(0.0, 1.0, 16, "mm")
    a = np.zeros((16, 16))
    b = np.zeros((16, 16))
    a[:, :6] = 1.0
    b[3:9, 10:] = 2.0
    pairs.append(BasisPair("HV", SpatialMode2D(sx, sx, a / a.sum()),
                           SpatialMode2D(sx, sx, b / b.sum())))
    for pair in pairs:
        assert abs(exact_mutual_information(pair).bits_per_pulse - 1.0) <= 1e-6
        r0 = pair_overlap(pair)
        assert r0 == 0.0
        assert leakage_eq8_literal(r0).bits_per_pulse == 1.0
        assert leakage_guessing(r0).bits_per_pulse == 1.0


@criterion(3, "zero-lag correlation of equal-width Gaussians matches exp(-d^2/4s^2)")
def test_c3_closed_form():
    sigma = 1.7
    for ratio in (0.0, 0.5, 1.0, 2.0):
        delta = ratio * sigma
        ax = gaussian_axis(sigma, 6.0, 4096)
        pair = BasisPair("HV", gaussian(-delta / 2, sigma, ax), gaussian(delta / 2, sigma, ax))
        expected = math.exp(-delta ** 2 / (4 * sigma ** 2))
        assert abs(pair_overlap(pair) - expected) <= 1e-6, ratio


@criterion(4, "exact information agrees with the sampling oracle")
def test_c4_oracle_equivalence():
    start = time.perf_counter()
    rng = np.random.default_rng(20240)
    ratios = rng.uniform(0.1, 3.0, 10)
    for i, ratio in enumerate(ratios):
        sigma = float(rng.uniform(0.5, 2.0))
        ax = Axis.spanning(-8 * sigma, (8 + ratio) * sigma, 2048, "dimensionless")
        pair = BasisPair("HV", synth_distribution(0.0, sigma, ax),
                         synth_distribution(ratio * sigma, sigma, ax))
        exact = exact_mutual_information(pair).bits_per_pulse
        mc = mc_mutual_information(pair, 1_000_000, seed=i)
        tol = 3 * mc.diagnostics["stderr"] + 2e-3
        assert abs(exact - mc.bits_per_pulse) <= tol, (ratio, exact, mc.bits_per_pulse)
    assert time.perf_counter() - start < 60.0


@criterion(5, "leakage grows with offset and never grows under downsampling")
def test_c5_monotonicity(tmp_path):
    sigma = 1.0
    offsets = np.linspace(0.0, 3.0, 16)
    ax = Axis.spanning(-8.0, 11.0, 4096, "nm")
    ref = synth_distribution(0.0, sigma, ax)
    curves = {m: [] for m in (Method.EXACT, Method.EQ8, Method.GUESSING)}
    for d in offsets:
        pair = BasisPair("HV", ref, synth_distribution(d, sigma, ax))
        for m in curves:
            curves[m].append(leakage_for_pair(pair, m).bits_per_pulse)
    for m, ys in curves.items():
        assert np.all(np.diff(ys) >= -1e-9), m

    for param in PARAMETERS:
        out = tmp_path / param
        assert main(["simulate", "--preset", "paper", "--sweep", f"{param}:0:2:9",
                     "--method", "exact", "--method", "guessing", "--out", str(out)]) == 0
        for m in ("exact", "guessing"):
            ys = np.loadtxt(out / f"sweep_{param}_{m}.dat")[:, 1]
            assert np.all(np.diff(ys) >= -1e-9), (param, m)

    ens = synth_ensemble(preset("worst-case"))
    for basis in BASES:
        for p in ("wavelength", "pulse", "arrival"):
            pair = BasisPair.from_records(basis, *ens.basis_distributions(basis, p))
            base = exact_mutual_information(pair).bits_per_pulse
            prev = base
            for f in (2, 4, 8):
                coarse = BasisPair(basis, coarsen(pair.dist0, f), coarsen(pair.dist1, f))
                v = exact_mutual_information(coarse).bits_per_pulse
                assert v <= base + 1e-9 and v <= prev + 1e-9, (basis, p, f)
                prev = v
        d0, d1 = ens.basis_distributions(basis, "spatial")
        base = exact_mutual_information(BasisPair(basis, d0, d1)).bits_per_pulse
        prev = base
        for f in (2, 4, 8):
            v = exact_mutual_information(
                BasisPair(basis, downsample_2d(d0, f), downsample_2d(d1, f))).bits_per_pulse
            assert v <= base + 1e-9 and v <= prev + 1e-9, (basis, f)
            prev = v


@criterion(6, "paper preset leakage magnitudes and polarization mismatch")
def test_c6_magnitudes(paper_ensemble):
    for p in PARAMETERS:
        for m in (Method.EXACT, Method.GUESSING):
            for basis, res in basis_report(paper_ensemble, p, m).results.items():
                assert 1e-4 <= res.bits_per_pulse <= 1e-2, (p, m, basis, res.bits_per_pulse)
    delta_e, _ = polarization_leakage(paper_ensemble.polarization_errors)
    assert delta_e == pytest.approx(0.0247, abs=1e-15)
    assert abs(leakage_guessing(0.9272).bits_per_pulse - 4.3e-3) <= 5e-4


@criterion(7, "literal estimator goes negative near full overlap and the report flags it")
def test_c7_eq8_negative():
    res = leakage_eq8_literal(0.9)
    assert res.diagnostics["raw_value"] == pytest.approx(-0.036802784100545, abs=1e-12)
    assert res.diagnostics["negative"] and res.bits_per_pulse == 0.0

    # V offset so that the HV wavelength overlap is 0.9
    shift = 2 * 0.2 * math.sqrt(-math.log(0.9))
    base = DiodeSpec("H")
    diodes = (base, DiodeSpec("V").shifted("wavelength", shift), DiodeSpec("D"), DiodeSpec("A"))
    ens = synth_ensemble(EnsembleConfig(diodes))
    report = build_report(ens, {"case": "r0=0.9"}, parameters=["wavelength"],
                          methods=[Method.EQ8])
    entry = report["parameters"]["wavelength"]["eq8"]["bases"]["HV"]
    assert entry["diagnostics"]["R0"] == pytest.approx(0.9, abs=1e-6)
    flags = [w for w in report["warnings"] if w["kind"] == "eq8_negative"]
    assert [(w["parameter"], w["basis"]) for w in flags] == [("wavelength", "HV")]
    assert flags[0]["raw_value"] == pytest.approx(-0.0368, abs=1e-4)


@criterion(8, "key-rate contract")
def test_c8_keyrate():
    assert qber_to_iab(0.0) == 1.0
    i_ae = exact_budget(synth_ensemble(preset("paper")))["exact_total"]
    qbers = np.linspace(0.0, 0.5, 11)
    rates = [key_rate_bound(qber_to_iab(q), i_ae) for q in qbers]
    assert np.all(np.diff(rates) <= 0.0)
    assert rates[0] > 0 and rates[-1] <= 0
    for q, r in zip(qbers, rates):
        code = main(["keyrate", "--qber", repr(float(q)), "--preset", "paper", "--seed", "0"])
        assert code == (3 if r <= 0 else 0), (q, r, code)
    assert main(["keyrate", "--qber", "0.0", "--preset", "worst-case", "--seed", "0"]) in (0, 3)


def _numeric_leaves(obj, prefix=""):
    if isinstance(obj, dict):
        for k, v in obj.items():
            yield from _numeric_leaves(v, f"{prefix}/{k}")
    elif isinstance(obj, list):
        for i, v in enumerate(obj):
            yield from _numeric_leaves(v, f"{prefix}/{i}")
    elif isinstance(obj, (int, float)) and not isinstance(obj, bool):
        yield prefix, obj


@criterion(9, "write/load round trip and malformed inputs")
def test_c9_round_trip(tmp_path):
    for name in ("paper", "worst-case"):
        ens = synth_ensemble(preset(name, seed=4))
        loaded = load_ensemble(write_ensemble(ens, tmp_path / name))
        kwargs = dict(methods=list(ALL_METHODS), n_samples=20_000, seed=1,
                      joint=False, qber=0.03)
        mem = build_report(ens, {}, **kwargs)
        disk = build_report(loaded, {}, **kwargs)
        a, b = dict(_numeric_leaves(mem)), dict(_numeric_leaves(disk))
        assert a.keys() == b.keys()
        for key in a:
            assert abs(a[key] - b[key]) <= 1e-9, key

    assert len(MALFORMED_CASES) >= 8
    for case, (build, expected) in MALFORMED_CASES.items():
        d = tmp_path / f"bad_{case}"
        d.mkdir()
        manifest = build(d)
        with pytest.raises(errors.SidechanError) as exc:
            load_ensemble(manifest)
        assert type(exc.value) is getattr(errors, expected), case
        assert main(["analyze", "--manifest", str(manifest)]) == 2, case
