import json

import numpy as np
import pytest

from sidechan.cli import main, parse_sweep
from sidechan.errors import BadSweep

from conftest import MALFORMED_CASES, write_manifest


@pytest.fixture(scope="module")
def exported(tmp_path_factory):
    out = {}
    for name in ("identical", "paper"):
        d = tmp_path_factory.mktemp(name)
        assert main(["export", "--preset", name, "--out", str(d)]) == 0
        out[name] = d / "ensemble.toml"
    return out


def _read_curve(path):
    data = np.loadtxt(path, comments="#")
    return data[:, 0], data[:, 1]


class TestAnalyze:
    def test_identical_all_zero(self, exported, tmp_path):
        out = tmp_path / "r.json"
        assert main(["analyze", "--manifest", str(exported["identical"]),
                     "--out", str(out)]) == 0
        rep = json.loads(out.read_text())
        for per_method in rep["parameters"].values():
            for entry in per_method.values():
                for res in entry["bases"].values():
                    assert res["bits_per_pulse"] == 0.0
        assert rep["budget"]["exact_total"] == 0.0
        assert rep["schema_version"] == 1

    def test_paper_wavelength_guessing(self, exported, tmp_path):
        out = tmp_path / "r.json"
        assert main(["analyze", "--manifest", str(exported["paper"]), "--param", "wavelength",
                     "--method", "guessing", "--out", str(out)]) == 0
        rep = json.loads(out.read_text())
        assert list(rep["parameters"]) == ["wavelength"]
        for res in rep["parameters"]["wavelength"]["guessing"]["bases"].values():
            assert 1e-4 <= res["bits_per_pulse"] <= 1e-2
        assert rep["polarization"]["delta_e"] == pytest.approx(0.0247, abs=1e-12)

    def test_joint_and_keyrate_sections(self, exported, tmp_path):
        out = tmp_path / "r.json"
        assert main(["analyze", "--manifest", str(exported["paper"]), "--param", "wavelength",
                     "--param", "pulse", "--joint", "--qber", "0.05", "--out", str(out)]) == 0
        rep = json.loads(out.read_text())
        assert rep["budget"]["joint"]["max"] > 0
        assert rep["key_rate"]["r"] > 0

    def test_joint_skipped_for_four(self, exported, tmp_path):
        out = tmp_path / "r.json"
        assert main(["analyze", "--manifest", str(exported["identical"]), "--joint",
                     "--out", str(out)]) == 0
        kinds = [w["kind"] for w in json.loads(out.read_text())["warnings"]]
        assert "joint_skipped" in kinds

    def test_missing_diode(self, tmp_path, capsys):
        (tmp_path / "w.csv").write_text("# unit: nm\n0,1\n1,2\n2,1\n")
        manifest = write_manifest(tmp_path, labels=("H", "V", "D"))
        assert main(["analyze", "--manifest", str(manifest)]) == 2
        assert "A" in capsys.readouterr().err

    def test_unknown_param(self, exported):
        assert main(["analyze", "--manifest", str(exported["paper"]),
                     "--param", "colour"]) == 2

    @pytest.mark.parametrize("name", sorted(MALFORMED_CASES))
    def test_malformed_exit_2(self, tmp_path, name):
        manifest = MALFORMED_CASES[name][0](tmp_path)
        assert main(["analyze", "--manifest", str(manifest)]) == 2

    def test_rerun_byte_identical(self, exported, tmp_path):
        a, b = tmp_path / "a.json", tmp_path / "b.json"
        args = ["analyze", "--manifest", str(exported["paper"]), "--param", "arrival",
                "--method", "mc", "--mc-samples", "20000", "--seed", "5"]
        assert main(args + ["--out", str(a)]) == 0
        assert main(args + ["--out", str(b)]) == 0
        assert a.read_bytes() == b.read_bytes()


class TestSimulate:
    def test_pixel_sweep_nonincreasing(self, tmp_path):
        assert main(["simulate", "--preset", "paper", "--sweep", "pixel:1,2,4,8",
                     "--method", "exact", "--out", str(tmp_path)]) == 0
        for basis in ("HV", "DA"):
            xs, ys = _read_curve(tmp_path / f"sweep_pixel_{basis}_exact.dat")
            assert xs.tolist() == [1, 2, 4, 8]
            assert np.all(np.diff(ys) <= 1e-12)

    def test_offset_sweep_monotone(self, tmp_path):
        assert main(["simulate", "--preset", "paper", "--sweep", "wavelength:0:3:13",
                     "--out", str(tmp_path)]) == 0
        xs, exact = _read_curve(tmp_path / "sweep_wavelength_exact.dat")
        _, r0 = _read_curve(tmp_path / "sweep_wavelength_r0.dat")
        assert len(xs) == 13 and xs[0] == 0 and xs[-1] == 3
        assert np.all(np.diff(exact) >= -1e-12)
        assert np.all(np.diff(r0) <= 1e-12)
        assert exact[0] == 0.0 and r0[0] == pytest.approx(1.0, abs=1e-12)
        summary = json.loads((tmp_path / "summary.json").read_text())
        assert summary["sweeps"][0]["parameter"] == "wavelength"

    def test_rerun_byte_identical(self, tmp_path):
        runs = []
        for name in ("a", "b"):
            out = tmp_path / name
            assert main(["simulate", "--preset", "worst-case", "--seed", "3",
                         "--sweep", "arrival:0:1:3", "--method", "exact", "--method", "mc",
                         "--mc-samples", "20000", "--out", str(out)]) == 0
            runs.append(sorted((p.name, p.read_bytes()) for p in out.iterdir()))
        assert runs[0] == runs[1]

    def test_unknown_preset(self, tmp_path):
        assert main(["simulate", "--preset", "nope", "--out", str(tmp_path)]) == 2

    @pytest.mark.parametrize("sweep", ["colour:0:1:3", "wavelength:1:0:3",
                                       "wavelength:0:1", "pixel:", "pixel:0,2", "pixel:a"])
    def test_bad_sweep(self, tmp_path, sweep):
        assert main(["simulate", "--preset", "paper", "--sweep", sweep,
                     "--out", str(tmp_path)]) == 2


def test_parse_sweep():
    s = parse_sweep("pulse:0:2:5")
    assert s["values"] == [0.0, 0.5, 1.0, 1.5, 2.0]
    assert parse_sweep("pixel:1,2")["values"] == [1, 2]
    with pytest.raises(BadSweep):
        parse_sweep("pulse:0:2:0")


class TestKeyrate:
    def test_positive(self, capsys):
        assert main(["keyrate", "--qber", "0.05", "--preset", "paper"]) == 0
        assert "r_DR" in capsys.readouterr().out

    def test_insecure(self):
        assert main(["keyrate", "--qber", "0.5", "--preset", "identical"]) == 3

    def test_from_manifest(self, exported):
        assert main(["keyrate", "--qber", "0.0", "--manifest", str(exported["identical"])]) == 0

    def test_reverse_needs_i_be(self):
        assert main(["keyrate", "--qber", "0.05", "--preset", "paper",
                     "--direction", "rr"]) == 2
        assert main(["keyrate", "--qber", "0.05", "--preset", "paper",
                     "--direction", "rr", "--i-be", "0.1"]) == 0

    def test_out_of_range_qber(self):
        assert main(["keyrate", "--qber", "0.7", "--preset", "paper"]) == 2

    def test_needs_source(self):
        assert main(["keyrate", "--qber", "0.05"]) == 2


def test_no_command(capsys):
    assert main([]) == 0
    assert main(["--version"]) == 0
