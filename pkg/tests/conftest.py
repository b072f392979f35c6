import numpy as np
import pytest

from sidechan.signal import Axis, SampledDistribution1D, normalize
from sidechan.synth import preset, synth_ensemble


def gaussian(mean, sigma, axis):
    z = (axis.points - mean) / sigma
    return normalize(SampledDistribution1D(axis, np.exp(-0.5 * z * z)))


def gaussian_axis(sigma=1.0, half_span=6.0, bins=4096, center=0.0, unit="dimensionless"):
    return Axis.spanning(center - half_span * sigma, center + half_span * sigma, bins, unit)


def rect(axis, lo, hi):
    x = axis.points
    return normalize(SampledDistribution1D(axis, ((x >= lo) & (x <= hi)).astype(float)))


@pytest.fixture(scope="session")
def paper_ensemble():
    return synth_ensemble(preset("paper"))


@pytest.fixture(scope="session")
def identical_ensemble():
    return synth_ensemble(preset("identical"))


GOOD_DIST = "# unit: nm\n795.0,1.0\n795.5,3.0\n796.0,1.0\n"


def write_manifest(directory, files=None, labels=("H", "V", "D", "A"), extra=""):
    """Manifest whose diodes all point at ``files`` (name -> relative path)."""
    files = files or {"wavelength": "w.csv"}
    lines = ["version = 1", "clock_period_ns = 200.0", extra, "",
             "[polarization_errors]", "e_hv = 0.0341", "e_da = 0.0094"]
    for lab in labels:
        lines += ["", "[[diode]]", f'label = "{lab}"', "[diode.files]"]
        lines += [f'{k} = "{v}"' for k, v in files.items()]
    path = directory / "ensemble.toml"
    path.write_text("\n".join(lines) + "\n")
    return path


def _case(files, manifest_kwargs=None, edit=None):
    def build(directory):
        for name, text in files.items():
            (directory / name).write_text(text)
        path = write_manifest(directory, **(manifest_kwargs or {}))
        if edit:
            path.write_text(edit(path.read_text()))
        return path
    return build


# name -> (builder(tmp_dir) -> manifest path, expected error class name)
MALFORMED_CASES = {
    "missing_unit": (_case({"w.csv": "795.0,1.0\n795.5,2.0\n"}), "BadHeader"),
    "unknown_unit": (_case({"w.csv": "# unit: furlong\n1,1\n2,1\n"}), "BadHeader"),
    "non_uniform_axis": (_case({"w.csv": "# unit: nm\n0,1\n1,1\n2,1\n3.1,1\n"}),
                         "NonUniformAxis"),
    "too_few_rows": (_case({"w.csv": "# unit: nm\n795.0,1.0\n"}), "TooFewRows"),
    "unparseable_row": (_case({"w.csv": "# unit: nm\n0,1\n1,x\n2,1\n"}), "UnparseableRow"),
    "ragged_matrix": (_case({"w.csv": GOOD_DIST, "s.csv": "# x: 0,1\n# y: 0,1\n1,2,3\n1,2,3,4\n"},
                            {"files": {"wavelength": "w.csv", "spatial": "s.csv"}}),
                      "RaggedRows"),
    "matrix_missing_y": (_case({"w.csv": GOOD_DIST, "s.csv": "# x: 0,1\n1,2\n3,4\n"},
                               {"files": {"wavelength": "w.csv", "spatial": "s.csv"}}),
                         "BadHeader"),
    "bad_timetag": (_case({"w.csv": GOOD_DIST,
                           "t.tags": "1.0\n2.0\n3.0\n4.0\n5.0\n6.0\nabc\n"},
                          {"files": {"wavelength": "w.csv", "arrival": "t.tags"}}),
                    "UnparseableRow"),
    "missing_diode": (_case({"w.csv": GOOD_DIST}, {"labels": ("H", "V", "D")}), "MissingDiode"),
    "duplicate_label": (_case({"w.csv": GOOD_DIST}, {"labels": ("H", "V", "D", "A", "H")}),
                        "DuplicateLabel"),
    "missing_file": (_case({}, {"files": {"wavelength": "nowhere.csv"}}), "MissingFile"),
    "bad_version": (_case({"w.csv": GOOD_DIST},
                          edit=lambda t: t.replace("version = 1", "version = 9")),
                    "BadManifest"),
}


# (number, title, passed) rows filled in by tests/test_acceptance.py
ACCEPTANCE_RESULTS = []


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for number, title, passed in sorted(ACCEPTANCE_RESULTS):
        terminalreporter.write_line(f"criterion {number}: {'PASS' if passed else 'FAIL'}  {title}")
