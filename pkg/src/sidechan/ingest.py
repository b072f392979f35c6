"""Readers and writers for measured source data.

File formats (all plain text, UTF-8):

1D distribution (``*.csv``)::

    # unit: nm
    795.0,0.0012
    795.1,0.0031
    ...

  Lines starting with ``#`` are comments; exactly one ``# unit: <u>`` line
  with ``u`` in nm, ps, ns, mm is required. Each data row is ``axis,value``.
  The axis must be increasing and uniform to 1e-6 of the step.

2D spatial mode (``*.csv``)::

    # x: -4.0,0.0625
    # y: -4.0,0.0625
    0.0,0.0,...
    ...

  Row ``i`` is ``y = y_start + i * y_step``; column ``j`` is
  ``x = x_start + j * x_step``. All rows must have the same length.

Time tags (``*.tags``): one detection time in ns per line; blank lines and
``#`` comments are skipped.

Manifest (TOML)::

    version = 1
    clock_period_ns = 200.0
    timetag_bins = 4000            # optional
    clamp_warn_fraction = 0.01     # optional

    [polarization_errors]
    e_hv = 0.0341
    e_da = 0.0094

    [[diode]]
    label = "H"
    mean_photon_number = 0.5       # optional
    [diode.files]
    wavelength = "H_wavelength.csv"
    spatial = "H_spatial.csv"

  Paths are relative to the manifest. A file is read as a spatial mode when
  it carries a ``# x:`` header, as time tags when its suffix is ``.tags``,
  and as a 1D distribution otherwise.

Negative samples (detector baseline) are set to zero on load. Each loader
emits a :class:`ClampWarning` with the count and clamped fraction.
"""

from __future__ import annotations

import math
import warnings
from pathlib import Path
from typing import Union

import numpy as np

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from .ensemble import LABELS, ClampRecord, DiodeRecord, PolarizationErrors, SourceEnsemble
from .errors import (
    BadHeader,
    BadManifest,
    DuplicateLabel,
    IngestError,
    MissingDiode,
    MissingFile,
    NonUniformAxis,
    RaggedRows,
    SidechanError,
    TooFewRows,
    UnparseableRow,
)
from .signal import (
    UNITS,
    Axis,
    SampledDistribution1D,
    SpatialMode2D,
    histogram_from_timetags,
    normalize,
    normalize_2d,
)

PathLike = Union[str, Path]

MANIFEST_VERSION = 1
DEFAULT_TIMETAG_BINS = 4000
DEFAULT_CLAMP_WARN_FRACTION = 0.01
AXIS_RTOL = 1e-6


class ClampWarning(UserWarning):
    def __init__(self, path, count, fraction):
        self.path = str(path)
        self.count = count
        self.fraction = fraction
        super().__init__(f"{path}: clamped {count} negative value(s) "
                         f"({fraction:.3g} of total magnitude) to 0")


def _read_lines(path: Path):
    try:
        return path.read_text(encoding="utf-8").splitlines()
    except FileNotFoundError:
        raise MissingFile("file not found", path) from None
    except UnicodeDecodeError:
        raise UnparseableRow("file is not UTF-8 text", path) from None


def _parse_floats(text: str, path, lineno):
    try:
        vals = [float(tok) for tok in text.split(",")]
    except ValueError:
        raise UnparseableRow(f"cannot parse {text.strip()!r}", path, lineno) from None
    if not all(math.isfinite(v) for v in vals):
        raise UnparseableRow(f"non-finite value in {text.strip()!r}", path, lineno)
    return vals


def _header_value(line: str):
    """``'# key: value'`` -> (key, value); None for plain comments."""
    body = line.lstrip("#").strip()
    if ":" not in body:
        return None
    key, _, value = body.partition(":")
    return key.strip().lower(), value.strip()


def _clamp(values: np.ndarray, path):
    neg = values < 0
    count = int(neg.sum())
    if not count:
        return values, None
    clamped = float(-values[neg].sum())
    fraction = clamped / float(np.abs(values).sum())
    warnings.warn(ClampWarning(path, count, fraction), stacklevel=3)
    return np.where(neg, 0.0, values), ClampRecord(str(path), count, fraction)


def _uniform_axis(xs, path, unit) -> Axis:
    n = len(xs)
    step = (xs[-1] - xs[0]) / (n - 1)
    if not step > 0:
        raise NonUniformAxis("axis must be strictly increasing", path)
    diffs = np.diff(xs)
    bad = np.flatnonzero(np.abs(diffs - step) > AXIS_RTOL * step)
    if bad.size:
        i = int(bad[0])
        raise NonUniformAxis(
            f"axis step {diffs[i]!r} between rows {i + 1} and {i + 2} "
            f"differs from the mean step {step!r}",
            path,
        )
    return Axis(float(xs[0]), float(step), n, unit)


def _load_dist(path: Path):
    unit = None
    xs, ys = [], []
    for lineno, line in enumerate(_read_lines(path), start=1):
        s = line.strip()
        if not s:
            continue
        if s.startswith("#"):
            kv = _header_value(s)
            if kv and kv[0] == "unit":
                if xs:
                    raise BadHeader("unit header after data rows", path, lineno)
                if unit is not None:
                    raise BadHeader("duplicate unit header", path, lineno)
                if kv[1] not in UNITS or kv[1] == "dimensionless":
                    raise BadHeader(f"unknown unit {kv[1]!r}", path, lineno)
                unit = kv[1]
            continue
        vals = _parse_floats(s, path, lineno)
        if len(vals) != 2:
            raise UnparseableRow(f"expected 2 columns, got {len(vals)}", path, lineno)
        xs.append(vals[0])
        ys.append(vals[1])
    if unit is None:
        raise BadHeader("missing '# unit: <nm|ps|ns|mm>' header", path)
    if len(xs) < 2:
        raise TooFewRows(f"need at least 2 data rows, got {len(xs)}", path)
    axis = _uniform_axis(np.array(xs), path, unit)
    values, record = _clamp(np.array(ys), path)
    return normalize(SampledDistribution1D(axis, values)), record


def _load_matrix(path: Path):
    header = {}
    rows = []
    width = None
    for lineno, line in enumerate(_read_lines(path), start=1):
        s = line.strip()
        if not s:
            continue
        if s.startswith("#"):
            kv = _header_value(s)
            if kv and kv[0] in ("x", "y", "unit"):
                if rows:
                    raise BadHeader(f"{kv[0]} header after data rows", path, lineno)
                if kv[0] in header:
                    raise BadHeader(f"duplicate {kv[0]} header", path, lineno)
                if kv[0] == "unit":
                    header["unit"] = kv[1]
                    continue
                try:
                    start, step = (float(t) for t in kv[1].split(","))
                except ValueError:
                    raise BadHeader(f"expected '# {kv[0]}: start,step'", path, lineno) from None
                if not (math.isfinite(start) and math.isfinite(step) and step > 0):
                    raise BadHeader(f"invalid {kv[0]} axis {kv[1]!r}", path, lineno)
                header[kv[0]] = (start, step)
            continue
        vals = _parse_floats(s, path, lineno)
        if width is None:
            width = len(vals)
        elif len(vals) != width:
            raise RaggedRows(f"row has {len(vals)} values, expected {width}", path, lineno)
        rows.append(vals)
    for key in ("x", "y"):
        if key not in header:
            raise BadHeader(f"missing '# {key}: start,step' header", path)
    unit = header.get("unit", "mm")
    if unit not in UNITS:
        raise BadHeader(f"unknown unit {unit!r}", path)
    if len(rows) < 2 or width < 2:
        raise TooFewRows("image needs at least 2 rows and 2 columns", path)
    x_axis = Axis(*header["x"], width, unit)
    y_axis = Axis(*header["y"], len(rows), unit)
    values, record = _clamp(np.array(rows), path)
    return normalize_2d(SpatialMode2D(x_axis, y_axis, values)), record


def _load_tags(path: Path):
    tags = []
    for lineno, line in enumerate(_read_lines(path), start=1):
        s = line.strip()
        if not s or s.startswith("#"):
            continue
        try:
            t = float(s)
        except ValueError:
            raise UnparseableRow(f"cannot parse {s!r}", path, lineno) from None
        if not math.isfinite(t):
            raise UnparseableRow(f"non-finite tag {s!r}", path, lineno)
        tags.append(t)
    return np.array(tags)


def _wrap(path, fn, *args):
    """Run a loader; attach the path to any error raised below it."""
    try:
        return fn(path, *args)
    except IngestError as exc:
        raise exc.with_path(path)
    except SidechanError as exc:
        raise type(exc)(f"{path}: {exc}") from exc


def read_dist_csv(path: PathLike) -> SampledDistribution1D:
    return _wrap(Path(path), _load_dist)[0]


def read_matrix_csv(path: PathLike) -> SpatialMode2D:
    return _wrap(Path(path), _load_matrix)[0]


def read_timetags(path: PathLike, clock_period_ns: float, bins: int) -> SampledDistribution1D:
    path = Path(path)
    tags = _wrap(path, _load_tags)
    return _wrap(path, lambda _p: histogram_from_timetags(tags, clock_period_ns, bins))


def _is_matrix_file(path: Path) -> bool:
    for line in _read_lines(path):
        s = line.strip()
        if not s:
            continue
        if not s.startswith("#"):
            return False
        kv = _header_value(s)
        if kv and kv[0] in ("x", "y"):
            return True
    return False


def read_parameter_file(path: PathLike, clock_period_ns: float = 200.0,
                        timetag_bins: int = DEFAULT_TIMETAG_BINS):
    """Load any supported file, choosing the reader from header and suffix."""
    dist, _ = _read_any(Path(path), clock_period_ns, timetag_bins)
    return dist


def _read_any(path: Path, clock_period_ns, timetag_bins):
    if path.suffix == ".tags":
        return read_timetags(path, clock_period_ns, timetag_bins), None
    if _wrap(path, _is_matrix_file):
        return _wrap(path, _load_matrix)
    return _wrap(path, _load_dist)


def _require(table, key, kind, path):
    if key not in table:
        raise BadManifest(f"missing required key {key!r}", path)
    value = table[key]
    if kind is float and isinstance(value, int) and not isinstance(value, bool):
        value = float(value)
    if not isinstance(value, kind) or isinstance(value, bool):
        raise BadManifest(f"{key!r} must be {kind.__name__}", path)
    return value


def load_ensemble(manifest_path: PathLike) -> SourceEnsemble:
    """Read a manifest and every file it references."""
    manifest_path = Path(manifest_path)
    try:
        with open(manifest_path, "rb") as fh:
            doc = tomllib.load(fh)
    except FileNotFoundError:
        raise MissingFile("manifest not found", manifest_path) from None
    except (tomllib.TOMLDecodeError, UnicodeDecodeError) as exc:
        raise BadManifest(f"invalid TOML: {exc}", manifest_path) from None

    version = _require(doc, "version", int, manifest_path)
    if version != MANIFEST_VERSION:
        raise BadManifest(f"unsupported manifest version {version}", manifest_path)
    clock = _require(doc, "clock_period_ns", float, manifest_path)
    if not clock > 0:
        raise BadManifest("clock_period_ns must be positive", manifest_path)
    bins = doc.get("timetag_bins", DEFAULT_TIMETAG_BINS)
    if not isinstance(bins, int) or bins < 2:
        raise BadManifest("timetag_bins must be an integer >= 2", manifest_path)
    warn_fraction = doc.get("clamp_warn_fraction", DEFAULT_CLAMP_WARN_FRACTION)

    pol = doc.get("polarization_errors")
    if not isinstance(pol, dict):
        raise BadManifest("missing [polarization_errors] table", manifest_path)
    try:
        errors = PolarizationErrors(
            _require(pol, "e_hv", float, manifest_path),
            _require(pol, "e_da", float, manifest_path),
        )
    except IngestError:
        raise
    except SidechanError as exc:
        raise BadManifest(str(exc), manifest_path) from None

    entries = doc.get("diode", [])
    if not isinstance(entries, list):
        raise BadManifest("'diode' must be an array of tables ([[diode]])", manifest_path)
    seen = {}
    for entry in entries:
        label = _require(entry, "label", str, manifest_path)
        if label not in LABELS:
            raise BadManifest(f"unknown diode label {label!r}", manifest_path)
        if label in seen:
            raise DuplicateLabel(f"diode label {label!r} appears more than once", manifest_path)
        seen[label] = entry
    missing = [lab for lab in LABELS if lab not in seen]
    if missing:
        raise MissingDiode(f"manifest has no entry for diode(s) {', '.join(missing)}",
                           manifest_path)

    base = manifest_path.parent
    diodes = {}
    clamps = []
    for label in LABELS:
        entry = seen[label]
        files = entry.get("files", {})
        if not isinstance(files, dict) or not files:
            raise BadManifest(f"diode {label} lists no files", manifest_path)
        mu = entry.get("mean_photon_number", 0.5)
        if not isinstance(mu, (int, float)) or isinstance(mu, bool) or not mu > 0:
            raise BadManifest(f"diode {label}: mean_photon_number must be positive",
                              manifest_path)
        params = {}
        for name, rel in files.items():
            if not isinstance(rel, str):
                raise BadManifest(f"diode {label}: path for {name!r} must be a string",
                                  manifest_path)
            with warnings.catch_warnings():
                warnings.simplefilter("ignore", ClampWarning)
                dist, record = _read_any(base / rel, clock, bins)
            if record is not None:
                flagged = record.fraction > warn_fraction
                clamps.append(ClampRecord(record.path, record.count, record.fraction, flagged))
                if flagged:
                    warnings.warn(ClampWarning(record.path, record.count, record.fraction),
                                  stacklevel=2)
            params[name] = dist
        diodes[label] = DiodeRecord(label, float(mu), params)
    return SourceEnsemble(diodes, errors, clock, tuple(clamps))


def write_dist_csv(d: SampledDistribution1D, path: PathLike) -> None:
    lines = [f"# unit: {d.unit}"]
    for x, y in zip(d.axis.points.tolist(), d.density.tolist()):
        lines.append(f"{x!r},{y!r}")
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def write_matrix_csv(m: SpatialMode2D, path: PathLike) -> None:
    lines = [
        f"# x: {float(m.x_axis.start)!r},{float(m.x_axis.step)!r}",
        f"# y: {float(m.y_axis.start)!r},{float(m.y_axis.step)!r}",
        f"# unit: {m.x_axis.unit}",
    ]
    for row in m.intensity:
        lines.append(",".join(repr(v) for v in row.tolist()))
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def write_timetags(tags, path: PathLike) -> None:
    Path(path).write_text("".join(f"{float(t)!r}\n" for t in tags), encoding="utf-8")


def write_ensemble(ensemble: SourceEnsemble, directory: PathLike,
                   name: str = "ensemble.toml") -> Path:
    """Write every diode record plus a manifest into ``directory``."""
    out = Path(directory)
    out.mkdir(parents=True, exist_ok=True)
    err = ensemble.polarization_errors
    lines = [
        f"version = {MANIFEST_VERSION}",
        f"clock_period_ns = {float(ensemble.clock_period_ns)!r}",
        "",
        "[polarization_errors]",
        f"e_hv = {float(err.e_hv)!r}",
        f"e_da = {float(err.e_da)!r}",
    ]
    for label in LABELS:
        record = ensemble.diodes[label]
        lines += ["", "[[diode]]", f'label = "{label}"',
                  f"mean_photon_number = {float(record.mean_photon_number)!r}",
                  "[diode.files]"]
        for param, dist in record.parameters.items():
            fname = f"{label}_{param}.csv"
            if isinstance(dist, SpatialMode2D):
                write_matrix_csv(dist, out / fname)
            else:
                write_dist_csv(dist, out / fname)
            lines.append(f'{param} = "{fname}"')
    manifest = out / name
    manifest.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return manifest
