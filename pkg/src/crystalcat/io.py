"""CSV writers and readers with ``#`` metadata headers.

Every file starts with ``# key: value`` lines (values JSON-encoded) carrying
the tool version, the sha256 of the run configuration and the unit and
phase conventions, followed by a plain comma-separated table.
"""
from __future__ import annotations

import csv
import hashlib
import json
from pathlib import Path

import numpy as np

from . import __version__
from .crystal import EquilibriumResult
from .units import TWO_PI

UNIT_CONVENTIONS = (
    "lengths in l = q^(2/3) / (4 pi eps0 m nu_x^2)^(1/3); energies in m nu_x^2 l^2; "
    "times in 1/nu_x; frequencies angular, in units of nu_x"
)
PHASE_CONVENTION = (
    "I(t) = <phi0| exp(-i H_e t / hbar) |phi0>, energy zero at the all-ground ground level "
    "(classical minimum + zero point); P1 = (1 + Re I)/2, P2 = (1 + Im I)/2 with gate |e> -> -i|e>"
)


def config_hash(config) -> str:
    """sha256 of the canonical JSON form of ``config``."""
    text = json.dumps(config, sort_keys=True, separators=(",", ":"), default=str)
    return hashlib.sha256(text.encode()).hexdigest()


def _jsonable(value):
    if isinstance(value, np.generic):
        return value.item()
    if isinstance(value, np.ndarray):
        return value.tolist()
    if isinstance(value, dict):
        return {str(k): _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    return value


def header(config=None, **extra) -> dict:
    meta = {
        "tool": f"crystalcat {__version__}",
        "config_sha256": config_hash(config) if config is not None else None,
        "units": UNIT_CONVENTIONS,
        "phase_convention": PHASE_CONVENTION,
    }
    meta.update(extra)
    return meta


def write_table(path, columns, rows, metadata=None) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as fh:
        for key, value in (metadata or {}).items():
            fh.write(f"# {key}: {json.dumps(_jsonable(value), default=str)}\n")
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(columns)
        for row in rows:
            writer.writerow([_format(v) for v in row])
    return path


def _format(value):
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    return value


def read_table(path):
    """Return ``(metadata, columns, rows)``; rows are lists of strings."""
    meta, lines = {}, []
    with Path(path).open() as fh:
        for line in fh:
            if line.startswith("#"):
                key, _, value = line[1:].partition(":")
                try:
                    meta[key.strip()] = json.loads(value)
                except json.JSONDecodeError:
                    meta[key.strip()] = value.strip()
            else:
                lines.append(line)
    reader = csv.reader(lines)
    columns = next(reader)
    return meta, columns, [row for row in reader if row]


def write_configuration(path, result: EquilibriumResult, spins, metadata=None) -> Path:
    rows = [(i, x, y, "e" if i in spins.excited_indices else "g")
            for i, (x, y) in enumerate(result.config.positions)]
    path = write_table(path, ["index", "x", "y", "spin"], rows, metadata)
    record = result.as_record()
    path.with_suffix(".json").write_text(json.dumps(_jsonable(record), indent=2, default=str) + "\n")
    return path


def write_series(path, series, nu_x: float | None = None, metadata=None) -> Path:
    nu_x = nu_x if nu_x is not None else series.metadata.get("nu_x")
    t_us = series.times / nu_x * 1e6 if nu_x else np.full(series.times.shape, np.nan)
    v = series.values
    rows = zip(series.times, t_us, v.real, v.imag, np.abs(v))
    meta = dict(metadata or {})
    meta.setdefault("series", series.metadata)
    return write_table(path, ["t_dimensionless", "t_us", "re_I", "im_I", "abs_I"], rows, meta)


def read_series(path):
    from .gaussian import OverlapSeries

    meta, columns, rows = read_table(path)
    data = np.array(rows, dtype=float)
    t = data[:, columns.index("t_dimensionless")]
    values = data[:, columns.index("re_I")] + 1j * data[:, columns.index("im_I")]
    return OverlapSeries(t, values, meta.get("series") or {})


def write_spectrum(path, spec, nu_x: float | None = None, metadata=None) -> Path:
    nu_x = nu_x if nu_x is not None else spec.metadata.get("nu_x")
    khz = spec.frequencies * nu_x / TWO_PI / 1e3 if nu_x else np.full(spec.frequencies.shape, np.nan)
    meta = dict(metadata or {})
    meta.update({"window": spec.window, "bin_width": spec.bin_width,
                 "spectrum_convention": spec.metadata.get("spectrum_convention")})
    return write_table(path, ["omega", "f_khz", "magnitude"], zip(spec.frequencies, khz, spec.magnitudes), meta)


def write_ramsey(path, series, p1, p2, nu_x=None, metadata=None) -> Path:
    nu_x = nu_x if nu_x is not None else series.metadata.get("nu_x")
    t_us = series.times / nu_x * 1e6 if nu_x else np.full(series.times.shape, np.nan)
    return write_table(path, ["t_dimensionless", "t_us", "P1", "P2"], zip(series.times, t_us, p1, p2), metadata)


def write_diagram(path, diagram, metadata=None) -> Path:
    rows = [(a, d, int(diagram.masks[i, j]))
            for i, a in enumerate(diagram.alphas) for j, d in enumerate(diagram.dalphas)]
    meta = dict(metadata or {})
    meta.update(diagram.metadata)
    meta["unknown_cells"] = int(diagram.unknown.sum())
    return write_table(path, ["alpha", "dalpha", "bitmask"], rows, meta)


def write_boundaries(path, diagram, metadata=None) -> Path:
    rows = []
    for k, curve in enumerate(diagram.curves):
        kind = curve.kind.label if curve.kind is not None else ""
        for a, d in curve.points:
            rows.append((k, curve.source, curve.label, kind, a, d))
    return write_table(path, ["curve", "source", "label", "structure", "alpha", "dalpha"], rows, metadata)


def write_modes(path, alphas, frequencies, kinds, metadata=None) -> Path:
    n = frequencies.shape[1]
    rows = [(a, k.label, *f) for a, k, f in zip(alphas, kinds, frequencies)]
    return write_table(path, ["alpha", "structure", *[f"omega_{i + 1}" for i in range(n)]], rows, metadata)
