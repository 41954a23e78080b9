"""Config loading and the CSV formats for trajectories and Legendre tables.

Trajectory CSV: header ``t,q0..q{n-1},v0..v{n-1}`` optionally followed by
``p0..p{n-1},f0..f{n-1}``; one row per node of a uniform time grid.  Numbers
are written with 17 significant digits so a write/read cycle is exact.
"""

from __future__ import annotations

import csv
import io as _io
import json
import os
from pathlib import Path

import numpy as np
import yaml

from .dynamics import PhaseTrajectory
from .errors import ConfigError, InputFormatError
from .trajectory import MIN_GRID_INTERVALS, CovectorCurve, Motion

__all__ = [
    "load_config",
    "format_number",
    "trajectory_rows",
    "write_trajectory_csv",
    "read_trajectory_csv",
    "read_motion_csv",
    "write_table_csv",
    "read_points_csv",
]


def load_config(path) -> dict:
    """Read a JSON or YAML config (chosen by suffix, JSON first otherwise)."""
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {str(path)!r}: {exc.strerror}") from None
    suffix = path.suffix.lower()
    try:
        if suffix == ".json":
            data = json.loads(text)
        elif suffix in (".yaml", ".yml"):
            data = yaml.safe_load(text)
        else:
            try:
                data = json.loads(text)
            except json.JSONDecodeError:
                data = yaml.safe_load(text)
    except (json.JSONDecodeError, yaml.YAMLError) as exc:
        raise ConfigError(f"cannot parse config {str(path)!r}: {exc}") from None
    if not isinstance(data, dict):
        raise ConfigError(f"config {str(path)!r} must contain a mapping")
    return data


def format_number(x: float) -> str:
    return format(float(x), ".17g")


def _header(n: int, phase: bool) -> list[str]:
    cols = ["t"] + [f"q{i}" for i in range(n)] + [f"v{i}" for i in range(n)]
    if phase:
        cols += [f"p{i}" for i in range(n)] + [f"f{i}" for i in range(n)]
    return cols


def trajectory_rows(obj, times=None):
    """Header and rows for a PhaseTrajectory or a Motion.

    ``times`` defaults to the grid nodes; closed-form curves need it.
    """
    phase = isinstance(obj, PhaseTrajectory)
    xi = obj.xi if phase else obj
    if times is None:
        if not xi.is_grid:
            raise ValueError("closed-form curves need explicit sample times")
        times = xi.nodes
    ts = np.asarray(times, dtype=float)
    blocks = [ts[None, :], xi.value(ts), xi.rate(ts)]
    if phase:
        blocks += [obj.pi.value(ts), obj.phi.value(ts)]
    data = np.vstack(blocks).T
    return _header(xi.dim, phase), data


def write_trajectory_csv(target, obj, times=None) -> None:
    """Write to a path or a text stream."""
    header, data = trajectory_rows(obj, times)
    lines = [",".join(header)] + [",".join(format_number(x) for x in row) for row in data]
    text = "\n".join(lines) + "\n"
    if hasattr(target, "write"):
        target.write(text)
    else:
        Path(target).write_text(text)


def _read_table(source):
    if hasattr(source, "read"):
        text = source.read()
        name = getattr(source, "name", "<stream>")
    else:
        name = str(source)
        try:
            text = Path(source).read_text()
        except OSError as exc:
            raise InputFormatError(f"cannot read {name!r}: {exc.strerror}") from None
    rows = [r for r in csv.reader(_io.StringIO(text)) if r and any(c.strip() for c in r)]
    if not rows:
        raise InputFormatError(f"{name}: empty file (0 rows, expected a header and data)")
    header = [c.strip() for c in rows[0]]
    body = rows[1:]
    if not body:
        raise InputFormatError(f"{name}: no data rows (0 rows after the header)")
    try:
        data = np.array([[float(c) for c in r] for r in body], dtype=float)
    except ValueError:
        raise InputFormatError(f"{name}: non-numeric entry in the data rows") from None
    if data.ndim != 2 or data.shape[1] != len(header):
        raise InputFormatError(f"{name}: every row needs {len(header)} columns")
    if not np.all(np.isfinite(data)):
        raise InputFormatError(f"{name}: non-finite entry in the data rows")
    return name, header, data


def _parse_trajectory(source):
    name, header, data = _read_table(source)
    if header[0] != "t":
        raise InputFormatError(f"{name}: first column must be 't'")
    width = len(header) - 1
    if width % 2 == 0 and width % 4 == 0 and header == _header(width // 4, True):
        n, phase = width // 4, True
    elif width % 2 == 0 and header == _header(width // 2, False):
        n, phase = width // 2, False
    else:
        raise InputFormatError(f"{name}: header must be t,q0..,v0.. optionally followed by p0..,f0..")
    rows = data.shape[0]
    if rows < MIN_GRID_INTERVALS + 1:
        raise InputFormatError(f"{name}: {rows} rows; a trajectory needs at least {MIN_GRID_INTERVALS + 1}")
    ts = data[:, 0]
    t0, t1 = ts[0], ts[-1]
    expected = np.linspace(t0, t1, rows)
    if not t1 > t0 or np.max(np.abs(ts - expected)) > 1e-9 * max(1.0, abs(t0), abs(t1)):
        raise InputFormatError(f"{name}: the t column must be increasing and uniformly spaced")
    return name, n, phase, data


def read_motion_csv(source) -> Motion:
    _, n, _, data = _parse_trajectory(source)
    t0, t1 = data[0, 0], data[-1, 0]
    return Motion.from_grid(data[:, 1 : 1 + n], t0, t1, derivatives=data[:, 1 + n : 1 + 2 * n])


def read_trajectory_csv(source) -> PhaseTrajectory:
    """Phase trajectory from a CSV with momentum and force columns.

    The momentum derivative is not stored; it is rebuilt by fourth-order
    finite differences on the grid.
    """
    name, n, phase, data = _parse_trajectory(source)
    if not phase:
        raise InputFormatError(f"{name}: a phase trajectory needs p0..p{n - 1} and f0..f{n - 1} columns")
    t0, t1 = data[0, 0], data[-1, 0]
    xi = Motion.from_grid(data[:, 1 : 1 + n], t0, t1, derivatives=data[:, 1 + n : 1 + 2 * n])
    pi = CovectorCurve.from_grid(data[:, 1 + 2 * n : 1 + 3 * n], t0, t1)
    phi = CovectorCurve.from_grid(data[:, 1 + 3 * n :], t0, t1)
    return PhaseTrajectory(xi, phi, pi)


def write_table_csv(target, header, rows) -> None:
    lines = [",".join(header)] + [",".join(format_number(x) for x in row) for row in rows]
    text = "\n".join(lines) + "\n"
    if hasattr(target, "write"):
        target.write(text)
    else:
        Path(target).write_text(text)


def read_points_csv(source, dim: int) -> tuple[np.ndarray, np.ndarray]:
    """(q, p) samples from a CSV with header q0..q{n-1},p0..p{n-1}."""
    name, header, data = _read_table(source)
    want = [f"q{i}" for i in range(dim)] + [f"p{i}" for i in range(dim)]
    if header != want:
        raise InputFormatError(f"{name}: header must be {','.join(want)}")
    return data[:, :dim], data[:, dim:]


def is_stdout(path) -> bool:
    return path is None or os.fspath(path) == "-"
