"""File formats and atomic writers.

Field snapshots (bit-exact round trip):
    one ASCII header line
        GEOFLOW-FIELD v1 name=<id> Nx=<int> Ny=<int> X=<float> Y=<float> t=<float>
    followed by the raw payload: row-major little-endian float64, Ny+1 rows
    of Nx values.

Time series are plain CSV; floats are written with repr-accurate %.17g so a
re-parse reproduces the exact doubles.
"""

from __future__ import annotations

import os
import tempfile
from dataclasses import dataclass

import numpy as np

MAGIC = "GEOFLOW-FIELD v1"


class SnapshotFormatError(ValueError):
    pass


@dataclass
class Snapshot:
    name: str
    Nx: int
    Ny: int
    X: float
    Y: float
    t: float
    field: np.ndarray


def _atomic_write(path: str, writer) -> None:
    """Write via a temp file in the same directory, then rename."""
    d = os.path.dirname(os.path.abspath(path))
    os.makedirs(d, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=d, prefix=".tmp-geoflow-")
    try:
        with os.fdopen(fd, "wb") as fh:
            writer(fh)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_snapshot(path: str, name: str, field: np.ndarray, X: float, Y: float, t: float) -> None:
    ny1, nx = field.shape

    def writer(fh):
        header = f"{MAGIC} name={name} Nx={nx} Ny={ny1 - 1} X={X!r} Y={Y!r} t={t!r}\n"
        fh.write(header.encode("ascii"))
        fh.write(np.ascontiguousarray(field, dtype="<f8").tobytes())

    _atomic_write(path, writer)


def read_snapshot(path: str) -> Snapshot:
    with open(path, "rb") as fh:
        header = fh.readline().decode("ascii").rstrip("\n")
        payload = fh.read()
    if not header.startswith(MAGIC + " "):
        raise SnapshotFormatError(f"bad magic in {path!r}: {header[:40]!r}")
    fields = {}
    for tok in header[len(MAGIC) + 1 :].split():
        key, _, val = tok.partition("=")
        fields[key] = val
    try:
        name = fields["name"]
        nx = int(fields["Nx"])
        ny = int(fields["Ny"])
        x = float(fields["X"])
        y = float(fields["Y"])
        t = float(fields["t"])
    except (KeyError, ValueError) as exc:
        raise SnapshotFormatError(f"malformed header: {header!r}") from exc
    expect = (ny + 1) * nx * 8
    if len(payload) != expect:
        raise SnapshotFormatError(
            f"payload size mismatch: expected {expect} bytes, found {len(payload)}"
        )
    arr = np.frombuffer(payload, dtype="<f8").reshape(ny + 1, nx).copy()
    return Snapshot(name, nx, ny, x, y, t, arr)


def write_csv(path: str, header: str, rows: list[str]) -> None:
    def writer(fh):
        fh.write((header + "\n").encode("ascii"))
        for row in rows:
            fh.write((row + "\n").encode("ascii"))

    _atomic_write(path, writer)


def format_row(values) -> str:
    return ",".join(f"{v:.17g}" for v in values)


def read_csv(path: str) -> tuple[list[str], np.ndarray]:
    """Parse a numeric CSV written by write_csv; returns (columns, data)."""
    with open(path, "r", encoding="ascii") as fh:
        header = fh.readline().strip()
        if not header:
            raise ValueError(f"empty CSV: {path!r}")
        cols = header.split(",")
        data = []
        for line in fh:
            line = line.strip()
            if line:
                data.append([float(tok) for tok in line.split(",")])
    return cols, np.asarray(data)


def write_report(path: str, pairs: list[tuple[str, object]]) -> None:
    """key: value report lines (machine parseable)."""

    def fmt(v):
        if isinstance(v, float):
            return f"{v:.6f}"
        return str(v)

    def writer(fh):
        for key, val in pairs:
            fh.write(f"{key}: {fmt(val)}\n".encode("ascii"))

    _atomic_write(path, writer)
