"""Readers for geoflow run artifacts.

These scripts consume files only; no solver code is imported.  Formats:

* time series: CSV with header
      t,energy,enstrophy,pert_enstrophy,circulation,H2,p_norm
* field snapshots: one ASCII header line
      GEOFLOW-FIELD v1 name=<id> Nx=<int> Ny=<int> X=<float> Y=<float> t=<float>
  followed by row-major little-endian float64, Ny+1 rows of Nx values.
* reports: `key: value` lines (conditions.txt, design.txt).
"""

from __future__ import annotations

import hashlib
import os
from dataclasses import dataclass, field

import numpy as np

MAGIC = "GEOFLOW-FIELD v1"
TIMESERIES_COLUMNS = ["t", "energy", "enstrophy", "pert_enstrophy",
                      "circulation", "H2", "p_norm"]


class ArtifactError(ValueError):
    pass


@dataclass
class FieldSnapshot:
    name: str
    Nx: int
    Ny: int
    X: float
    Y: float
    t: float
    field: np.ndarray


@dataclass
class RunArtifacts:
    """One run directory: time series, optional snapshots and reports."""

    timeseries_path: str
    snapshot_paths: list[str] = field(default_factory=list)
    report_path: str | None = None
    config_path: str | None = None
    label: str = ""

    @classmethod
    def from_directory(cls, path: str, label: str = "") -> "RunArtifacts":
        ts = os.path.join(path, "timeseries.csv")
        if not os.path.exists(ts):
            raise ArtifactError(f"no timeseries.csv in {path!r}")
        snaps = sorted(
            os.path.join(path, p) for p in os.listdir(path) if p.endswith(".field")
        )
        report = os.path.join(path, "conditions.txt")
        config = os.path.join(path, "config-used.cfg")
        return cls(
            timeseries_path=ts,
            snapshot_paths=snaps,
            report_path=report if os.path.exists(report) else None,
            config_path=config if os.path.exists(config) else None,
            label=label or os.path.basename(os.path.normpath(path)),
        )

    def config_hash(self) -> str:
        """Short hash of the generating config (falls back to the series file)."""
        src = self.config_path or self.timeseries_path
        digest = hashlib.sha256(open(src, "rb").read()).hexdigest()
        return digest[:12]


def read_timeseries(path: str) -> dict[str, np.ndarray]:
    with open(path, "r", encoding="ascii") as fh:
        header = fh.readline().strip()
        if not header:
            raise ArtifactError(f"empty CSV: {path!r}")
        cols = header.split(",")
        if cols != TIMESERIES_COLUMNS:
            raise ArtifactError(
                f"schema mismatch in {path!r}: expected {TIMESERIES_COLUMNS}, got {cols}"
            )
        rows = []
        for line in fh:
            line = line.strip()
            if line:
                rows.append([float(tok) for tok in line.split(",")])
    if not rows:
        raise ArtifactError(f"no data rows in {path!r}")
    data = np.asarray(rows)
    return {name: data[:, i] for i, name in enumerate(cols)}


def read_snapshot(path: str) -> FieldSnapshot:
    with open(path, "rb") as fh:
        header = fh.readline().decode("ascii").rstrip("\n")
        payload = fh.read()
    if not header.startswith(MAGIC + " "):
        raise ArtifactError(f"bad magic in {path!r}: {header[:40]!r}")
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
        raise ArtifactError(f"malformed header in {path!r}: {header!r}") from exc
    expect = (ny + 1) * nx * 8
    if len(payload) != expect:
        raise ArtifactError(
            f"payload size mismatch in {path!r}: expected {expect} bytes, "
            f"found {len(payload)}"
        )
    arr = np.frombuffer(payload, dtype="<f8").reshape(ny + 1, nx)
    return FieldSnapshot(name, nx, ny, x, y, t, arr)


def read_report(path: str) -> dict[str, str]:
    out = {}
    with open(path, "r", encoding="ascii") as fh:
        for line in fh:
            key, sep, val = line.partition(":")
            if sep:
                out[key.strip()] = val.strip()
    return out
