"""Static figures from run artifacts.

Every figure carries the generating config hash in its caption and PNG
metadata; nothing is recomputed from physics, only rendered.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .artifacts import RunArtifacts, read_report, read_snapshot, read_timeseries


def _save(fig, out: str, hashes: list[str]):
    tag = "config " + "+".join(hashes) if hashes else "no config hash"
    fig.text(0.01, 0.01, tag, fontsize=6, color="gray")
    meta = {"geoflow-config-hash": "+".join(hashes)} if out.endswith(".png") else None
    fig.savefig(out, dpi=150, metadata=meta)
    plt.close(fig)


def plot_growth(runs: list[RunArtifacts], out: str) -> str:
    """Log-scale perturbation-enstrophy curves, one per run, with the
    a-priori enstrophy bound drawn when a run's report carries one."""
    if not runs:
        raise ValueError("need at least one run")
    fig, ax = plt.subplots(figsize=(7, 4.5))
    hashes = []
    for run in runs:
        series = read_timeseries(run.timeseries_path)
        ax.semilogy(series["t"], series["pert_enstrophy"], label=run.label or None)
        hashes.append(run.config_hash())
        if run.report_path:
            rep = read_report(run.report_path)
            if "enstrophy_bound" in rep:
                try:
                    bound = float(rep["enstrophy_bound"])
                except ValueError:
                    bound = None
                if bound and bound > 0:
                    ax.axhline(bound, color="k", linestyle="--", linewidth=1,
                               label=f"{run.label} bound")
    ax.set_xlabel("t")
    ax.set_ylabel("perturbation enstrophy")
    ax.legend(loc="best", fontsize=8)
    ax.grid(True, which="both", alpha=0.3)
    _save(fig, out, hashes)
    return out


def plot_field(snapshot_path: str, out: str, config_hash: str = "") -> str:
    """Heatmap of a field snapshot with the physical aspect ratio and axis
    ranges taken from the header."""
    snap = read_snapshot(snapshot_path)
    lx = snap.X * np.pi
    ly = snap.Y * np.pi
    fig, ax = plt.subplots(figsize=(7, max(2.5, 7 * ly / lx)))
    im = ax.imshow(
        snap.field,
        origin="lower",
        extent=(0.0, lx, 0.0, ly),
        aspect="equal",
        cmap="RdBu_r",
    )
    fig.colorbar(im, ax=ax, label=snap.name)
    ax.set_xlabel("x")
    ax.set_ylabel("y")
    ax.set_title(f"{snap.name} at t = {snap.t:g}")
    _save(fig, out, [config_hash] if config_hash else [])
    return out
