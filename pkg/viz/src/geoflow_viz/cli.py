"""Entry points: plot-growth and plot-field."""

from __future__ import annotations

import argparse
import sys

from .artifacts import ArtifactError, RunArtifacts
from .plots import plot_field, plot_growth


def plot_growth_main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="plot-growth",
        description="Perturbation-enstrophy growth curves from run directories.",
    )
    parser.add_argument("runs", nargs="+", help="run output directories")
    parser.add_argument("--out", default="growth.png")
    parser.add_argument("--labels", help="comma-separated curve labels")
    args = parser.parse_args(argv)
    labels = args.labels.split(",") if args.labels else [""] * len(args.runs)
    try:
        arts = [RunArtifacts.from_directory(d, lbl)
                for d, lbl in zip(args.runs, labels)]
        path = plot_growth(arts, args.out)
    except (ArtifactError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    print(f"wrote {path}")
    return 0


def plot_field_main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="plot-field", description="Heatmap of a GEOFLOW-FIELD snapshot."
    )
    parser.add_argument("snapshot")
    parser.add_argument("--out", default="field.png")
    parser.add_argument("--config-hash", default="")
    args = parser.parse_args(argv)
    try:
        path = plot_field(args.snapshot, args.out, args.config_hash)
    except (ArtifactError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    print(f"wrote {path}")
    return 0
