"""Post-processing figures for geoflow run artifacts."""

__version__ = "0.1.0"

from .artifacts import ArtifactError, FieldSnapshot, RunArtifacts
from .plots import plot_field, plot_growth

__all__ = ["ArtifactError", "FieldSnapshot", "RunArtifacts", "plot_field",
           "plot_growth", "__version__"]
