"""Publication figures rendered from oscphase run directories.

Consumes only the documented CSV/JSON artifacts written by the CLI
(field CSVs, quiver CSVs, isochron CSVs, manifest JSON); never imports
the solver package.
"""
from .figures import phase_norm, plot_density_current, plot_phase_maps
from .runio import (FIELD_SCHEMA, ISOCHRON_SCHEMA, QUIVER_SCHEMA, FieldData,
                    read_field, read_isochrons, read_manifest, read_quiver)

__all__ = [
    "plot_density_current",
    "plot_phase_maps",
    "phase_norm",
    "read_field",
    "read_quiver",
    "read_isochrons",
    "read_manifest",
    "FieldData",
    "FIELD_SCHEMA",
    "QUIVER_SCHEMA",
    "ISOCHRON_SCHEMA",
]

__version__ = "0.1.0"
