"""Figures from qrfem experiment CSVs.

This package reads the documented CSV schemas only; it never imports the
solver, so the experiment pipeline runs with or without it.
"""

from .reader import (
    ERROR_COLUMNS,
    FIELD_HEADER,
    SWEEP_HEADER,
    FieldData,
    PlotError,
    SweepData,
    read_field,
    read_sweep,
)
from .figures import color_range, plot_convergence, plot_field

__all__ = [
    "ERROR_COLUMNS",
    "FIELD_HEADER",
    "SWEEP_HEADER",
    "FieldData",
    "PlotError",
    "SweepData",
    "color_range",
    "plot_convergence",
    "plot_field",
    "read_field",
    "read_sweep",
]
