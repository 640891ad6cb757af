"""Parsing and validation of the experiment CSV schemas.

Two file kinds exist. Sweep files share one fixed header with empty cells
for columns the experiment did not measure, plus optional trailing comment
lines carrying fitted rates. Field dumps are per-vertex (x, y, error)
tables over a full tensor grid.
"""

from dataclasses import dataclass
from pathlib import Path

import numpy as np

SWEEP_HEADER = (
    "h,dofs_primal,dofs_dual,epsilon,gamma,n,delta,"
    "l2_omega,h1_omega,l2_g,h1_g,jump,triple,kappa2,sigma_min"
)
FIELD_HEADER = "x,y,error"

# columns plot_convergence may draw, in display order
ERROR_COLUMNS = ("l2_omega", "h1_omega", "l2_g", "h1_g", "jump", "triple")


class PlotError(ValueError):
    pass


@dataclass(frozen=True)
class SweepData:
    """One sweep CSV: mesh sizes, the populated error columns, and any
    fitted rates found in trailing '# fit_<column> = <value>' comments."""

    label: str
    h: np.ndarray
    series: dict
    fits: dict


@dataclass(frozen=True)
class FieldData:
    """A field dump reshaped onto its tensor grid: values[i, j] is the
    error at (x[j], y[i])."""

    label: str
    x: np.ndarray
    y: np.ndarray
    values: np.ndarray


def _check_header(got, want, path):
    if got == want:
        return
    got_cols = got.split(",")
    want_cols = want.split(",")
    for i, expected in enumerate(want_cols):
        found = got_cols[i] if i < len(got_cols) else "<missing>"
        if found != expected:
            raise PlotError(
                f"{path}: schema mismatch at column {i + 1}: "
                f"expected {expected!r}, found {found!r}"
            )
    raise PlotError(
        f"{path}: schema mismatch: {len(got_cols)} columns, "
        f"expected {len(want_cols)}"
    )


def _read_lines(path):
    text = Path(path).read_text()
    lines = [line for line in text.splitlines() if line.strip()]
    if not lines:
        raise PlotError(f"{path}: file is empty")
    return lines


def read_sweep(path):
    lines = _read_lines(path)
    _check_header(lines[0], SWEEP_HEADER, path)

    rows, fits = [], {}
    for line in lines[1:]:
        if line.startswith("#"):
            parts = line[1:].split("=")
            if len(parts) == 2 and parts[0].strip().startswith("fit_"):
                fits[parts[0].strip()[4:]] = float(parts[1])
            continue
        cells = line.split(",")
        if len(cells) != len(SWEEP_HEADER.split(",")):
            raise PlotError(f"{path}: row has {len(cells)} cells: {line!r}")
        rows.append(cells)
    if not rows:
        raise PlotError(f"{path}: no data rows")

    names = SWEEP_HEADER.split(",")
    columns = {name: [row[i] for row in rows] for i, name in enumerate(names)}
    try:
        h = np.array([float(c) for c in columns["h"]])
    except ValueError as err:
        raise PlotError(f"{path}: bad h cell: {err}") from err
    if np.any(h <= 0):
        raise PlotError(f"{path}: mesh sizes must be positive")

    series = {}
    for name in ERROR_COLUMNS:
        cells = columns[name]
        filled = [c != "" for c in cells]
        if not any(filled):
            continue
        if not all(filled):
            raise PlotError(
                f"{path}: column {name!r} is only partially populated"
            )
        series[name] = np.array([float(c) for c in cells])
    if not series:
        raise PlotError(f"{path}: no populated error columns")
    return SweepData(label=Path(path).stem, h=h, series=series, fits=fits)


def read_field(path):
    lines = _read_lines(path)
    _check_header(lines[0], FIELD_HEADER, path)
    data = [line for line in lines[1:] if not line.startswith("#")]
    if not data:
        raise PlotError(f"{path}: no data rows")
    try:
        table = np.array([[float(c) for c in line.split(",")] for line in data])
    except ValueError as err:
        raise PlotError(f"{path}: bad cell: {err}") from err
    if table.shape[1] != 3:
        raise PlotError(f"{path}: rows must be x,y,error triples")

    x = np.unique(table[:, 0])
    y = np.unique(table[:, 1])
    if len(x) * len(y) != len(table):
        raise PlotError(
            f"{path}: {len(table)} points do not fill the "
            f"{len(x)} x {len(y)} grid"
        )
    values = np.full((len(y), len(x)), np.nan)
    cols = np.searchsorted(x, table[:, 0])
    rows = np.searchsorted(y, table[:, 1])
    values[rows, cols] = table[:, 2]
    if np.isnan(values).any():
        raise PlotError(f"{path}: duplicate points leave grid holes")
    return FieldData(label=Path(path).stem, x=x, y=y, values=values)
