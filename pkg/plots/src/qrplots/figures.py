"""Figure rendering.

Everything draws through matplotlib Figure objects directly (no pyplot
state), with fixed sizes and fonts, so a given CSV renders to the same
image every time. Functions return the parsed data they plotted, which is
what the tests compare against the files.
"""

import math

import numpy as np
from matplotlib.backends.backend_agg import FigureCanvasAgg
from matplotlib.figure import Figure

from .reader import ERROR_COLUMNS, PlotError, read_field, read_sweep

PANEL_SIZE = (4.2, 3.4)
DPI = 150

_STYLES = {
    "l2_omega": dict(color="tab:blue", marker="o", ls="-"),
    "h1_omega": dict(color="tab:red", marker="s", ls="-"),
    "l2_g": dict(color="tab:blue", marker="o", ls="--"),
    "h1_g": dict(color="tab:red", marker="s", ls="--"),
    "jump": dict(color="tab:green", marker="^", ls=":"),
    "triple": dict(color="tab:purple", marker="v", ls=":"),
}


def _save(fig, out_path):
    FigureCanvasAgg(fig)
    fig.savefig(out_path, dpi=DPI)


def _slope_guides(ax, h, anchor):
    """Dashed h^1 and h^2 reference lines through the coarsest point."""
    h0 = h.max()
    for slope, style in ((1, "--"), (2, ":")):
        ax.loglog(
            np.sort(h),
            anchor * (np.sort(h) / h0) ** slope,
            style,
            color="0.6",
            lw=0.8,
            label=f"$h^{slope}$",
        )


def plot_convergence(csv_paths, out_path):
    """Log-log error curves, one panel per CSV; returns the parsed data."""
    if not csv_paths:
        raise PlotError("no CSV paths given")
    data = [read_sweep(p) for p in csv_paths]

    ncols = 1 if len(data) == 1 else 2
    nrows = math.ceil(len(data) / ncols)
    fig = Figure(
        figsize=(PANEL_SIZE[0] * ncols, PANEL_SIZE[1] * nrows),
        constrained_layout=True,
    )
    axes = fig.subplots(nrows, ncols, squeeze=False)

    for idx, sweep in enumerate(data):
        ax = axes[idx // ncols][idx % ncols]
        anchor = None
        for name in ERROR_COLUMNS:
            if name not in sweep.series:
                continue
            vals = sweep.series[name]
            label = name
            if name in sweep.fits:
                label += f" (fit {sweep.fits[name]:.2f})"
            ax.loglog(sweep.h, vals, label=label, ms=4, **_STYLES[name])
            if anchor is None:
                anchor = vals[np.argmax(sweep.h)]
        _slope_guides(ax, sweep.h, anchor)
        ax.set_title(sweep.label, fontsize=10)
        ax.set_xlabel("$h$")
        ax.set_ylabel("error")
        ax.grid(True, which="both", alpha=0.25)
        ax.legend(fontsize=7)
    for idx in range(len(data), nrows * ncols):
        axes[idx // ncols][idx % ncols].set_axis_off()

    _save(fig, out_path)
    return data


def color_range(values):
    """Symmetric range around zero; a constant-zero field falls back to
    [-1, 1] rather than a degenerate [0, 0] scale."""
    peak = float(np.abs(values).max())
    if peak == 0.0:
        peak = 1.0
    return -peak, peak


def plot_field(dump_path, out_path):
    """Heatmap of one field dump with its own color scale; returns the
    parsed grid."""
    field = read_field(dump_path)
    vmin, vmax = color_range(field.values)

    fig = Figure(figsize=PANEL_SIZE, constrained_layout=True)
    ax = fig.subplots()
    mesh = ax.pcolormesh(
        field.x, field.y, field.values, cmap="RdBu_r", vmin=vmin, vmax=vmax,
        shading="nearest",
    )
    ax.set_aspect("equal")
    ax.set_title(field.label, fontsize=10)
    ax.set_xlabel("$x$")
    ax.set_ylabel("$y$")
    fig.colorbar(mesh, ax=ax)

    _save(fig, out_path)
    return field
