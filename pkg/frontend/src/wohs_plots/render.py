"""Figure panels built from pre-binned histogram CSVs.

Three panels: the 2-D joint histogram with the slab extent and an
optional start-point marker, step-outline overlays of 1-D marginals,
and a 3-D bar rendering of the joint grid. Counts are drawn exactly as
read; axis limits come from the bin edges, never from matplotlib's
autoscaling, so the image ranges always match the CSV.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from enum import Enum
from typing import Optional, Tuple

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from wohs_plots.io import read_hist_grid, read_marginal

# pinned so re-rendering identical inputs gives identical bytes
STYLE = {
    "figure.dpi": 100,
    "savefig.dpi": 100,
    "font.family": "DejaVu Sans",
    "font.size": 10.0,
    "axes.titlesize": 11.0,
    "svg.hashsalt": "wohs-plots",
    "path.simplify": False,
}

SLAB = (-1.0, 1.0)


class Panel(Enum):
    JOINT = "joint"
    MARGINAL_STEPS = "marginal-steps"
    HIST3D = "hist3d"


@dataclass(frozen=True)
class PlotJob:
    """One render request: input CSVs, panel kind, output image path."""

    inputs: Tuple[str, ...]
    panel: Panel
    out: str
    labels: Tuple[str, ...] = ()
    start: Optional[Tuple[float, float]] = None
    title: str = ""

    def __post_init__(self):
        if not self.inputs:
            raise ValueError("PlotJob needs at least one input CSV")
        if self.panel is not Panel.MARGINAL_STEPS and len(self.inputs) != 1:
            raise ValueError(
                f"{self.panel.value} panel takes exactly one input CSV")
        if self.labels and len(self.labels) != len(self.inputs):
            raise ValueError("labels must match inputs one to one")


def _warn_if_empty(total: int, path: str) -> None:
    if total == 0:
        warnings.warn(f"{path} has no counts; rendering a blank panel",
                      stacklevel=3)


def _joint(fig, job: PlotJob):
    grid = read_hist_grid(job.inputs[0])
    _warn_if_empty(grid.total, job.inputs[0])
    ax = fig.add_subplot(111)
    mesh = ax.pcolormesh(grid.x_edges, grid.y_edges, grid.counts.T,
                         cmap="viridis", vmin=0.0,
                         vmax=max(float(grid.counts.max()), 1.0))
    fig.colorbar(mesh, ax=ax, label="count")
    for edge in SLAB:
        ax.axvline(edge, color="white", linewidth=0.8, linestyle="--")
    if job.start is not None:
        ax.plot([job.start[0]], [job.start[1]], marker="o", color="green",
                markersize=6, markeredgecolor="black", zorder=5)
    ax.set_xlim(grid.x_edges[0], grid.x_edges[-1])
    ax.set_ylim(grid.y_edges[0], grid.y_edges[-1])
    ax.set_xlabel("first coordinate")
    ax.set_ylabel("transverse coordinate")


def _marginal_steps(fig, job: PlotJob):
    ax = fig.add_subplot(111)
    lo, hi = np.inf, -np.inf
    total = 0
    for i, path in enumerate(job.inputs):
        label = job.labels[i] if job.labels else ""
        series = read_marginal(path, label)
        ax.stairs(series.counts, series.edges, label=series.label,
                  linewidth=1.2)
        lo, hi = min(lo, series.edges[0]), max(hi, series.edges[-1])
        total += int(series.counts.sum())
    _warn_if_empty(total, ", ".join(job.inputs))
    ax.set_xlim(lo, hi)
    ax.set_ylim(bottom=0)
    ax.set_xlabel("transverse coordinate")
    ax.set_ylabel("count")
    ax.legend(loc="upper right")


def _hist3d(fig, job: PlotJob):
    grid = read_hist_grid(job.inputs[0])
    _warn_if_empty(grid.total, job.inputs[0])
    ax = fig.add_subplot(111, projection="3d")
    xs = grid.x_edges[:-1]
    ys = grid.y_edges[:-1]
    xpos, ypos = np.meshgrid(xs, ys, indexing="ij")
    dz = grid.counts.ravel()
    keep = dz > 0
    if keep.any():
        dx = np.repeat(np.diff(grid.x_edges), len(ys))[keep]
        dy = np.tile(np.diff(grid.y_edges), len(xs))[keep]
        ax.bar3d(xpos.ravel()[keep], ypos.ravel()[keep],
                 np.zeros(int(keep.sum())), dx, dy, dz[keep],
                 color="tab:blue", shade=True)
    ax.set_xlim(grid.x_edges[0], grid.x_edges[-1])
    ax.set_ylim(grid.y_edges[0], grid.y_edges[-1])
    ax.set_xlabel("first coordinate")
    ax.set_ylabel("transverse coordinate")
    ax.set_zlabel("count")


_PANELS = {
    Panel.JOINT: _joint,
    Panel.MARGINAL_STEPS: _marginal_steps,
    Panel.HIST3D: _hist3d,
}


def build_figure(job: PlotJob):
    """Build the panel as a Figure without writing it anywhere."""
    with plt.rc_context(STYLE):
        fig = plt.figure(figsize=(6.4, 4.8))
        try:
            _PANELS[job.panel](fig, job)
            if job.title:
                fig.suptitle(job.title)
        except Exception:
            plt.close(fig)
            raise
        return fig


def render(job: PlotJob) -> None:
    """Render the job to its output path (format from the extension)."""
    fig = build_figure(job)
    try:
        with plt.rc_context(STYLE):
            fig.savefig(job.out)
    finally:
        plt.close(fig)
