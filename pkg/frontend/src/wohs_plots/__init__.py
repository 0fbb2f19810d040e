"""Render wohs histogram CSV exports as figure panels."""
from wohs_plots.io import HistGrid, MalformedInputError, MarginalSeries
from wohs_plots.render import Panel, PlotJob, build_figure, render

__all__ = [
    "HistGrid",
    "MalformedInputError",
    "MarginalSeries",
    "Panel",
    "PlotJob",
    "build_figure",
    "render",
]
