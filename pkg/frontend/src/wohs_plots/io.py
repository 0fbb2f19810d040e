"""Readers for the histogram CSV formats the wohs CLI exports.

Two shapes exist: the 2-D grid (bin_x_lo, bin_x_hi, bin_y_lo, bin_y_hi,
count) and the 1-D marginal (bin_lo, bin_hi, count). Everything here
only validates and reshapes; no statistic is ever recomputed from the
numbers, so a malformed file is a hard error rather than something to
patch over.
"""
from __future__ import annotations

import csv
import os
from dataclasses import dataclass

import numpy as np

GRID_HEADER = ["bin_x_lo", "bin_x_hi", "bin_y_lo", "bin_y_hi", "count"]
MARGINAL_HEADER = ["bin_lo", "bin_hi", "count"]


class MalformedInputError(Exception):
    """Input file absent, unreadable, or not a documented CSV shape."""


@dataclass(frozen=True)
class HistGrid:
    """2-D histogram: counts[i, j] sits in x bin i, y bin j."""

    x_edges: np.ndarray
    y_edges: np.ndarray
    counts: np.ndarray

    @property
    def total(self) -> int:
        return int(self.counts.sum())


@dataclass(frozen=True)
class MarginalSeries:
    edges: np.ndarray
    counts: np.ndarray
    label: str


def _read_rows(path: str, header: list) -> list:
    if not os.path.isfile(path):
        raise MalformedInputError(f"no such file: {path}")
    try:
        with open(path, newline="") as fh:
            rows = list(csv.reader(fh))
    except OSError as exc:
        raise MalformedInputError(f"cannot read {path}: {exc}") from exc
    except csv.Error as exc:
        raise MalformedInputError(f"bad CSV in {path}: {exc}") from exc
    rows = [r for r in rows if r]
    if not rows or rows[0] != header:
        raise MalformedInputError(
            f"{path}: expected header {','.join(header)}")
    if len(rows) == 1:
        raise MalformedInputError(f"{path}: no data rows")
    out = []
    for i, row in enumerate(rows[1:], start=2):
        if len(row) != len(header):
            raise MalformedInputError(f"{path}: row {i} has {len(row)} "
                                      f"fields, expected {len(header)}")
        try:
            out.append([float(v) for v in row])
        except ValueError as exc:
            raise MalformedInputError(f"{path}: row {i}: {exc}") from exc
    return out


def _edges_from_pairs(lo: np.ndarray, hi: np.ndarray,
                      path: str) -> np.ndarray:
    edges = np.unique(np.concatenate([lo, hi]))
    # every low edge must be followed by its high edge one slot later
    idx_lo = np.searchsorted(edges, lo)
    idx_hi = np.searchsorted(edges, hi)
    if not (np.take(edges, idx_lo) == lo).all() or \
            not (np.take(edges, idx_hi) == hi).all() or \
            not (idx_hi == idx_lo + 1).all():
        raise MalformedInputError(f"{path}: bins are not a contiguous grid")
    return edges


def read_hist_grid(path: str) -> HistGrid:
    """Parse a 2-D histogram CSV into edges and a dense count grid."""
    data = np.array(_read_rows(path, GRID_HEADER))
    x_edges = _edges_from_pairs(data[:, 0], data[:, 1], path)
    y_edges = _edges_from_pairs(data[:, 2], data[:, 3], path)
    nx, ny = len(x_edges) - 1, len(y_edges) - 1
    if len(data) != nx * ny:
        raise MalformedInputError(
            f"{path}: {len(data)} rows do not fill a {nx}x{ny} grid")
    counts = np.full((nx, ny), -1.0)
    ix = np.searchsorted(x_edges, data[:, 0])
    iy = np.searchsorted(y_edges, data[:, 2])
    counts[ix, iy] = data[:, 4]
    if (counts < 0).any():
        raise MalformedInputError(f"{path}: duplicate or missing grid cells")
    return HistGrid(x_edges, y_edges, counts)


def read_marginal(path: str, label: str = "") -> MarginalSeries:
    """Parse a 1-D marginal CSV; bins must be adjacent and increasing."""
    data = np.array(_read_rows(path, MARGINAL_HEADER))
    lo, hi, counts = data[:, 0], data[:, 1], data[:, 2]
    if not ((hi > lo).all() and (lo[1:] == hi[:-1]).all()):
        raise MalformedInputError(f"{path}: bins are not contiguous")
    edges = np.append(lo, hi[-1])
    name = label or os.path.splitext(os.path.basename(path))[0]
    return MarginalSeries(edges, counts, name)
