"""Boundary dilation and extraction of transition-relevant path segments."""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy import ndimage

from .coverage import SensorModel, bits_from_bool, bit_indices, footprint_edge, read_bitset_rows, write_bitset_rows
from .floorplan import GridMap
from .pathgen import TrajectorySet


@dataclass(frozen=True)
class FilterConfig:
    """``per_boundary`` applies the run rule separately to each connected boundary
    line with its own band; otherwise one band is dilated around all boundaries."""

    dilation_f_m: float | None = None  # None -> footprint edge of the active sensor
    per_boundary: bool = False

    def __post_init__(self):
        if self.dilation_f_m is not None and self.dilation_f_m < 0:
            raise ValueError("dilation_f_m must be >= 0")

    def resolve(self, sensor: SensorModel) -> float:
        return footprint_edge(sensor) if self.dilation_f_m is None else float(self.dilation_f_m)


@dataclass(frozen=True, eq=False)
class SegmentMatrix:
    """Path matrix P stored per segment.

    ``segments[t]`` is a cell bitset; ``provenance[t]`` is
    ``(trajectory_id, first_index, last_index)`` with an inclusive last index.
    """

    n: int
    segments: tuple
    provenance: tuple
    dilation_f_m: float = 0.0

    @property
    def p(self) -> int:
        return len(self.segments)

    def cells(self, t: int) -> list:
        return bit_indices(self.segments[t])

    def passes(self, i: int, t: int) -> bool:
        return bool(self.segments[t] >> i & 1)

    def to_dense(self) -> np.ndarray:
        """(n, p) uint8 matrix, P[i, t] = 1 when segment t visits cell i."""
        out = np.zeros((self.n, self.p), dtype=np.uint8)
        for t in range(self.p):
            out[self.cells(t), t] = 1
        return out

    def __eq__(self, other):
        if not isinstance(other, SegmentMatrix):
            return NotImplemented
        return (self.n, self.segments, self.provenance) == (other.n, other.segments, other.provenance)

    __hash__ = None

    def save(self, path) -> None:
        path = Path(path)
        write_bitset_rows(path, self.n, range(self.p), self.segments)
        side = {"n": self.n, "p": self.p, "dilation_f_m": self.dilation_f_m,
                "provenance": [list(p) for p in self.provenance]}
        path.with_suffix(".json").write_text(json.dumps(side, separators=(",", ":")) + "\n")

    @classmethod
    def load(cls, path) -> "SegmentMatrix":
        path = Path(path)
        n, _, rows = read_bitset_rows(path)
        side = json.loads(path.with_suffix(".json").read_text())
        return cls(n, tuple(rows), tuple(tuple(p) for p in side["provenance"]), side["dilation_f_m"])


def dilate_boundaries(grid: GridMap, f: float) -> np.ndarray:
    """Flat mask of cells whose center lies within ``f`` m of a boundary-cell center."""
    if f < 0:
        raise ValueError("dilation radius must be >= 0")
    boundary = grid.boundary_mask.reshape(grid.shape)
    if not boundary.any():
        return np.zeros(grid.n, dtype=bool)
    dist = ndimage.distance_transform_edt(~boundary) * grid.cell_size_m
    return dist.ravel() <= f + 1e-9


def split_runs(cells, band: np.ndarray, boundary: np.ndarray):
    """Yield (first, last) index pairs of maximal in-band runs containing a boundary cell."""
    start = None
    touches = False
    for k, c in enumerate(cells):
        if band[c]:
            if start is None:
                start, touches = k, False
            touches = touches or bool(boundary[c])
        elif start is not None:
            if touches:
                yield start, k - 1
            start = None
    if start is not None and touches:
        yield start, len(cells) - 1


def boundary_lines(grid: GridMap) -> list:
    """Flat masks of the 8-connected components of Boundary cells."""
    comp, count = ndimage.label(grid.boundary_mask.reshape(grid.shape), structure=np.ones((3, 3)))
    flat = comp.ravel()
    return [flat == k for k in range(1, count + 1)]


def _line_band(line: np.ndarray, grid: GridMap, f: float) -> np.ndarray:
    dist = ndimage.distance_transform_edt(~line.reshape(grid.shape)) * grid.cell_size_m
    return dist.ravel() <= f + 1e-9


def filter_segments(trajectories: TrajectorySet, grid: GridMap, config: FilterConfig,
                    sensor: SensorModel | None = None) -> SegmentMatrix:
    """Cut trajectories into in-band runs that touch a boundary; build P.

    Segments are ordered by trajectory, then by boundary line, then by
    position along the trajectory.
    """
    f = config.resolve(sensor or SensorModel())
    if config.per_boundary:
        lines = boundary_lines(grid)
        masks = [(_line_band(line, grid, f), line) for line in lines]
    else:
        masks = [(dilate_boundaries(grid, f), grid.boundary_mask)]
    segments, provenance = [], []
    for tid, traj in enumerate(trajectories):
        for band, boundary in masks:
            for a, b in split_runs(traj.cells, band, boundary):
                mask = np.zeros(grid.n, dtype=bool)
                mask[list(traj.cells[a : b + 1])] = True
                segments.append(bits_from_bool(mask))
                provenance.append((tid, a, b))
    return SegmentMatrix(grid.n, tuple(segments), tuple(provenance), f)
