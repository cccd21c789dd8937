"""Ceiling ToF sensor model and the floor-cell / candidate-cell visibility matrix.

Bitsets are plain Python ints: bit ``i`` set means floor cell ``i``.
"""

from __future__ import annotations

import json
import math
import struct
import warnings
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from .errors import InvalidPlacementCell
from .floorplan import CellLabel, GridMap, validate_grid_step

_EPS = 1e-9


@dataclass(frozen=True)
class SensorModel:
    ceiling_height_m: float = 2.5
    diagonal_fov_deg: float = 60.0
    min_range_m: float = 0.05
    max_range_m: float = 4.0
    obstacle_height_m: float = 1.2

    def __post_init__(self):
        if not 0 < self.diagonal_fov_deg < 180:
            raise ValueError(f"diagonal_fov_deg must lie in (0, 180), got {self.diagonal_fov_deg}")
        if not 0 < self.ceiling_height_m <= self.max_range_m:
            raise ValueError("need 0 < ceiling_height_m <= max_range_m")
        if not self.min_range_m < self.ceiling_height_m:
            raise ValueError("need min_range_m < ceiling_height_m")


def footprint_edge(sensor: SensorModel) -> float:
    """Edge length (m) of the square floor footprint of a downward sensor.

    The footprint diagonal is the chord subtended by the diagonal FOV at the
    floor: ``2 h tan(fov / 2)``.
    """
    return 2.0 * sensor.ceiling_height_m * math.tan(math.radians(sensor.diagonal_fov_deg) / 2.0) / math.sqrt(2.0)


def bits_from_bool(mask) -> int:
    packed = np.packbits(np.asarray(mask, dtype=bool), bitorder="little")
    return int.from_bytes(packed.tobytes(), "little")


def bool_from_bits(bits: int, n: int) -> np.ndarray:
    raw = bits.to_bytes((n + 7) // 8, "little")
    return np.unpackbits(np.frombuffer(raw, dtype=np.uint8), bitorder="little")[:n].astype(bool)


def bit_indices(bits: int) -> list:
    out = []
    while bits:
        low = bits & -bits
        out.append(low.bit_length() - 1)
        bits ^= low
    return out


@dataclass(frozen=True, eq=False)
class CoverageMatrix:
    """Per-candidate visibility bitsets: ``rows[r]`` covers floor cells seen from ``candidates[r]``."""

    n: int
    candidates: tuple
    rows: tuple

    def __post_init__(self):
        object.__setattr__(self, "_pos", {c: r for r, c in enumerate(self.candidates)})

    def row_of(self, cell: int) -> int:
        try:
            return self.rows[self._pos[int(cell)]]
        except KeyError:
            raise InvalidPlacementCell(f"cell {cell} is not a sensor candidate") from None

    def __contains__(self, cell) -> bool:
        return int(cell) in self._pos

    def visible(self, i: int, j: int) -> bool:
        """G(i, j): floor cell i seen from candidate j."""
        return j in self._pos and bool(self.rows[self._pos[j]] >> i & 1)

    def to_dense(self) -> np.ndarray:
        """(n, n) uint8 matrix with G[i, j] = 1; non-candidate columns are zero."""
        g = np.zeros((self.n, self.n), dtype=np.uint8)
        for j, bits in zip(self.candidates, self.rows):
            g[:, j] = bool_from_bits(bits, self.n)
        return g

    def __eq__(self, other):
        if not isinstance(other, CoverageMatrix):
            return NotImplemented
        return (self.n, self.candidates, self.rows) == (other.n, other.candidates, other.rows)

    __hash__ = None


def _segment_hits_boxes(p0, p1, lo, hi):
    """Liang-Barsky clip of segment p0->p1 against closed axis-aligned boxes.

    p0, p1: (..., 2) broadcastable; lo, hi: (..., 2). Returns (hit, t_exit).
    Touching a box corner or edge counts as a hit.
    """
    d = p1 - p0
    t0 = np.zeros(np.broadcast_shapes(p0.shape, p1.shape, lo.shape)[:-1])
    t1 = np.ones_like(t0)
    hit = np.ones_like(t0, dtype=bool)
    for axis in (0, 1):
        da = np.broadcast_to(d[..., axis], t0.shape)
        pa = np.broadcast_to(p0[..., axis], t0.shape)
        la = np.broadcast_to(lo[..., axis], t0.shape)
        ha = np.broadcast_to(hi[..., axis], t0.shape)
        flat = np.abs(da) < _EPS
        hit &= ~(flat & ((pa < la - _EPS) | (pa > ha + _EPS)))
        with np.errstate(divide="ignore", invalid="ignore"):
            ta = np.where(flat, -np.inf, (la - pa) / da)
            tb = np.where(flat, np.inf, (ha - pa) / da)
        t0 = np.maximum(t0, np.minimum(ta, tb))
        t1 = np.minimum(t1, np.maximum(ta, tb))
    hit &= t0 <= t1 + _EPS
    return hit, t1


def candidate_visibility(grid: GridMap, sensor: SensorModel, j: int) -> np.ndarray:
    """Flat indices of floor cells always visible from a sensor over cell ``j``."""
    s = grid.cell_size_m
    h = sensor.ceiling_height_m
    half = footprint_edge(sensor) / 2.0
    H, W = grid.shape
    rj, cj = grid.rowcol(j)
    reach = int(math.floor(half / s + _EPS))
    r_lo, r_hi = max(0, rj - reach), min(H - 1, rj + reach)
    c_lo, c_hi = max(0, cj - reach), min(W - 1, cj + reach)
    rr, cc = np.mgrid[r_lo : r_hi + 1, c_lo : c_hi + 1]
    rr, cc = rr.ravel(), cc.ravel()
    dx, dy = (cc - cj) * s, (rr - rj) * s
    inside = (np.abs(dx) <= half + _EPS) & (np.abs(dy) <= half + _EPS)
    slant = np.sqrt(dx * dx + dy * dy + h * h)
    inside &= (slant >= sensor.min_range_m - _EPS) & (slant <= sensor.max_range_m + _EPS)
    labels = grid.labels[rr, cc]
    inside &= labels != CellLabel.WALL
    rr, cc, labels_in = rr[inside], cc[inside], labels[inside]

    win = grid.labels[r_lo : r_hi + 1, c_lo : c_hi + 1]
    occ = np.argwhere((win == CellLabel.WALL) | (win == CellLabel.OBSTACLE))
    if len(rr) == 0 or len(occ) == 0:
        return rr * W + cc
    orr, occ_c = occ[:, 0] + r_lo, occ[:, 1] + c_lo
    is_wall = grid.labels[orr, occ_c] == CellLabel.WALL

    p0 = np.array([(cj + 0.5) * s, (rj + 0.5) * s])[None, None, :]
    p1 = np.column_stack([(cc + 0.5) * s, (rr + 0.5) * s])[:, None, :]
    lo = np.column_stack([occ_c * s, orr * s])[None, :, :]
    hit, t_exit = _segment_hits_boxes(p0, p1, lo, lo + s)
    same = (orr[None, :] == rr[:, None]) & (occ_c[None, :] == cc[:, None])
    hit &= ~same  # the target cell itself never occludes its own floor point
    ray_height = h * (1.0 - t_exit)
    blocked = hit & (is_wall[None, :] | (ray_height <= sensor.obstacle_height_m + _EPS))
    keep = ~blocked.any(axis=1)
    return rr[keep] * W + cc[keep]


def build_coverage_matrix(grid: GridMap, sensor: SensorModel) -> CoverageMatrix:
    report = validate_grid_step(grid, sensor)
    if not report.ok:
        warnings.warn(str(report), stacklevel=2)
    candidates = tuple(int(j) for j in np.flatnonzero(grid.flat_labels != CellLabel.WALL))
    rows = []
    for j in candidates:
        mask = np.zeros(grid.n, dtype=bool)
        mask[candidate_visibility(grid, sensor, j)] = True
        rows.append(bits_from_bool(mask))
    return CoverageMatrix(grid.n, candidates, tuple(rows))


def covered_cells(G: CoverageMatrix, placement) -> np.ndarray:
    """Boolean vector y with y[i] set iff some placed sensor sees cell i."""
    bits = 0
    for cell in placement:
        bits |= G.row_of(cell)
    return bool_from_bits(bits, G.n)


# -- binary serialization (shared with the segment matrix) ------------------

_MAGIC = b"ZPBS"


def write_bitset_rows(path, n: int, ids, rows) -> None:
    nbytes = (n + 7) // 8
    with open(path, "wb") as fh:
        fh.write(_MAGIC + struct.pack("<IQQ", 1, n, len(rows)))
        for ident, bits in zip(ids, rows):
            fh.write(struct.pack("<Q", int(ident)))
            fh.write(int(bits).to_bytes(nbytes, "little"))


def read_bitset_rows(path):
    data = Path(path).read_bytes()
    if data[:4] != _MAGIC:
        raise ValueError(f"{path}: not a bitset-row file")
    _, n, count = struct.unpack_from("<IQQ", data, 4)
    nbytes = (n + 7) // 8
    off = 4 + struct.calcsize("<IQQ")
    ids, rows = [], []
    for _ in range(count):
        (ident,) = struct.unpack_from("<Q", data, off)
        off += 8
        rows.append(int.from_bytes(data[off : off + nbytes], "little"))
        off += nbytes
        ids.append(int(ident))
    return n, ids, rows


def save_coverage(G: CoverageMatrix, path, sensor: SensorModel, grid: GridMap | None = None) -> None:
    path = Path(path)
    write_bitset_rows(path, G.n, G.candidates, G.rows)
    side = {"n": G.n, "candidates": len(G.candidates), "sensor": asdict(sensor)}
    if grid is not None:
        side.update(width_cells=grid.width_cells, height_cells=grid.height_cells, cell_size_m=grid.cell_size_m)
    path.with_suffix(".json").write_text(json.dumps(side, indent=2, sort_keys=True) + "\n")


def load_coverage(path) -> CoverageMatrix:
    n, ids, rows = read_bitset_rows(path)
    return CoverageMatrix(n, tuple(ids), tuple(rows))
