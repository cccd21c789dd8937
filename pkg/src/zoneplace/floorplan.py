"""Floor-plan ingestion: annotated raster or ASCII grid -> labeled uniform grid.

Cells are indexed row-major, ``i = row * width + col``; row 0 is the top of
the image. Cell centers sit at ``((col + 0.5) * s, (row + 0.5) * s)`` meters.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from enum import IntEnum
from pathlib import Path

import numpy as np
from scipy import ndimage

from .errors import EmptyImage, FloorplanError, NonPositiveScale, RegionOutOfRange, UnknownColor


class CellLabel(IntEnum):
    WALKABLE = 0
    WALL = 1
    OBSTACLE = 2
    DOORWAY = 3
    INTEREST = 4
    BOUNDARY = 5


# Majority ties resolve toward blocking / critical labels first.
TIE_PRIORITY = (
    CellLabel.WALL,
    CellLabel.OBSTACLE,
    CellLabel.BOUNDARY,
    CellLabel.DOORWAY,
    CellLabel.INTEREST,
    CellLabel.WALKABLE,
)

WALKABLE_LABELS = (CellLabel.WALKABLE, CellLabel.DOORWAY, CellLabel.INTEREST, CellLabel.BOUNDARY)

ASCII_CODES = {
    CellLabel.WALL: "#",
    CellLabel.OBSTACLE: "o",
    CellLabel.DOORWAY: "d",
    CellLabel.INTEREST: "i",
    CellLabel.BOUNDARY: "b",
    CellLabel.WALKABLE: ".",
}
_CODE_TO_LABEL = {v: k for k, v in ASCII_CODES.items()}


@dataclass(frozen=True)
class Palette:
    """RGB color -> label mapping with a per-channel match tolerance."""

    colors: dict
    tolerance: int = 16

    def __post_init__(self):
        labels = list(self.colors.values())
        if len(set(labels)) != len(labels):
            raise ValueError("palette must map each label from exactly one color")
        if len(set(self.colors)) != len(self.colors):
            raise ValueError("palette colors must be distinct")

    def classify(self, image: np.ndarray) -> np.ndarray:
        """Map an (H, W, 3) RGB array to an (H, W) label array.

        Raises UnknownColor for the first (row-major) pixel outside every
        tolerance ball.
        """
        img = np.asarray(image, dtype=np.int16)[..., :3]
        out = np.full(img.shape[:2], 255, dtype=np.uint8)
        best = np.full(img.shape[:2], np.iinfo(np.int16).max, dtype=np.int16)
        for rgb, label in self.colors.items():
            dist = np.abs(img - np.asarray(rgb, dtype=np.int16)).max(axis=2)
            hit = (dist <= self.tolerance) & (dist < best)
            out[hit] = int(label)
            best[hit] = dist[hit]
        bad = np.argwhere(out == 255)
        if len(bad):
            r, c = bad[0]
            raise UnknownColor(r, c, img[r, c])
        return out


DEFAULT_PALETTE = Palette(
    {
        (0x00, 0x00, 0x00): CellLabel.WALL,
        (0x80, 0x80, 0x80): CellLabel.OBSTACLE,
        (0xA5, 0x2A, 0x2A): CellLabel.DOORWAY,
        (0xFF, 0x00, 0x00): CellLabel.INTEREST,
        (0x00, 0xFF, 0x00): CellLabel.BOUNDARY,
        (0xFF, 0xFF, 0xFF): CellLabel.WALKABLE,
    }
)


def _readonly(a):
    a = np.ascontiguousarray(a)
    a.flags.writeable = False
    return a


@dataclass(frozen=True, eq=False)
class GridMap:
    labels: np.ndarray  # (height, width) uint8 of CellLabel values
    cell_size_m: float
    boundary_mask: np.ndarray = field(init=False)
    interest_regions: tuple = field(init=False)

    def __post_init__(self):
        if not self.cell_size_m > 0:
            raise NonPositiveScale(f"cell_size_m must be positive, got {self.cell_size_m}")
        labels = np.asarray(self.labels, dtype=np.uint8)
        if labels.ndim != 2 or labels.size == 0:
            raise EmptyImage("grid must be a nonempty 2-D array")
        if labels.max() > max(CellLabel):
            raise FloorplanError("labels contain values outside CellLabel")
        object.__setattr__(self, "labels", _readonly(labels))
        object.__setattr__(self, "cell_size_m", float(self.cell_size_m))
        object.__setattr__(self, "boundary_mask", _readonly(labels.ravel() == CellLabel.BOUNDARY))
        object.__setattr__(self, "interest_regions", _interest_regions(labels))

    @property
    def height_cells(self) -> int:
        return self.labels.shape[0]

    @property
    def width_cells(self) -> int:
        return self.labels.shape[1]

    @property
    def shape(self):
        return self.labels.shape

    @property
    def n(self) -> int:
        return self.labels.size

    @property
    def flat_labels(self) -> np.ndarray:
        return self.labels.ravel()

    def mask(self, *labels) -> np.ndarray:
        """Flat boolean mask of cells carrying any of ``labels``."""
        return np.isin(self.flat_labels, [int(l) for l in labels])

    @property
    def walkable_mask(self) -> np.ndarray:
        return self.mask(*WALKABLE_LABELS)

    def index(self, row: int, col: int) -> int:
        return int(row) * self.width_cells + int(col)

    def rowcol(self, i: int) -> tuple:
        return divmod(int(i), self.width_cells)

    def centers(self) -> np.ndarray:
        """(n, 2) array of cell-center (x, y) coordinates in meters."""
        rows, cols = np.divmod(np.arange(self.n), self.width_cells)
        return np.column_stack([(cols + 0.5) * self.cell_size_m, (rows + 0.5) * self.cell_size_m])

    def with_labels(self, labels: np.ndarray) -> "GridMap":
        return GridMap(labels, self.cell_size_m)

    def __eq__(self, other):
        if not isinstance(other, GridMap):
            return NotImplemented
        return self.cell_size_m == other.cell_size_m and np.array_equal(self.labels, other.labels)

    __hash__ = None

    # -- serialization -------------------------------------------------

    def to_json(self) -> str:
        flat = self.flat_labels
        runs = []
        start = 0
        change = np.flatnonzero(np.diff(flat)) + 1
        for end in list(change) + [flat.size]:
            runs.append([ASCII_CODES[CellLabel(int(flat[start]))], int(end - start)])
            start = end
        doc = {
            "format": "zoneplace.gridmap/1",
            "width_cells": self.width_cells,
            "height_cells": self.height_cells,
            "cell_size_m": self.cell_size_m,
            "labels_rle": runs,
        }
        return json.dumps(doc, indent=None, separators=(",", ":"))

    @classmethod
    def from_json(cls, text: str) -> "GridMap":
        doc = json.loads(text)
        w, h = int(doc["width_cells"]), int(doc["height_cells"])
        flat = np.concatenate(
            [np.full(int(count), int(_CODE_TO_LABEL[code]), dtype=np.uint8) for code, count in doc["labels_rle"]]
        )
        if flat.size != w * h:
            raise FloorplanError(f"RLE decodes to {flat.size} cells, expected {w * h}")
        return cls(flat.reshape(h, w), float(doc["cell_size_m"]))

    def to_ascii(self) -> str:
        lines = [f"{self.width_cells} {self.height_cells} {self.cell_size_m:g}"]
        for row in self.labels:
            lines.append("".join(ASCII_CODES[CellLabel(int(v))] for v in row))
        return "\n".join(lines) + "\n"


def _interest_regions(labels: np.ndarray) -> tuple:
    # 4-connected components, ordered by first (row-major) cell index.
    comp, count = ndimage.label(labels == CellLabel.INTEREST)
    flat = comp.ravel()
    order = np.argsort(flat, kind="stable")
    bounds = np.searchsorted(flat[order], np.arange(1, count + 2))
    regions = [_readonly(np.sort(order[bounds[k] : bounds[k + 1]])) for k in range(count)]
    regions.sort(key=lambda r: int(r[0]))
    return tuple(regions)


def load_floorplan(image, palette: Palette = DEFAULT_PALETTE, cell_size_m: float = 0.4,
                   pixels_per_meter: float = 20.0) -> GridMap:
    """Rasterize an annotated RGB image onto a uniform grid.

    Each cell inherits the label covering the most pixels whose centers fall
    inside it; ties go to the label earliest in ``TIE_PRIORITY``.
    """
    img = np.asarray(image)
    if img.size == 0 or img.ndim < 2 or img.shape[0] == 0 or img.shape[1] == 0:
        raise EmptyImage("floor-plan image is empty")
    if not (cell_size_m > 0 and pixels_per_meter > 0):
        raise NonPositiveScale(
            f"cell_size_m and pixels_per_meter must be positive, got {cell_size_m}, {pixels_per_meter}"
        )
    if img.ndim == 2:
        img = np.repeat(img[..., None], 3, axis=2)
    pixel_labels = palette.classify(img)

    step = cell_size_m * pixels_per_meter  # pixels per cell edge
    hp, wp = pixel_labels.shape
    rows = max(1, math.ceil(hp / step - 1e-9))
    cols = max(1, math.ceil(wp / step - 1e-9))
    pr = np.minimum(((np.arange(hp) + 0.5) / step).astype(np.int64), rows - 1)
    pc = np.minimum(((np.arange(wp) + 0.5) / step).astype(np.int64), cols - 1)
    cell_id = (pr[:, None] * cols + pc[None, :]).ravel()
    nlab = len(CellLabel)
    counts = np.bincount(cell_id * nlab + pixel_labels.ravel(), minlength=rows * cols * nlab)
    counts = counts.reshape(rows * cols, nlab)

    prio = np.array([int(l) for l in TIE_PRIORITY])
    winner = prio[np.argmax(counts[:, prio], axis=1)]  # argmax returns first max -> priority order
    return GridMap(winner.reshape(rows, cols).astype(np.uint8), cell_size_m)


def read_image(path) -> np.ndarray:
    """Read a PNG/PPM (anything Pillow opens) as an (H, W, 3) uint8 array."""
    from PIL import Image

    with Image.open(path) as im:
        return np.asarray(im.convert("RGB"))


def parse_ascii(text: str) -> GridMap:
    lines = [ln.rstrip("\r\n") for ln in text.splitlines()]
    lines = [ln for ln in lines if ln.strip() and not ln.lstrip().startswith(";")]
    if not lines:
        raise EmptyImage("ASCII grid is empty")
    try:
        w_s, h_s, s_s = lines[0].split()
        w, h, s = int(w_s), int(h_s), float(s_s)
    except ValueError as exc:
        raise FloorplanError(f"bad ASCII header {lines[0]!r}; expected 'W H cell_size_m'") from exc
    if s <= 0:
        raise NonPositiveScale(f"cell_size_m must be positive, got {s}")
    body = lines[1:]
    if len(body) != h:
        raise FloorplanError(f"expected {h} grid rows, found {len(body)}")
    labels = np.empty((h, w), dtype=np.uint8)
    for r, line in enumerate(body):
        if len(line) != w:
            raise FloorplanError(f"row {r} has {len(line)} cells, expected {w}")
        for c, ch in enumerate(line):
            try:
                labels[r, c] = _CODE_TO_LABEL[ch]
            except KeyError:
                raise FloorplanError(f"unknown cell code {ch!r} at row {r}, col {c}") from None
    return GridMap(labels, s)


def load_grid(path, cell_size_m: float | None = None, pixels_per_meter: float | None = None,
              palette: Palette = DEFAULT_PALETTE) -> GridMap:
    """Load a grid from ``.txt`` (ASCII), ``.json`` (serialized GridMap) or an image."""
    path = Path(path)
    suffix = path.suffix.lower()
    if suffix in (".txt", ".grid", ".asc"):
        return parse_ascii(path.read_text(encoding="utf-8"))
    if suffix == ".json":
        return GridMap.from_json(path.read_text(encoding="utf-8"))
    return load_floorplan(read_image(path), palette,
                          cell_size_m if cell_size_m is not None else 0.4,
                          pixels_per_meter if pixels_per_meter is not None else 20.0)


@dataclass(frozen=True)
class GridStepReport:
    ok: bool
    cell_size_m: float
    footprint_edge_m: float

    @property
    def max_cell_size_m(self) -> float:
        return self.footprint_edge_m / 5.0

    def __str__(self):
        verdict = "ok" if self.ok else "VIOLATION"
        return (f"grid step {verdict}: cell size {self.cell_size_m:.3f} m, "
                f"footprint edge {self.footprint_edge_m:.3f} m (max cell {self.max_cell_size_m:.3f} m)")


def validate_grid_step(grid: GridMap, sensor) -> GridStepReport:
    """Check the cell edge is at most one fifth of the sensor footprint edge."""
    from .coverage import footprint_edge

    edge = footprint_edge(sensor)
    return GridStepReport(grid.cell_size_m <= edge / 5.0 + 1e-12, grid.cell_size_m, edge)


def pick_interest_point(grid: GridMap, region_index: int, rng: np.random.Generator) -> int:
    if not 0 <= region_index < len(grid.interest_regions):
        raise RegionOutOfRange(
            f"interest region {region_index} out of range (map has {len(grid.interest_regions)})"
        )
    region = grid.interest_regions[region_index]
    return int(region[rng.integers(len(region))])
