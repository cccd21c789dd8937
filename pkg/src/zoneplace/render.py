"""Static image outputs: heatmaps, sensor-footprint overlays and sweep charts."""

from __future__ import annotations

from pathlib import Path

import numpy as np
from PIL import Image, ImageDraw

from .coverage import CoverageMatrix, SensorModel, covered_cells, footprint_edge
from .floorplan import DEFAULT_PALETTE, CellLabel, GridMap

_LABEL_RGB = {label: rgb for rgb, label in DEFAULT_PALETTE.colors.items()}

# fixed ramp: black -> purple -> orange -> pale yellow
_RAMP = np.array([[0, 0, 0], [87, 16, 110], [188, 55, 84], [249, 142, 9], [252, 255, 164]], dtype=float)


def write_pgm16(counts: np.ndarray, path) -> None:
    """Binary 16-bit PGM (P5, maxval 65535); counts above the max are clipped."""
    counts = np.asarray(counts)
    h, w = counts.shape
    data = np.clip(counts, 0, 65535).astype(">u2")
    with open(path, "wb") as fh:
        fh.write(f"P5\n{w} {h}\n65535\n".encode("ascii"))
        fh.write(data.tobytes())


def read_pgm16(path) -> np.ndarray:
    raw = Path(path).read_bytes()
    parts = raw.split(maxsplit=4)
    if parts[0] != b"P5":
        raise ValueError(f"{path}: not a binary PGM")
    w, h, maxval = int(parts[1]), int(parts[2]), int(parts[3])
    dtype = ">u2" if maxval > 255 else "u1"
    return np.frombuffer(parts[4][: w * h * np.dtype(dtype).itemsize], dtype=dtype).reshape(h, w).astype(np.int64)


def ramp(values: np.ndarray) -> np.ndarray:
    """Map values in [0, 1] onto the fixed color ramp -> uint8 RGB."""
    v = np.clip(np.asarray(values, dtype=float), 0.0, 1.0) * (len(_RAMP) - 1)
    lo = np.floor(v).astype(int)
    hi = np.minimum(lo + 1, len(_RAMP) - 1)
    t = (v - lo)[..., None]
    return np.rint(_RAMP[lo] * (1 - t) + _RAMP[hi] * t).astype(np.uint8)


def heatmap_rgb(counts: np.ndarray, grid: GridMap | None = None) -> np.ndarray:
    """Square-root scaled heatmap; walls and obstacles keep their plan colors."""
    counts = np.asarray(counts, dtype=float)
    top = counts.max()
    rgb = ramp(np.sqrt(counts / top) if top > 0 else counts)
    if grid is not None:
        for label in (CellLabel.WALL, CellLabel.OBSTACLE):
            rgb[grid.labels == label] = _LABEL_RGB[label]
    return rgb


def plan_rgb(grid: GridMap) -> np.ndarray:
    rgb = np.zeros(grid.shape + (3,), dtype=np.uint8)
    for label, color in _LABEL_RGB.items():
        rgb[grid.labels == label] = color
    return rgb


def _upscale(rgb: np.ndarray, px: int) -> np.ndarray:
    return np.repeat(np.repeat(rgb, px, axis=0), px, axis=1)


def save_heatmap_png(counts: np.ndarray, path, grid: GridMap | None = None, px: int = 8) -> None:
    Image.fromarray(_upscale(heatmap_rgb(counts, grid), px)).save(path)


def overlay_image(grid: GridMap, placement, G: CoverageMatrix, px: int = 8, edge_m: float | None = None):
    """Floor plan with covered cells tinted and each sensor footprint drawn as a blue box."""
    chosen = tuple(placement.chosen) if hasattr(placement, "chosen") else tuple(placement)
    rgb = plan_rgb(grid).astype(float)
    if chosen:
        seen = covered_cells(G, chosen).reshape(grid.shape)
        rgb[seen] = 0.6 * rgb[seen] + 0.4 * np.array([120, 170, 255])
    img = Image.fromarray(_upscale(np.rint(rgb).astype(np.uint8), px))
    draw = ImageDraw.Draw(img)
    half = (edge_m if edge_m is not None else footprint_edge(SensorModel())) / 2 / grid.cell_size_m * px
    for c in chosen:
        r, q = grid.rowcol(c)
        cx, cy = (q + 0.5) * px, (r + 0.5) * px
        draw.rectangle([cx - half, cy - half, cx + half, cy + half], outline=(0, 60, 255), width=2)
        draw.ellipse([cx - 2, cy - 2, cx + 2, cy + 2], fill=(0, 60, 255))
    return img


def save_overlay_png(grid: GridMap, placement, G: CoverageMatrix, path, px: int = 8, edge_m: float | None = None) -> None:
    overlay_image(grid, placement, G, px, edge_m).save(path)


def save_sweep_chart(rows, path, x: str = "k", title: str | None = None) -> None:
    """Line chart of objective coverage rate and measured CCR against ``x``."""
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    xs = [row[x] for row in rows]
    fig, ax = plt.subplots(figsize=(5, 3.5), dpi=100)
    ax.plot(xs, [row["coverage_rate"] for row in rows], "o-", color="tab:red", label="objective (coverage rate)")
    ax.plot(xs, [row["ccr"] for row in rows], "s-", color="tab:blue", label="CCR")
    ax.set_xlabel("number of sensors" if x == "k" else "dilation f (m)")
    ax.set_ylim(0, 1.05)
    ax.grid(alpha=0.3)
    ax.legend(loc="lower right")
    if title:
        ax.set_title(title)
    fig.tight_layout()
    fig.savefig(path, metadata={"Software": None})
    plt.close(fig)
