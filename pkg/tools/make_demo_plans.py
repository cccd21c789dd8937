"""Regenerate the bundled demo floor plans (ASCII + PNG) under src/zoneplace/data/.

Run from the repository root:  python tools/make_demo_plans.py
"""

from pathlib import Path

import numpy as np
from PIL import Image

from zoneplace.floorplan import ASCII_CODES, DEFAULT_PALETTE, CellLabel, GridMap

DATA = Path(__file__).resolve().parents[1] / "src" / "zoneplace" / "data"
CELL = 0.4
PX_PER_CELL = 8  # 20 px per meter at 0.4 m cells

W_, O_, D_, I_, B_, F_ = "#", "o", "d", "i", "b", "."


def blank(h, w):
    g = np.full((h, w), F_, dtype="<U1")
    g[0, :] = g[-1, :] = g[:, 0] = g[:, -1] = W_
    return g


def desk(g, r, c, h, w, chairs):
    """Obstacle block with chair (interest) cells on the given sides."""
    g[r : r + h, c : c + w] = O_
    for side in chairs:
        if side == "n":
            g[r - 1, c + w // 2] = I_
        elif side == "s":
            g[r + h, c + w // 2] = I_
        elif side == "w":
            g[r + h // 2, c - 1] = I_
        elif side == "e":
            g[r + h // 2, c + w] = I_


def corridor_office():
    """Eight rooms off a 1.2 m corridor; doors face each other in pairs about 9 m apart."""
    g = blank(24, 100)
    g[8:10, :] = W_  # north wall, 2 cells thick
    g[13:15, :] = W_  # south wall
    for c in (28, 52, 75):
        g[1:8, c] = W_
        g[15:23, c] = W_
    for c0 in (15, 38, 61, 84):
        g[8, c0 : c0 + 3] = D_  # doorway in the outer wall row, boundary toward the corridor
        g[9, c0 : c0 + 3] = B_
        g[14, c0 : c0 + 3] = D_
        g[13, c0 : c0 + 3] = B_
    # desks with chairs: the two west rooms are busy open-plan areas, the rest see little use
    for c in (4, 10, 16, 22):
        desk(g, 3, c, 2, 3, "ns")
        desk(g, 18, c, 2, 3, "ns")
    for c in (33, 44):
        desk(g, 3, c, 2, 3, "s")
        desk(g, 18, c, 2, 3, "n")
    for c in (57, 80):
        desk(g, 3, c, 2, 3, "s")
        desk(g, 18, c + 2, 2, 3, "n")
    g[2, 26] = I_  # cabinet
    g[21, 50] = I_  # printer
    g[10:13, 1] = I_  # entrance at the west end of the corridor
    return g


def corridor_office_alt():
    g = corridor_office()
    g[g == I_] = F_
    for r, c in ((6, 2), (2, 12), (5, 30), (2, 50), (6, 66), (2, 97), (21, 2), (17, 30), (21, 55), (17, 77), (20, 97)):
        assert g[r, c] == F_, (r, c)
        g[r, c] = I_
    g[10, 70] = I_  # printer in the corridor
    g[10:13, 1] = I_  # same entrance
    return g


def open_office():
    """Four quadrant zones separated by a wall cross; each arm has a 2.8 m opening."""
    g = blank(44, 44)
    g[1:43, 21:23] = W_
    g[21:23, 1:43] = W_
    g[6:13, 21] = B_  # north arm opening
    g[31:38, 21] = B_  # south arm opening
    g[21, 6:13] = B_  # west arm opening
    g[21, 31:38] = B_  # east arm opening
    # boundary stays one cell thick: the other half of each opening is plain floor
    g[6:13, 22] = F_
    g[31:38, 22] = F_
    g[22, 6:13] = F_
    g[22, 31:38] = F_
    for (r0, c0) in ((3, 3), (3, 26), (26, 3), (26, 26)):
        for dr in (0, 8):
            for dc in (0, 8):
                desk(g, r0 + dr + 1, c0 + dc, 2, 4, "ns")
    g[1, 10] = I_  # printer
    g[42, 30] = I_  # kitchen
    g[16:18, 42] = I_  # entrance (east wall)
    g[28, 1] = I_  # storage
    return g


def open_office_alt():
    g = open_office()
    g[g == I_] = F_
    for r, c in ((2, 2), (10, 13), (18, 5), (2, 33), (13, 40), (18, 27), (25, 13), (41, 3),
                 (34, 17), (25, 38), (39, 28), (41, 41), (31, 42)):
        assert g[r, c] == F_, (r, c)
        g[r, c] = I_
    return g


def write(name, g):
    h, w = g.shape
    text = f"{w} {h} {CELL:g}\n" + "\n".join("".join(row) for row in g) + "\n"
    (DATA / f"{name}.txt").write_text(text)
    code_to_rgb = {ASCII_CODES[label]: rgb for rgb, label in DEFAULT_PALETTE.colors.items()}
    rgb = np.array([[code_to_rgb[ch] for ch in row] for row in g], dtype=np.uint8)
    img = np.repeat(np.repeat(rgb, PX_PER_CELL, axis=0), PX_PER_CELL, axis=1)
    Image.fromarray(img).save(DATA / f"{name}.png")
    grid = GridMap(np.vectorize(lambda ch: int({v: k for k, v in ASCII_CODES.items()}[ch]))(g).astype(np.uint8), CELL)
    print(f"{name}: {w}x{h}, {len(grid.interest_regions)} interest regions, "
          f"{int((grid.flat_labels != CellLabel.WALL).sum())} candidates")


if __name__ == "__main__":
    DATA.mkdir(parents=True, exist_ok=True)
    write("corridor_office", corridor_office())
    write("corridor_office_alt", corridor_office_alt())
    write("open_office", open_office())
    write("open_office_alt", open_office_alt())
