import sys
from pathlib import Path

from zoneplace.floorplan import load_grid

DATA = Path(__file__).resolve().parents[1] / "src" / "zoneplace" / "data"


def out_dir() -> Path:
    out = Path(sys.argv[1]) if len(sys.argv) > 1 else Path(__file__).resolve().parent / "out"
    out.mkdir(parents=True, exist_ok=True)
    return out


def demo_grid(name="corridor_office"):
    return load_grid(DATA / f"{name}.txt")
