from pathlib import Path

import numpy as np
import pytest

from zoneplace.floorplan import GridMap, load_grid, parse_ascii

DATA = Path(__file__).resolve().parents[1] / "src" / "zoneplace" / "data"


def grid_from_rows(rows, cell_size_m=0.4) -> GridMap:
    rows = [r for r in rows]
    header = f"{len(rows[0])} {len(rows)} {cell_size_m}"
    return parse_ascii("\n".join([header] + rows) + "\n")


@pytest.fixture(scope="session")
def corridor_office() -> GridMap:
    return load_grid(DATA / "corridor_office.txt")


@pytest.fixture(scope="session")
def open_office() -> GridMap:
    return load_grid(DATA / "open_office.txt")


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip("abc:"))):
            terminalreporter.write_line(line)
