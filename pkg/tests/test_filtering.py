import numpy as np
import pytest

from conftest import grid_from_rows
from zoneplace.coverage import SensorModel, footprint_edge
from zoneplace.filtering import FilterConfig, SegmentMatrix, boundary_lines, dilate_boundaries, filter_segments
from zoneplace.pathgen import PathGenConfig, Trajectory, TrajectorySet, generate_trajectories, geometric_cumulative

S = 0.4


def manual(grid, coords):
    cells = tuple(grid.index(r, c) for r, c in coords)
    return Trajectory(cells, geometric_cumulative(cells, grid))


def test_dilation_limits(corridor_office):
    assert np.array_equal(dilate_boundaries(corridor_office, 0.0), corridor_office.boundary_mask)
    h, w = corridor_office.shape
    assert dilate_boundaries(corridor_office, S * np.hypot(h, w)).all()
    with pytest.raises(ValueError):
        dilate_boundaries(corridor_office, -0.1)


def test_single_cell_dilation_is_a_plus():
    grid = grid_from_rows([".....", ".....", "..b..", ".....", "....."])
    mask = dilate_boundaries(grid, S).reshape(grid.shape)
    expected = np.zeros((5, 5), dtype=bool)
    expected[2, 1:4] = expected[1:4, 2] = True
    assert np.array_equal(mask, expected)


def test_no_boundary_cells_gives_empty_mask():
    grid = grid_from_rows(["...", "..."])
    assert not dilate_boundaries(grid, 10.0).any()


def test_trajectory_away_from_band_gives_nothing():
    grid = grid_from_rows([".........", "....b....", ".........", ".........", "........."])
    traj = manual(grid, [(4, c) for c in range(9)])
    P = filter_segments(TrajectorySet((traj,), grid), grid, FilterConfig(0.4))
    assert P.p == 0


def test_single_crossing_gives_one_segment():
    grid = grid_from_rows(["...", "...", "bbb", "...", "..."])
    traj = manual(grid, [(r, 1) for r in range(5)])
    P = filter_segments(TrajectorySet((traj,), grid), grid, FilterConfig(0.4))
    assert P.p == 1
    assert grid.index(2, 1) in P.cells(0)
    assert sorted(P.cells(0)) == [grid.index(r, 1) for r in (1, 2, 3)]
    assert P.provenance == ((0, 1, 3),)


def near_miss_grid():
    rows = [["."] * 12 for _ in range(12)]
    for r in range(0, 5):
        rows[r][3] = "b"  # line A ends two cells above the walk
    for r in range(5, 12):
        rows[r][8] = "b"  # line B is crossed
    return grid_from_rows(["".join(r) for r in rows])


def test_near_miss_then_crossing():
    grid = near_miss_grid()
    traj = manual(grid, [(6, c) for c in range(12)])
    band = dilate_boundaries(grid, 0.8).reshape(grid.shape)
    # hand enumeration of row 6 inside the 0.8 m band: col 3 (2 cells below A), cols 6..10 around B
    assert np.flatnonzero(band[6]).tolist() == [3, 6, 7, 8, 9, 10]
    P = filter_segments(TrajectorySet((traj,), grid), grid, FilterConfig(0.8))
    assert P.p == 1
    assert sorted(P.cells(0)) == [grid.index(6, c) for c in range(6, 11)]
    per_line = filter_segments(TrajectorySet((traj,), grid), grid, FilterConfig(0.8, per_boundary=True))
    assert per_line == P


def test_runs_with_two_crossings_merge():
    grid = grid_from_rows(["..........", "..b..b....", ".........."])
    traj = manual(grid, [(1, c) for c in range(10)])
    P = filter_segments(TrajectorySet((traj,), grid), grid, FilterConfig(0.8))
    assert P.p == 1  # one band run covers both crossings
    lines = filter_segments(TrajectorySet((traj,), grid), grid, FilterConfig(0.8, per_boundary=True))
    assert lines.p == 2


@pytest.mark.parametrize("f", [0.0, 0.4, 1.0, None])
def test_segment_invariants(corridor_office, f):
    ts = generate_trajectories(corridor_office, PathGenConfig(num_paths=30, rng_seed=5))
    P = filter_segments(ts, corridor_office, FilterConfig(f))
    radius = footprint_edge(SensorModel()) if f is None else f
    assert P.dilation_f_m == pytest.approx(radius)
    band = dilate_boundaries(corridor_office, radius)
    boundary = corridor_office.boundary_mask
    crossings = 0
    for traj in ts:
        b = boundary[list(traj.cells)]
        crossings += int(b[0]) + int(np.sum(b[1:] & ~b[:-1]))
    assert crossings >= P.p > 0
    for t in range(P.p):
        cells = P.cells(t)
        assert cells and boundary[cells].any() and band[cells].all()
        if f == 0.0:
            assert boundary[cells].all()
        tid, a, b = P.provenance[t]
        assert set(ts[tid].cells[a : b + 1]) == set(cells)


def test_dense_and_round_trip(tmp_path, corridor_office):
    ts = generate_trajectories(corridor_office, PathGenConfig(num_paths=10))
    P = filter_segments(ts, corridor_office, FilterConfig())
    dense = P.to_dense()
    assert dense.shape == (corridor_office.n, P.p)
    assert dense.sum() == sum(len(P.cells(t)) for t in range(P.p))
    P.save(tmp_path / "p.bin")
    again = SegmentMatrix.load(tmp_path / "p.bin")
    assert again == P and again.dilation_f_m == P.dilation_f_m


def test_boundary_lines(corridor_office):
    lines = boundary_lines(corridor_office)
    assert sum(int(m.sum()) for m in lines) == int(corridor_office.boundary_mask.sum())
    assert len(lines) == 8  # paired doors: four openings, each with a line on both sides


def test_negative_f_rejected():
    with pytest.raises(ValueError):
        FilterConfig(-1.0)
