import math

import numpy as np
import pytest

from conftest import DATA, grid_from_rows
from zoneplace.coverage import SensorModel, build_coverage_matrix, covered_cells
from zoneplace.errors import InvalidPlacementCell
from zoneplace.evaluator import (CcrReport, EvalConfig, TransitionEvent, compute_ccr, evaluate, events_to_csv,
                                 frame_cells, generate_eval_trajectories, replay, sweep_f)
from zoneplace.floorplan import load_grid
from zoneplace.pathgen import PathGenConfig, Trajectory, TrajectorySet, generate_trajectories, geometric_cumulative


def ev(t, kind):
    return TransitionEvent(t, 0, kind, 0)


def test_eval_config_validation():
    for bad in (dict(walk_speed_mps=0), dict(window_w_s=0.01), dict(detector_mode="x"), dict(eval_source="y")):
        with pytest.raises(ValueError):
            EvalConfig(**bad)


def test_ccr_examples():
    gt = [ev(10, "ground_truth"), ev(20, "ground_truth")]
    r = compute_ccr(gt + [ev(10.5, "detected"), ev(20.4, "detected")], 2.0)
    assert (r.tp, r.fp, r.fn, r.ccr) == (2, 0, 0, 1.0)
    r = compute_ccr([ev(10, "ground_truth"), ev(13, "detected")], 2.0)
    assert (r.tp, r.fp, r.fn, r.ccr) == (0, 1, 1, 0.0)
    assert CcrReport(9, 1, 0).ccr == pytest.approx(0.9)
    assert CcrReport(0, 0, 0).ccr == 1.0
    # window edge is inclusive
    assert compute_ccr([ev(0, "ground_truth"), ev(2.0, "detected")], 2.0).tp == 1


def test_ccr_matching_is_one_to_one_and_stable(rng):
    events = [ev(float(t), "ground_truth") for t in rng.integers(0, 40, 25)]
    events += [ev(float(t) + 0.5, "detected") for t in rng.integers(0, 40, 25)]
    base = compute_ccr(sorted(events), 2.0)
    assert base.tp + base.fn == 25 and base.tp + base.fp == 25
    for _ in range(5):
        shuffled = [events[i] for i in rng.permutation(len(events))]
        assert compute_ccr(sorted(shuffled, key=lambda e: e.time_s), 2.0) == base


# 15 x 15 room split by a wall on row 7 with a three-cell boundary doorway
SCENE = ["." * 15] * 7 + ["######bbb######"] + ["." * 15] * 7


def scene():
    grid = grid_from_rows(SCENE)
    return grid, build_coverage_matrix(grid, SensorModel())


def track(grid, coords):
    cells = tuple(grid.index(r, c) for r, c in coords)
    return TrajectorySet((Trajectory(cells, geometric_cumulative(cells, grid)),), grid)


def kinds(events):
    return [(round(e.time_s, 9), e.kind, e.cell) for e in events]


def test_scene_far_sensor():
    grid, G = scene()
    walk = track(grid, [(r, 7) for r in range(15)])
    far = (grid.index(2, 14),)  # beyond 3 m, off the walk
    # 7 cells at 0.4 m -> the door row is reached at 2.8 m = frame 42
    gt = [(2.8, "ground_truth", grid.index(7, 7))]
    assert kinds(replay(grid, walk, far, G, EvalConfig())) == gt
    r = evaluate(grid, walk, far, G, EvalConfig())
    assert (r.tp, r.fp, r.fn) == (0, 0, 1)
    r = evaluate(grid, walk, far, G, EvalConfig(detector_mode="extrapolating"))
    assert (r.tp, r.fp, r.fn) == (0, 0, 1)


def test_scene_upstream_sensor_predicts_crossing():
    grid, G = scene()
    walk = track(grid, [(r, 7) for r in range(15)])
    up = (grid.index(2, 7),)  # sees rows 0..4; the door is 2 m away
    assert evaluate(grid, walk, up, G, EvalConfig()).fn == 1
    events = replay(grid, walk, up, G, EvalConfig(detector_mode="extrapolating"))
    # leaves coverage at frame 30 (2.0 m) from row 4, which is 1.2 m from the line: predicted at 2.0 + 1.2 s
    assert kinds(events) == [(2.8, "ground_truth", grid.index(7, 7)), (3.2, "detected", grid.index(5, 7))]
    r = compute_ccr(events, 2.0)
    assert (r.tp, r.fp, r.fn) == (1, 0, 0)


def test_scene_turn_away_is_a_false_positive():
    grid, G = scene()
    walk = track(grid, [(r, 7) for r in range(7)] + [(6, c) for c in range(8, 15)])
    sensor = (grid.index(3, 7),)  # rows 1..5
    assert replay(grid, walk, sensor, G, EvalConfig()) == []
    events = replay(grid, walk, sensor, G, EvalConfig(detector_mode="extrapolating"))
    # exit at frame 36 (2.4 m) from row 5, 0.8 m short of the line
    assert kinds(events) == [(3.2, "detected", grid.index(6, 7))]
    r = compute_ccr(events, 2.0)
    assert (r.tp, r.fp, r.fn) == (0, 1, 0)


def test_scene_observed_crossing_suppresses_prediction():
    grid, G = scene()
    walk = track(grid, [(r, 7) for r in range(15)])
    on_door = (grid.index(7, 7),)
    events = replay(grid, walk, on_door, G, EvalConfig(detector_mode="extrapolating"))
    assert kinds(events) == [(2.8, "detected", grid.index(7, 7)), (2.8, "ground_truth", grid.index(7, 7))]


def test_frame_count_and_cells():
    grid, _ = scene()
    walk = track(grid, [(r, 7) for r in range(15)] + [(14, c) for c in range(8, 12)])
    traj = walk[0]
    fc = frame_cells(traj, 1.0, 15.0)
    assert len(fc) == math.ceil(round(traj.length_m / 1.0 * 15.0, 9)) + 1 == 109
    assert fc[0] == traj.cells[0] and fc[-1] == traj.cells[-1]
    diag = track(grid, [(k, k) for k in range(6)])[0]
    assert len(frame_cells(diag, 1.0, 15.0)) == math.ceil(round(5 * 0.4 * math.sqrt(2) * 15, 9)) + 1


@pytest.fixture(scope="module")
def office():
    grid = load_grid(DATA / "corridor_office.txt")
    G = build_coverage_matrix(grid, SensorModel())
    ts = generate_trajectories(grid, PathGenConfig(num_paths=40, rng_seed=4))
    return grid, G, ts


def test_empty_and_full_placements(office):
    grid, G, ts = office
    events = replay(grid, ts, (), G, EvalConfig())
    gt = [e for e in events if e.kind == "ground_truth"]
    assert gt and all(grid.boundary_mask[e.cell] for e in gt)
    r = compute_ccr(events, 2.0)
    assert r.tp == 0 and r.fn == len(gt)
    full = [c for c in G.candidates if grid.boundary_mask[c]]  # each boundary cell sees itself
    r = evaluate(grid, ts, full, G, EvalConfig())
    assert (r.tp, r.fp, r.fn) == (len(gt), 0, 0)
    with pytest.raises(InvalidPlacementCell):
        replay(grid, ts, (0,), G, EvalConfig())


def test_conservative_recall_grows_with_sensors(office, rng):
    grid, G, ts = office
    cells = [int(c) for c in rng.choice(G.candidates, 6, replace=False)]
    last = -1.0
    for k in range(7):
        r = evaluate(grid, ts, cells[:k], G, EvalConfig())
        assert r.fp == 0 and r.ccr >= last
        last = r.ccr


def test_eval_sources(office):
    grid, G, ts = office
    pg = PathGenConfig(num_paths=40, rng_seed=4)
    same = generate_eval_trajectories(grid, EvalConfig(), pg, seed=4, num_paths=40)
    assert same == ts
    walk = generate_eval_trajectories(grid, EvalConfig(eval_source="random_walk"), pg, seed=9, num_paths=100)
    assert len(walk) == 100
    assert all(a.cells[-1] == b.cells[0] for a, b in zip(walk, walk[1:]))
    alt = load_grid(DATA / "corridor_office_alt.txt")
    moved = generate_eval_trajectories(grid, EvalConfig(eval_source="alternate_interests"), pg, seed=9,
                                       alternate=alt, num_paths=30)
    regions = [set(r.tolist()) for r in alt.interest_regions]
    for t in moved:
        a, b = t.endpoints
        assert t.cells[0] in regions[a] and t.cells[-1] in regions[b]


def test_sweep_f_rows_and_densest_limit():
    # the scene plus two interest cells for a quick trajectory set
    rows = list(SCENE)
    rows[1] = "..i............"
    rows[13] = "............i.."
    grid = grid_from_rows(rows)
    G = build_coverage_matrix(grid, SensorModel())
    ts = generate_trajectories(grid, PathGenConfig(num_paths=12, rng_seed=0))
    one = sweep_f(grid, ts, G, 1, [0.5])
    assert len(one) == 1 and set(one[0]) >= {"f", "objective", "coverage_rate", "TP", "FP", "FN", "ccr"}
    huge = sweep_f(grid, ts, G, 1, [100.0])[0]
    # densest strategy: the footprint touching the most boundary-crossing trajectories
    crossing = [set(t.cells) for t in ts if grid.boundary_mask[list(t.cells)].any()]
    best = max(sum(1 for cells in crossing if cells & set(np.flatnonzero(covered_cells(G, (j,))).tolist()))
               for j in G.candidates)
    assert huge["objective"] == best


def test_events_csv():
    text = events_to_csv([TransitionEvent(1.5, 3, "detected", 12)])
    assert text.splitlines() == ["time_s,trajectory_id,cell,kind", "1.500000,3,12,detected"]
