"""Frame-rate replay of trajectories against a placement and windowed CCR scoring."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, replace

import numpy as np
from scipy import ndimage
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import dijkstra

from .coverage import CoverageMatrix, SensorModel, footprint_edge
from .errors import InvalidPlacementCell, ZoneplaceError
from .filtering import FilterConfig, filter_segments
from .floorplan import CellLabel, GridMap
from .optimizer import PlacementProblem, Placement, pick_representatives, solve_bnb
from .pathgen import CostModel, PathGenConfig, TrajectorySet, generate_trajectories, path_rng, route_pair

DETECTOR_MODES = ("conservative", "extrapolating")
EVAL_SOURCES = ("same_model", "alternate_interests", "random_walk")


@dataclass(frozen=True)
class EvalConfig:
    walk_speed_mps: float = 1.0
    frame_rate_hz: float = 15.0
    window_w_s: float = 2.0
    detector_mode: str = "conservative"
    eval_source: str = "same_model"
    band_f_m: float | None = None  # extrapolation band; None -> sensor footprint edge

    def __post_init__(self):
        if min(self.walk_speed_mps, self.frame_rate_hz, self.window_w_s) <= 0:
            raise ValueError("walk speed, frame rate and window must be positive")
        if self.window_w_s * self.frame_rate_hz < 1:
            raise ValueError("window must span at least one frame")
        if self.detector_mode not in DETECTOR_MODES:
            raise ValueError(f"detector_mode must be one of {DETECTOR_MODES}")
        if self.eval_source not in EVAL_SOURCES:
            raise ValueError(f"eval_source must be one of {EVAL_SOURCES}")


@dataclass(frozen=True, order=True)
class TransitionEvent:
    time_s: float
    trajectory_id: int
    kind: str  # "ground_truth" | "detected"
    cell: int


@dataclass(frozen=True)
class CcrReport:
    tp: int
    fp: int
    fn: int

    @property
    def ccr(self) -> float:
        denom = self.tp + self.fp + self.fn
        return self.tp / denom if denom else 1.0

    def to_dict(self) -> dict:
        return {"TP": self.tp, "FP": self.fp, "FN": self.fn, "ccr": round(self.ccr, 12)}


def frame_cells(traj, walk_speed_mps: float, frame_rate_hz: float) -> list:
    """Cell occupied at each frame: the last path cell reached by that time."""
    length = traj.cumulative_dist_m[-1]
    frames = math.ceil(length / walk_speed_mps * frame_rate_hz - 1e-9) + 1
    dist = np.arange(frames) * (walk_speed_mps / frame_rate_hz)
    idx = np.searchsorted(np.asarray(traj.cumulative_dist_m), dist + 1e-9, side="right") - 1
    idx = np.clip(idx, 0, len(traj.cells) - 1)
    cells = np.asarray(traj.cells)[idx]
    return cells.tolist()


def _placement_cells(placement):
    return tuple(placement.chosen) if isinstance(placement, Placement) else tuple(placement)


def replay(grid: GridMap, trajectories: TrajectorySet, placement, G: CoverageMatrix, config: EvalConfig,
           sensor: SensorModel | None = None) -> list:
    """Replay each trajectory at walking speed and emit transition events.

    Trajectories are laid end to end on one timeline, separated by more than
    two windows, so events of different trajectories never match each other.
    """
    cells = _placement_cells(placement)
    covered_bits = 0
    for c in cells:
        if c not in G:
            raise InvalidPlacementCell(f"cell {c} is not a sensor candidate")
        covered_bits |= G.row_of(c)
    covered = np.zeros(grid.n, dtype=bool)
    if covered_bits:
        raw = covered_bits.to_bytes((grid.n + 7) // 8, "little")
        covered = np.unpackbits(np.frombuffer(raw, dtype=np.uint8), bitorder="little")[: grid.n].astype(bool)
    boundary = grid.boundary_mask
    extrapolate = config.detector_mode == "extrapolating"
    if extrapolate:
        band_f = config.band_f_m if config.band_f_m is not None else footprint_edge(sensor or SensorModel())
        lines = _line_distances(grid)

    dt = 1.0 / config.frame_rate_hz
    gap = 2.0 * config.window_w_s + dt
    events = []
    offset = 0.0
    for tid, traj in enumerate(trajectories):
        fc = frame_cells(traj, config.walk_speed_mps, config.frame_rate_hz)
        crossing = [bool(boundary[c]) and (q == 0 or not boundary[fc[q - 1]]) for q, c in enumerate(fc)]
        for q, c in enumerate(fc):
            if crossing[q]:
                t = offset + q * dt
                events.append(TransitionEvent(t, tid, "ground_truth", c))
                if covered[c]:
                    events.append(TransitionEvent(t, tid, "detected", c))
        if extrapolate:
            for t, c in _extrapolated(fc, crossing, covered, grid, config, band_f, lines):
                events.append(TransitionEvent(offset + t, tid, "detected", c))
        offset += (len(fc) - 1) * dt + gap
    events.sort()
    return events


def _walk_graph(grid: GridMap):
    """Sparse 8-connected walking graph weighted by geometric step length."""
    model = CostModel(grid, PathGenConfig())
    rows, cols, vals = [], [], []
    for u, nbrs in enumerate(model.neighbors):
        for v, geo, _ in nbrs:
            rows.append(u), cols.append(v), vals.append(geo)
    return csr_matrix((vals, (rows, cols)), shape=(grid.n, grid.n))


def _line_distances(grid: GridMap):
    """(line id per cell, (lines, n) walking distance in m from each boundary line)."""
    comp, count = ndimage.label(grid.boundary_mask.reshape(grid.shape), structure=np.ones((3, 3)))
    comp = comp.ravel()
    if not count:
        return comp, np.zeros((0, grid.n))
    graph = _walk_graph(grid)
    dist = np.stack([dijkstra(graph, indices=np.flatnonzero(comp == k), min_only=True)
                     for k in range(1, count + 1)])
    return comp, dist


def _extrapolated(fc, crossing, covered, grid: GridMap, config: EvalConfig, f: float, lines=None):
    """Predicted crossings -> list of (time offset in s, cell) for one replayed track.

    A track that leaves coverage inside the ``f`` band of a boundary line,
    having closed in on that line over the last half second, is predicted
    to cross it once it has walked the remaining distance. Symmetrically, a
    track that appears in coverage inside a band and then moves away from
    that line is predicted to have crossed it that long before. A prediction
    is dropped when the same line was seen crossed within one window; at
    most one prediction is made per exit or entry.
    """
    line_of, dist = lines if lines is not None else _line_distances(grid)
    look = max(1, int(round(0.5 * config.frame_rate_hz)))
    quiet = int(round(config.window_w_s * config.frame_rate_hz))
    dt = 1.0 / config.frame_rate_hz
    nf = len(fc)
    out = []

    def predicted(cell, other, seen, frame):
        # nearest line whose band holds ``cell`` and that is closer at ``cell`` than at ``other``
        near = (dist[:, cell] <= f + 1e-9) & (dist[:, cell] < dist[:, other] - 1e-9)
        for k in np.flatnonzero(near)[np.argsort(dist[near, cell], kind="stable")]:
            if not any(abs(frame - q) <= quiet and ln == k + 1 for q, ln in seen):
                return dist[k, cell] / config.walk_speed_mps
        return None

    g = 0
    while g < nf:
        if not covered[fc[g]]:
            g += 1
            continue
        a = g
        while g < nf and covered[fc[g]]:
            g += 1
        b = g - 1  # covered run is frames a..b
        seen = [(q, line_of[fc[q]]) for q in range(a, b + 1) if crossing[q]]
        if a > 0:
            lag = predicted(fc[a], fc[min(b, a + look)], seen, a)
            if lag is not None:
                out.append((max(0.0, a * dt - lag), fc[a]))
        if g < nf:
            lag = predicted(fc[b], fc[max(a, b - look)], seen, b)
            if lag is not None:
                out.append((g * dt + lag, fc[g]))
    return out


def compute_ccr(events, window_w_s: float) -> CcrReport:
    """Greedy time-ordered one-to-one matching of detections to ground truth within +-w."""
    gt = sorted(e.time_s for e in events if e.kind == "ground_truth")
    det = sorted(e.time_s for e in events if e.kind == "detected")
    tol = window_w_s + 1e-9
    p = tp = 0
    for td in det:
        while p < len(gt) and gt[p] < td - tol:
            p += 1
        if p < len(gt) and gt[p] <= td + tol:
            tp += 1
            p += 1
    return CcrReport(tp, len(det) - tp, len(gt) - tp)


def evaluate(grid: GridMap, trajectories: TrajectorySet, placement, G: CoverageMatrix, config: EvalConfig,
             sensor: SensorModel | None = None) -> CcrReport:
    return compute_ccr(replay(grid, trajectories, placement, G, config, sensor), config.window_w_s)


def swap_interests(grid: GridMap, alternate) -> GridMap:
    """Grid with the interest annotation replaced.

    ``alternate`` is either a GridMap of the same shape (its Interest cells are
    used) or an iterable of cell-index collections, one per region.
    """
    labels = grid.labels.copy().ravel()
    labels[labels == CellLabel.INTEREST] = CellLabel.WALKABLE
    if isinstance(alternate, GridMap):
        if alternate.shape != grid.shape:
            raise ZoneplaceError(f"alternate annotation shape {alternate.shape} != grid shape {grid.shape}")
        new = alternate.flat_labels == CellLabel.INTEREST
    else:
        new = np.zeros(grid.n, dtype=bool)
        for region in alternate:
            new[list(region)] = True
    if np.any(new & ~np.isin(labels, [CellLabel.WALKABLE, CellLabel.INTEREST])):
        raise ZoneplaceError("alternate interest cells must be walkable in the original grid")
    labels[new] = CellLabel.INTEREST
    return grid.with_labels(labels.reshape(grid.shape))


def random_walk(grid: GridMap, pathgen: PathGenConfig, legs: int, seed: int) -> TrajectorySet:
    """Chained legs between uniformly drawn walkable cells; each leg starts where the last ended."""
    rng = path_rng(seed, 0, stream=1)
    model = CostModel(grid, pathgen)
    walkable = np.flatnonzero(grid.walkable_mask)
    if len(walkable) < 2:
        raise ZoneplaceError("random walk needs at least two walkable cells")
    here = int(walkable[rng.integers(len(walkable))])
    out = []
    stalls = 0
    while len(out) < legs:
        goal = int(walkable[rng.integers(len(walkable))])
        if goal == here:
            continue
        traj = route_pair(model, pathgen, rng, here, goal)
        if traj is None:
            stalls += 1
            if stalls > 100 * legs:
                raise ZoneplaceError("random walk stalled: walkable space is disconnected")
            continue
        out.append(traj)
        here = goal
    return TrajectorySet(tuple(out), grid)


def generate_eval_trajectories(grid: GridMap, config: EvalConfig, pathgen: PathGenConfig, seed: int,
                               alternate=None, num_paths: int | None = None) -> TrajectorySet:
    """Occupant trajectories for evaluation, per ``config.eval_source``."""
    n = num_paths if num_paths is not None else pathgen.resolved_num_paths(grid)
    cfg = replace(pathgen, rng_seed=seed, num_paths=n)
    if config.eval_source == "same_model":
        return generate_trajectories(grid, cfg)
    if config.eval_source == "alternate_interests":
        if alternate is None:
            raise ZoneplaceError("alternate_interests evaluation needs a substitute interest annotation")
        alt = swap_interests(grid, alternate)
        trajs = generate_trajectories(alt, replace(cfg, penalized_doors=pathgen.penalized_doors))
        return TrajectorySet(trajs.trajectories, grid)
    return random_walk(grid, cfg, n, seed)


def sweep_f(grid: GridMap, trajectories: TrajectorySet, G: CoverageMatrix, k: int, f_values,
            sensor: SensorModel | None = None, eval_trajectories: TrajectorySet | None = None,
            config: EvalConfig = EvalConfig(), time_limit_s: float = 900.0) -> list:
    """Re-filter, re-solve and re-score at fixed budget for each dilation radius.

    Returns one dict per f with keys f, objective, total_segments,
    coverage_rate, TP, FP, FN, ccr, optimal, chosen.
    """
    sensor = sensor or SensorModel()
    evals = eval_trajectories if eval_trajectories is not None else trajectories
    rows = []
    for f in f_values:
        P = filter_segments(trajectories, grid, FilterConfig(float(f)), sensor)
        problem = PlacementProblem.from_matrices(G, P, k)
        if problem.candidates:
            placement = pick_representatives(solve_bnb(problem, time_limit_s), problem, grid, G, P)
        else:
            placement = Placement((), 0, True, total_segments=P.p)
        rep = evaluate(grid, evals, placement, G, config, sensor)
        rows.append({
            "f": float(f), "objective": placement.objective, "total_segments": P.p,
            "coverage_rate": placement.coverage_rate, "TP": rep.tp, "FP": rep.fp, "FN": rep.fn,
            "ccr": rep.ccr, "optimal": placement.optimal, "chosen": placement.chosen,
        })
    return rows


def events_to_csv(events) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["time_s", "trajectory_id", "cell", "kind"])
    for e in events:
        w.writerow([f"{e.time_s:.6f}", e.trajectory_id, e.cell, e.kind])
    return buf.getvalue()


def rows_to_csv(rows, columns) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for row in rows:
        w.writerow(["%.6g" % row[c] if isinstance(row[c], float) else row[c] for c in columns])
    return buf.getvalue()
