"""Randomized, penalty-weighted A* occupant trajectories between interest regions."""

from __future__ import annotations

import heapq
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy import ndimage

from .errors import GenerationStalled, ZoneplaceError
from .floorplan import CellLabel, GridMap, pick_interest_point

SQRT2 = math.sqrt(2.0)
_NEIGHBORS = ((-1, -1), (-1, 0), (-1, 1), (0, -1), (0, 1), (1, -1), (1, 0), (1, 1))
STALL_REDRAWS_PER_PATH = 100


@dataclass(frozen=True)
class PathGenConfig:
    num_paths: int | None = None  # None -> 25 per m^2 of walkable floor
    block_fraction: float = 0.10
    door_penalty_m: float = 3.0
    wall_clearance_m: float = 0.50
    wall_multiplier: float = 1.2
    rng_seed: int = 0
    max_resample_attempts: int = 10
    penalized_doors: tuple | None = None  # doorway cells carrying the surcharge; None = every doorway

    def __post_init__(self):
        if not 0 <= self.block_fraction < 1:
            raise ValueError("block_fraction must lie in [0, 1)")
        if self.wall_multiplier < 1:
            raise ValueError("wall_multiplier must be >= 1")
        if self.door_penalty_m < 0:
            raise ValueError("door_penalty_m must be >= 0")
        if self.num_paths is not None and self.num_paths < 1:
            raise ValueError("num_paths must be >= 1")
        if self.max_resample_attempts < 0:
            raise ValueError("max_resample_attempts must be >= 0")

    def resolved_num_paths(self, grid: GridMap) -> int:
        if self.num_paths is not None:
            return self.num_paths
        area = float(grid.walkable_mask.sum()) * grid.cell_size_m ** 2
        return max(1, int(round(25 * area)))


@dataclass(frozen=True)
class Trajectory:
    cells: tuple
    cumulative_dist_m: tuple
    endpoints: tuple = (-1, -1)  # interest-region ids; -1 when not drawn from a region

    @property
    def length_m(self) -> float:
        return self.cumulative_dist_m[-1]

    def __len__(self):
        return len(self.cells)


@dataclass(frozen=True, eq=False)
class TrajectorySet:
    trajectories: tuple
    grid: GridMap = field(repr=False)

    def __len__(self):
        return len(self.trajectories)

    def __iter__(self):
        return iter(self.trajectories)

    def __getitem__(self, k):
        return self.trajectories[k]

    def __eq__(self, other):
        if not isinstance(other, TrajectorySet):
            return NotImplemented
        return self.trajectories == other.trajectories

    __hash__ = None

    def to_jsonl(self) -> str:
        lines = []
        for t, traj in enumerate(self.trajectories):
            lines.append(json.dumps({"id": t, "regions": list(traj.endpoints), "cells": list(traj.cells)},
                                    separators=(",", ":")))
        return "\n".join(lines) + ("\n" if lines else "")

    @classmethod
    def from_jsonl(cls, text: str, grid: GridMap) -> "TrajectorySet":
        trajs = []
        for line in text.splitlines():
            if not line.strip():
                continue
            doc = json.loads(line)
            cells = tuple(int(c) for c in doc["cells"])
            trajs.append(Trajectory(cells, geometric_cumulative(cells, grid), tuple(doc.get("regions", (-1, -1)))))
        return cls(tuple(trajs), grid)


def geometric_cumulative(cells, grid: GridMap) -> tuple:
    w, s = grid.width_cells, grid.cell_size_m
    out = [0.0]
    for u, v in zip(cells[:-1], cells[1:]):
        ru, cu = divmod(u, w)
        rv, cv = divmod(v, w)
        if max(abs(ru - rv), abs(cu - cv)) != 1:
            raise ZoneplaceError(f"cells {u} and {v} are not 8-adjacent")
        out.append(out[-1] + (s * SQRT2 if ru != rv and cu != cv else s))
    return tuple(out)


class CostModel:
    """Static part of the cost field: adjacency with penalized edge costs.

    ``neighbors[u]`` lists ``(v, geometric_m, cost_m)``. Diagonal steps that
    would cut the corner of a wall or obstacle are excluded.
    """

    def __init__(self, grid: GridMap, config: PathGenConfig):
        self.grid = grid
        self.config = config
        H, W = grid.shape
        s = grid.cell_size_m
        labels = grid.labels
        self.passable = grid.walkable_mask.copy()
        door = grid.flat_labels == CellLabel.DOORWAY
        if config.penalized_doors is None:
            charged = door
        else:
            charged = np.zeros(grid.n, dtype=bool)
            charged[list(config.penalized_doors)] = True
            charged &= door
        self.door = door
        self.charged_door = charged

        walls = labels == CellLabel.WALL
        if walls.any():
            wall_dist = ndimage.distance_transform_edt(~walls).ravel() * s
        else:
            wall_dist = np.full(grid.n, np.inf)
        self.wall_dist = wall_dist
        near = wall_dist <= config.wall_clearance_m + 1e-9
        self.multiplier = np.where(near, config.wall_multiplier, 1.0)

        centers = grid.centers()
        self.x = centers[:, 0].tolist()
        self.y = centers[:, 1].tolist()

        passable2d = self.passable.reshape(H, W)
        mult = self.multiplier.tolist()
        door_l = door.tolist()
        charged_l = charged.tolist()
        surcharge = config.door_penalty_m
        nbrs = [[] for _ in range(grid.n)]
        for r, c in zip(*np.nonzero(passable2d)):
            r, c = int(r), int(c)
            u = r * W + c
            out = nbrs[u]
            for dr, dc in _NEIGHBORS:
                rv, cv = r + dr, c + dc
                if not (0 <= rv < H and 0 <= cv < W) or not passable2d[rv, cv]:
                    continue
                if dr and dc and not (passable2d[r, cv] and passable2d[rv, c]):
                    continue
                v = rv * W + cv
                geo = s * SQRT2 if dr and dc else s
                cost = geo * mult[v]
                if charged_l[v] and not door_l[u]:
                    cost += surcharge
                out.append((v, geo, cost))
        self.neighbors = nbrs

    def edge(self, u: int, v: int):
        for w, geo, cost in self.neighbors[u]:
            if w == v:
                return geo, cost
        raise KeyError((u, v))


@dataclass(frozen=True, eq=False)
class CostField:
    model: CostModel
    blocked: np.ndarray  # flat bool, randomly blocked cells for this run

    @property
    def grid(self) -> GridMap:
        return self.model.grid

    def edge_cost(self, u: int, v: int) -> float:
        if self.blocked[u] or self.blocked[v]:
            return math.inf
        return self.model.edge(u, v)[1]

    def path_cost(self, cells) -> float:
        return sum(self.edge_cost(u, v) for u, v in zip(cells[:-1], cells[1:]))


def build_cost_field(grid: GridMap, config: PathGenConfig, rng: np.random.Generator,
                     keep_open=(), model: CostModel | None = None) -> CostField:
    """Fresh random block set over the penalized 8-connected walkable graph.

    ``keep_open`` cells (the run's endpoints) are never blocked.
    """
    if model is None:
        model = CostModel(grid, config)
    blocked = np.zeros(grid.n, dtype=bool)
    walkable = np.flatnonzero(model.passable)
    count = int(math.floor(config.block_fraction * len(walkable)))
    if count:
        pool = np.setdiff1d(walkable, np.asarray(keep_open, dtype=np.int64), assume_unique=True)
        count = min(count, len(pool))
        blocked[rng.choice(pool, size=count, replace=False)] = True
    blocked.flags.writeable = False
    return CostField(model, blocked)


def shortest_path(cost_field: CostField, start: int, goal: int, endpoints=(-1, -1)) -> Trajectory | None:
    """A* with a Euclidean heuristic; None when the pair is disconnected."""
    start, goal = int(start), int(goal)
    model = cost_field.model
    blocked = cost_field.blocked
    if not model.passable[start] or not model.passable[goal] or blocked[start] or blocked[goal]:
        return None
    if start == goal:
        return Trajectory((start,), (0.0,), tuple(endpoints))
    xs, ys = model.x, model.y
    gx, gy = xs[goal], ys[goal]
    nbrs = model.neighbors
    blocked_l = blocked.tolist()
    hypot = math.hypot

    g = {start: 0.0}
    parent = {start: (-1, 0.0)}
    closed = set()
    heap = [(hypot(xs[start] - gx, ys[start] - gy), start)]
    while heap:
        _, u = heapq.heappop(heap)
        if u in closed:
            continue
        if u == goal:
            break
        closed.add(u)
        gu = g[u]
        for v, geo, cost in nbrs[u]:
            if blocked_l[v] or v in closed:
                continue
            ng = gu + cost
            if ng < g.get(v, math.inf):
                g[v] = ng
                parent[v] = (u, geo)
                heapq.heappush(heap, (ng + hypot(xs[v] - gx, ys[v] - gy), v))
    else:
        return None

    cells, steps = [], []
    v = goal
    while v != -1:
        u, geo = parent[v]
        cells.append(v)
        steps.append(geo)
        v = u
    cells.reverse()
    steps.reverse()  # steps[0] belongs to start and is 0
    cum = np.cumsum([0.0] + steps[1:]).tolist()
    return Trajectory(tuple(cells), tuple(cum), tuple(endpoints))


def route_pair(model: CostModel, config: PathGenConfig, rng: np.random.Generator, start: int, goal: int,
               endpoints=(-1, -1)) -> Trajectory | None:
    """Path a fixed endpoint pair, resampling the block set on failure."""
    for _ in range(config.max_resample_attempts + 1):
        field_ = build_cost_field(model.grid, config, rng, keep_open=(start, goal), model=model)
        traj = shortest_path(field_, start, goal, endpoints)
        if traj is not None:
            return traj
    return None


def path_rng(seed: int, index: int, stream: int = 0) -> np.random.Generator:
    return np.random.default_rng([int(seed) & 0xFFFFFFFFFFFFFFFF, int(stream), int(index)])


def _one_path(grid: GridMap, config: PathGenConfig, model: CostModel, index: int) -> Trajectory:
    rng = path_rng(config.rng_seed, index)
    nreg = len(grid.interest_regions)
    for _ in range(STALL_REDRAWS_PER_PATH + 1):
        a, b = (int(v) for v in rng.choice(nreg, size=2, replace=False))
        start = pick_interest_point(grid, a, rng)
        goal = pick_interest_point(grid, b, rng)
        traj = route_pair(model, config, rng, start, goal, (a, b))
        if traj is not None:
            return traj
    raise GenerationStalled(
        f"path {index}: no connected interest-region pair after {STALL_REDRAWS_PER_PATH} redraws"
    )


def _generate_range(grid: GridMap, config: PathGenConfig, indices) -> list:
    model = CostModel(grid, config)
    return [_one_path(grid, config, model, k) for k in indices]


def generate_trajectories(grid: GridMap, config: PathGenConfig, threads: int = 1) -> TrajectorySet:
    """Simulate ``num_paths`` trajectories between random interest-region pairs.

    Path ``k`` draws from its own RNG stream seeded by ``(rng_seed, k)``, so
    the result does not depend on ``threads``.
    """
    if len(grid.interest_regions) < 2:
        raise ZoneplaceError("need at least two interest regions to generate trajectories")
    total = config.resolved_num_paths(grid)
    if threads <= 1 or total < 2 * threads:
        return TrajectorySet(tuple(_generate_range(grid, config, range(total))), grid)
    chunks = [range(lo, min(total, lo + -(-total // threads))) for lo in range(0, total, -(-total // threads))]
    with ProcessPoolExecutor(max_workers=threads) as pool:
        parts = list(pool.map(_generate_range, [grid] * len(chunks), [config] * len(chunks), chunks))
    return TrajectorySet(tuple(t for part in parts for t in part), grid)


def heatmap(trajectories: TrajectorySet) -> np.ndarray:
    """Visit counts per cell, shaped like the grid."""
    grid = trajectories.grid
    counts = np.zeros(grid.n, dtype=np.int64)
    for traj in trajectories:
        np.add.at(counts, np.asarray(traj.cells, dtype=np.int64), 1)
    return counts.reshape(grid.shape)
