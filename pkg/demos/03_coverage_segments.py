"""Build the coverage matrix and the transition segments that the optimizer counts."""

import numpy as np

from _common import demo_grid
from zoneplace.coverage import SensorModel, build_coverage_matrix, candidate_visibility
from zoneplace.filtering import FilterConfig, dilate_boundaries, filter_segments
from zoneplace.pathgen import PathGenConfig, generate_trajectories

grid = demo_grid()
sensor = SensorModel()
G = build_coverage_matrix(grid, sensor)
sizes = np.array([row.bit_count() for row in G.rows])
print(f"{len(G.candidates)} candidate cells; footprint size min {sizes.min()} / max {sizes.max()} cells")

# a sensor next to a wall sees less than one in open floor
print("open floor sees", len(candidate_visibility(grid, sensor, grid.index(4, 40))), "cells;",
      "by the corridor wall", len(candidate_visibility(grid, sensor, grid.index(10, 40))))

ts = generate_trajectories(grid, PathGenConfig(num_paths=200, rng_seed=0))
for f in (0.0, 0.8, None):
    P = filter_segments(ts, grid, FilterConfig(f), sensor)
    band = dilate_boundaries(grid, P.dilation_f_m)
    mean_len = np.mean([len(P.cells(t)) for t in range(P.p)])
    print(f"f = {P.dilation_f_m:.2f} m: band {int(band.sum())} cells, {P.p} segments, mean {mean_len:.1f} cells")
