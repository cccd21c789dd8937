"""Solve the placement exactly, compare with greedy, and draw the footprints."""

from _common import demo_grid, out_dir
from zoneplace.coverage import SensorModel, build_coverage_matrix
from zoneplace.filtering import FilterConfig, filter_segments
from zoneplace.optimizer import PlacementProblem, pick_representatives, solve_bnb, solve_greedy
from zoneplace.pathgen import PathGenConfig, generate_trajectories
from zoneplace.render import save_overlay_png

out = out_dir()
grid = demo_grid("open_office")
sensor = SensorModel()
G = build_coverage_matrix(grid, sensor)
ts = generate_trajectories(grid, PathGenConfig(num_paths=200, rng_seed=0))
P = filter_segments(ts, grid, FilterConfig(), sensor)

problem = PlacementProblem.from_matrices(G, P, k=3)
print(f"{len(problem.candidates)} candidate classes after dedup and pruning ({len(G.candidates)} cells)")

greedy = solve_greedy(problem)
exact = pick_representatives(solve_bnb(problem), problem, grid, G, P)
print(f"greedy {greedy.objective}/{P.p}, branch and bound {exact.objective}/{P.p} "
      f"(optimal={exact.optimal}, {exact.nodes} nodes)")
print("sensors at", [grid.rowcol(c) for c in exact.chosen])
save_overlay_png(grid, exact, G, out / "placement.png")
