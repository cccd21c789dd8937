"""Score placements designed on one behavior model against occupants who behave differently."""

from _common import DATA, demo_grid
from zoneplace.coverage import SensorModel, build_coverage_matrix
from zoneplace.evaluator import EvalConfig, evaluate, generate_eval_trajectories
from zoneplace.filtering import FilterConfig, filter_segments
from zoneplace.floorplan import load_grid
from zoneplace.optimizer import PlacementProblem, pick_representatives, sweep_budget
from zoneplace.pathgen import PathGenConfig, generate_trajectories

grid = demo_grid()
alt = load_grid(DATA / "corridor_office_alt.txt")  # same rooms, desks moved
G = build_coverage_matrix(grid, SensorModel())
pg = PathGenConfig(num_paths=200, rng_seed=0)
P = filter_segments(generate_trajectories(grid, pg), grid, FilterConfig())
problem = PlacementProblem.from_matrices(G, P, 1)

sources = ("same_model", "alternate_interests", "random_walk")
evals = {s: generate_eval_trajectories(grid, EvalConfig(eval_source=s), pg, 1000, alternate=alt, num_paths=200)
         for s in sources}
print("k  " + "  ".join(f"{s:>19s}" for s in sources))
for k, placement in sweep_budget(problem, range(1, 9)):
    placement = pick_representatives(placement, problem, grid, G, P)
    ccr = [evaluate(grid, evals[s], placement, G, EvalConfig()).ccr for s in sources]
    print(f"{k}  " + "  ".join(f"{c:19.3f}" for c in ccr))
