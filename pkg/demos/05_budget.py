"""Sweep the sensor budget, compare objective with measured CCR, and pick k by the benefit rule."""

from scipy.stats import spearmanr

from _common import demo_grid, out_dir
from zoneplace.coverage import SensorModel, build_coverage_matrix
from zoneplace.evaluator import EvalConfig, evaluate, generate_eval_trajectories
from zoneplace.filtering import FilterConfig, filter_segments
from zoneplace.optimizer import PlacementProblem, budget_select, pick_representatives, sweep_budget
from zoneplace.pathgen import PathGenConfig, generate_trajectories
from zoneplace.render import save_sweep_chart

out = out_dir()
grid = demo_grid("open_office")
G = build_coverage_matrix(grid, SensorModel())
pg = PathGenConfig(num_paths=200, rng_seed=0)
P = filter_segments(generate_trajectories(grid, pg), grid, FilterConfig())
evals = generate_eval_trajectories(grid, EvalConfig(), pg, seed=1000, num_paths=200)

problem = PlacementProblem.from_matrices(G, P, 1)
rows = []
for k, placement in sweep_budget(problem, range(1, 9)):
    placement = pick_representatives(placement, problem, grid, G, P)
    ccr = evaluate(grid, evals, placement, G, EvalConfig()).ccr
    rows.append({"k": k, "objective": placement.objective, "coverage_rate": placement.coverage_rate, "ccr": ccr})
    print(f"k={k}: coverage {placement.coverage_rate:.3f}  CCR {ccr:.3f}")

rho = spearmanr([r["coverage_rate"] for r in rows], [r["ccr"] for r in rows]).correlation
print(f"Spearman rho {rho:.3f}")
sweep = [(r["k"], r["objective"]) for r in rows]
for alpha in (0.05, 0.005):
    print(f"alpha {alpha}: k* = {budget_select(sweep, P.p, alpha)}")
save_sweep_chart(rows, out / "budget_sweep.png", title="open office")
