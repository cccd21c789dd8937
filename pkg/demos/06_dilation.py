"""Dilation radius f on two neighbouring doors sharing one sensor.

With f = 0 the optimizer only sees crossing points and parks the sensor on
one door. With f near the footprint edge it sees the approach paths and
centers the sensor between the doors, which the extrapolating detector
turns into more correct counts.
"""

from _common import out_dir
from zoneplace.coverage import SensorModel, build_coverage_matrix, footprint_edge
from zoneplace.evaluator import EvalConfig, generate_eval_trajectories, sweep_f
from zoneplace.floorplan import parse_ascii
from zoneplace.pathgen import PathGenConfig, generate_trajectories
from zoneplace.render import save_sweep_chart

PLAN = """21 17 0.4
#####################
#.........#.........#
#.........#.........#
#..i......#......i..#
#.........#.........#
#.........#.........#
#.........#.........#
######bbb##bbb#######
#...................#
#...................#
#...................#
########....#########
########....#########
########....#########
########....#########
########iiii#########
#####################
"""

out = out_dir()
grid = parse_ascii(PLAN)
sensor = SensorModel()
G = build_coverage_matrix(grid, sensor)
pg = PathGenConfig(num_paths=200, rng_seed=0)
ts = generate_trajectories(grid, pg)
evals = generate_eval_trajectories(grid, EvalConfig(), pg, seed=1000, num_paths=200)

f_values = [0.0, 0.4, 0.8, 1.2, 1.6, footprint_edge(sensor), 3.0]
rows = sweep_f(grid, ts, G, 1, f_values, sensor, evals, EvalConfig(detector_mode="extrapolating"))
for row in rows:
    print(f"f={row['f']:.2f}: sensor at {[grid.rowcol(c) for c in row['chosen']]}  CCR {row['ccr']:.3f}")
save_sweep_chart(rows, out / "dilation_sweep.png", x="f", title="two doors, one sensor")
