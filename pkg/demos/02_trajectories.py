"""Simulate occupant trajectories and render their heatmap."""

from collections import Counter

import numpy as np

from _common import demo_grid, out_dir
from zoneplace.pathgen import PathGenConfig, generate_trajectories, heatmap
from zoneplace.render import save_heatmap_png, write_pgm16

out = out_dir()
grid = demo_grid()

cfg = PathGenConfig(num_paths=500, rng_seed=0)
ts = generate_trajectories(grid, cfg, threads=2)
lengths = np.array([t.length_m for t in ts])
print(f"{len(ts)} paths, mean length {lengths.mean():.1f} m, longest {lengths.max():.1f} m")

# the same endpoint pair routes differently under different random blockings
pair, n = Counter(t.endpoints for t in ts).most_common(1)[0]
routes = {t.cells for t in ts if t.endpoints == pair}
print(f"most frequent endpoint pair drawn {n} times, {len(routes)} distinct routes")

counts = heatmap(ts)
r, c = np.unravel_index(counts.argmax(), counts.shape)
print(f"busiest cell ({r}, {c}) visited {counts.max()} times")
write_pgm16(counts, out / "heatmap.pgm")
save_heatmap_png(counts, out / "heatmap.png", grid)
(out / "trajectories.jsonl").write_text(ts.to_jsonl())
