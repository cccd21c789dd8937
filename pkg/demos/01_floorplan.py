"""Load an annotated floor plan from a PNG and check the grid step against the sensor footprint."""

from _common import DATA, demo_grid, out_dir
from zoneplace.coverage import SensorModel, footprint_edge
from zoneplace.floorplan import CellLabel, load_grid, validate_grid_step

out = out_dir()

# the bundled PNGs are drawn at 8 px per 0.4 m cell -> 20 px/m
grid = load_grid(DATA / "open_office.png", cell_size_m=0.4, pixels_per_meter=20)
print(f"{grid.width_cells} x {grid.height_cells} cells of {grid.cell_size_m} m")
for label in CellLabel:
    print(f"  {label.name.lower():9s} {int((grid.labels == label).sum()):5d}")
print("interest regions:", len(grid.interest_regions))

# the PNG and the ASCII version of the plan rasterize to the same grid
print("PNG == ASCII:", grid == demo_grid("open_office"))

sensor = SensorModel()
print(f"footprint edge {footprint_edge(sensor):.3f} m")
print(validate_grid_step(grid, sensor))
coarse = load_grid(DATA / "open_office.png", cell_size_m=0.5, pixels_per_meter=20)
print(validate_grid_step(coarse, sensor))

(out / "open_office.grid.json").write_text(grid.to_json())
