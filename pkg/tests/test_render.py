import numpy as np
from PIL import Image

from zoneplace.coverage import SensorModel, build_coverage_matrix
from zoneplace.render import (heatmap_rgb, overlay_image, ramp, read_pgm16, save_heatmap_png, save_sweep_chart,
                              write_pgm16)


def test_pgm_round_trip(tmp_path, rng):
    counts = rng.integers(0, 70000, size=(5, 7))
    write_pgm16(counts, tmp_path / "h.pgm")
    raw = (tmp_path / "h.pgm").read_bytes()
    assert raw.startswith(b"P5\n7 5\n65535\n") and len(raw) == len(b"P5\n7 5\n65535\n") + 70
    assert np.array_equal(read_pgm16(tmp_path / "h.pgm"), np.minimum(counts, 65535))


def test_ramp_endpoints():
    assert ramp(np.array([0.0])).tolist() == [[0, 0, 0]]
    assert ramp(np.array([1.0])).tolist() == [[252, 255, 164]]


def test_heatmap_png(tmp_path, corridor_office):
    counts = np.zeros(corridor_office.shape, dtype=int)
    counts[11, 5:30] = 10
    rgb = heatmap_rgb(counts, corridor_office)
    assert rgb.shape == corridor_office.shape + (3,)
    assert rgb[0, 0].tolist() == [0, 0, 0]  # wall stays black
    save_heatmap_png(counts, tmp_path / "h.png", corridor_office, px=4)
    with Image.open(tmp_path / "h.png") as im:
        assert im.size == (corridor_office.width_cells * 4, corridor_office.height_cells * 4)


def test_overlay_draws_boxes(corridor_office):
    G = build_coverage_matrix(corridor_office, SensorModel())
    j = corridor_office.index(11, 20)
    img = np.asarray(overlay_image(corridor_office, (j,), G, px=8))
    blue = np.all(img == [0, 60, 255], axis=2)
    assert blue.any()
    ys, xs = np.nonzero(blue)
    # box edge is the footprint edge 2.041 m = 5.1 cells = ~41 px
    assert 38 <= xs.max() - xs.min() <= 44


def test_sweep_chart(tmp_path):
    rows = [{"k": k, "coverage_rate": min(1, k / 4), "ccr": min(1, k / 5)} for k in range(1, 9)]
    save_sweep_chart(rows, tmp_path / "s.png")
    assert (tmp_path / "s.png").stat().st_size > 1000
