"""zoneplace command line: ingest, pipeline, sweep, budget, eval, render.

Exit codes: 0 success, 1 internal error, 2 user-input error, 3 time limit hit
(the incumbent placement is still written).
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
import time
import traceback
from pathlib import Path

from .config import ConfigError, RunConfig, load_config, parse_float_list, parse_int_range
from .coverage import build_coverage_matrix, footprint_edge, save_coverage
from .errors import ZoneplaceError
from .evaluator import (compute_ccr, evaluate, events_to_csv, generate_eval_trajectories, replay, rows_to_csv,
                        sweep_f)
from .filtering import filter_segments
from .floorplan import GridMap, load_grid, validate_grid_step
from .optimizer import (PlacementProblem, Placement, benefit_values, budget_select, pick_representatives,
                        iter_sweep_budget, solve_bnb)
from .pathgen import TrajectorySet, generate_trajectories, heatmap
from . import render

EXIT_OK, EXIT_INTERNAL, EXIT_USER, EXIT_TIME_LIMIT = 0, 1, 2, 3

K_COLUMNS = ["k", "objective", "total_segments", "coverage_rate", "optimal", "nodes", "seconds",
             "TP", "FP", "FN", "ccr"]
F_COLUMNS = ["f", "k", "objective", "total_segments", "coverage_rate", "optimal", "TP", "FP", "FN", "ccr"]


class UserError(Exception):
    pass


def _dump(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def _out_dir(cfg: RunConfig) -> Path:
    if not cfg.out:
        raise UserError("--out is required")
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _grid(cfg: RunConfig) -> GridMap:
    if not cfg.grid:
        raise UserError("--grid is required")
    path = Path(cfg.grid)
    if not path.exists():
        raise UserError(f"grid file not found: {path}")
    return load_grid(path, cfg.cell_size_m, cfg.pixels_per_meter)


def _check_step(grid: GridMap, cfg: RunConfig) -> None:
    report = validate_grid_step(grid, cfg.sensor)
    if not report.ok:
        print(f"warning: {report}", file=sys.stderr)


def _alternate(cfg: RunConfig, grid: GridMap):
    if cfg.eval.eval_source != "alternate_interests":
        return None
    if not cfg.alternate:
        raise UserError("eval_source alternate_interests needs --alternate (a grid with the substitute interests)")
    return load_grid(cfg.alternate, cfg.cell_size_m, cfg.pixels_per_meter)


def _eval_trajectories(cfg: RunConfig, grid: GridMap, design: TrajectorySet) -> TrajectorySet:
    n = cfg.eval_paths if cfg.eval_paths is not None else len(design)
    return generate_eval_trajectories(grid, cfg.eval, cfg.pathgen, cfg.resolved_eval_seed,
                                      alternate=_alternate(cfg, grid), num_paths=n)


def _placement_doc(placement: Placement, grid: GridMap, cfg: RunConfig, f: float) -> dict:
    doc = placement.to_dict(grid)
    doc.update(k=cfg.k, dilation_f_m=round(f, 12), seed=cfg.seed, footprint_edge_m=round(footprint_edge(cfg.sensor), 12))
    return doc


def _ccr_doc(report, cfg: RunConfig) -> dict:
    doc = report.to_dict()
    doc.update(detector_mode=cfg.eval.detector_mode, eval_source=cfg.eval.eval_source,
               window_w_s=cfg.eval.window_w_s, eval_seed=cfg.resolved_eval_seed)
    return doc


# -- subcommands ----------------------------------------------------------------

def cmd_ingest(cfg: RunConfig) -> int:
    grid = _grid(cfg)
    out = _out_dir(cfg)
    (out / "grid.json").write_text(grid.to_json())
    report = validate_grid_step(grid, cfg.sensor)
    lines = [f"cells: {grid.width_cells} x {grid.height_cells} at {grid.cell_size_m:g} m",
             f"interest regions: {len(grid.interest_regions)}",
             f"boundary cells: {int(grid.boundary_mask.sum())}",
             str(report)]
    (out / "validation.txt").write_text("\n".join(lines) + "\n")
    if not report.ok:
        print(f"warning: {report}", file=sys.stderr)
    print(f"wrote {out / 'grid.json'}")
    return EXIT_OK


def run_pipeline(cfg: RunConfig) -> tuple:
    """Full design run -> (placement, ccr report, {stage: seconds}); writes every artifact to cfg.out."""
    timing = {}
    t = time.perf_counter()
    grid = _grid(cfg)
    out = _out_dir(cfg)
    _check_step(grid, cfg)
    timing["load"] = time.perf_counter() - t

    t = time.perf_counter()
    trajs = generate_trajectories(grid, cfg.pathgen, threads=cfg.threads)
    (out / "trajectories.jsonl").write_text(trajs.to_jsonl())
    counts = heatmap(trajs)
    render.write_pgm16(counts, out / "heatmap.pgm")
    render.save_heatmap_png(counts, out / "heatmap.png", grid)
    timing["pathgen"] = time.perf_counter() - t

    t = time.perf_counter()
    G = build_coverage_matrix(grid, cfg.sensor)
    save_coverage(G, out / "coverage.bin", cfg.sensor, grid)
    timing["coverage"] = time.perf_counter() - t

    t = time.perf_counter()
    P = filter_segments(trajs, grid, cfg.filter, cfg.sensor)
    P.save(out / "segments.bin")
    timing["filter"] = time.perf_counter() - t

    t = time.perf_counter()
    problem = PlacementProblem.from_matrices(G, P, cfg.k)
    placement = pick_representatives(solve_bnb(problem, cfg.time_limit_s), problem, grid, G, P)
    (out / "placement.json").write_text(_dump(_placement_doc(placement, grid, cfg, P.dilation_f_m)))
    timing["optimize"] = time.perf_counter() - t

    t = time.perf_counter()
    evals = _eval_trajectories(cfg, grid, trajs)
    events = replay(grid, evals, placement, G, cfg.eval, cfg.sensor)
    report = compute_ccr(events, cfg.eval.window_w_s)
    (out / "ccr.json").write_text(_dump(_ccr_doc(report, cfg)))
    (out / "events.csv").write_text(events_to_csv(events))
    timing["evaluate"] = time.perf_counter() - t

    render.save_overlay_png(grid, placement, G, out / "overlay.png", edge_m=footprint_edge(cfg.sensor))
    (out / "timing.json").write_text(_dump({"seconds": {k: round(v, 4) for k, v in timing.items()},
                                            "solver_seconds": round(placement.seconds, 4),
                                            "threads": cfg.threads}))
    (out / "config.ini").write_text(cfg.to_ini())
    return placement, report, timing


def cmd_pipeline(cfg: RunConfig) -> int:
    placement, report, _ = run_pipeline(cfg)
    print(f"placement: {list(placement.chosen)}  objective {placement.objective}/{placement.total_segments} "
          f"({placement.coverage_rate:.3f})  optimal={placement.optimal}")
    print(f"CCR {report.ccr:.4f}  TP {report.tp}  FP {report.fp}  FN {report.fn}")
    if not placement.optimal:
        print(f"time limit reached: incumbent returned with gap {placement.gap}", file=sys.stderr)
        return EXIT_TIME_LIMIT
    return EXIT_OK


def _design(cfg: RunConfig):
    grid = _grid(cfg)
    _check_step(grid, cfg)
    trajs = generate_trajectories(grid, cfg.pathgen, threads=cfg.threads)
    G = build_coverage_matrix(grid, cfg.sensor)
    return grid, trajs, G


def run_k_sweep(cfg: RunConfig, out_csv: Path | None = None) -> list:
    grid, trajs, G = _design(cfg)
    P = filter_segments(trajs, grid, cfg.filter, cfg.sensor)
    problem = PlacementProblem.from_matrices(G, P, 1)
    evals = _eval_trajectories(cfg, grid, trajs)
    rows = []
    fh = open(out_csv, "w", newline="") if out_csv else None
    try:
        if fh:
            fh.write(",".join(K_COLUMNS) + "\n")
        for k, placement in iter_sweep_budget(problem, cfg.k_range, cfg.time_limit_s):
            placement = pick_representatives(placement, problem, grid, G, P)
            rep = evaluate(grid, evals, placement, G, cfg.eval, cfg.sensor)
            row = {"k": k, "objective": placement.objective, "total_segments": placement.total_segments,
                   "coverage_rate": placement.coverage_rate, "optimal": placement.optimal,
                   "nodes": placement.nodes, "seconds": placement.seconds,
                   "TP": rep.tp, "FP": rep.fp, "FN": rep.fn, "ccr": rep.ccr, "chosen": placement.chosen}
            rows.append(row)
            if fh:
                # flushed per row so partial results survive an interrupted sweep
                fh.write(rows_to_csv([row], K_COLUMNS).split("\n", 1)[1])
                fh.flush()
    finally:
        if fh:
            fh.close()
    return rows


def run_f_sweep(cfg: RunConfig) -> list:
    grid, trajs, G = _design(cfg)
    evals = _eval_trajectories(cfg, grid, trajs)
    rows = sweep_f(grid, trajs, G, cfg.k, cfg.f_values, cfg.sensor, evals, cfg.eval, cfg.time_limit_s)
    for row in rows:
        row["k"] = cfg.k
    return rows


def cmd_sweep(cfg: RunConfig, f_sweep: bool) -> int:
    out = _out_dir(cfg)
    if f_sweep:
        rows = run_f_sweep(cfg)
        (out / "sweep_f.csv").write_text(rows_to_csv(rows, F_COLUMNS))
        render.save_sweep_chart(rows, out / "sweep_f.png", x="f")
        name = "sweep_f.csv"
    else:
        rows = run_k_sweep(cfg, out / "sweep.csv")
        render.save_sweep_chart(rows, out / "sweep.png", x="k")
        name = "sweep.csv"
    for row in rows:
        key = f"f={row['f']:g}" if f_sweep else f"k={row['k']}"
        print(f"{key}: coverage {row['coverage_rate']:.3f}  CCR {row['ccr']:.3f}")
    print(f"wrote {out / name}")
    return EXIT_OK if all(row["optimal"] for row in rows) else EXIT_TIME_LIMIT


def read_sweep_csv(path) -> tuple:
    """-> ([(k, objective)], total_segments) from a sweep CSV."""
    path = Path(path)
    if not path.exists():
        raise UserError(f"sweep CSV not found: {path}")
    try:
        with open(path, newline="") as fh:
            reader = csv.DictReader(fh)
            rows = [(int(r["k"]), int(r["objective"]), int(r["total_segments"])) for r in reader]
    except (KeyError, ValueError, TypeError, csv.Error) as exc:
        raise UserError(f"malformed sweep CSV {path}: {exc}") from None
    if not rows:
        raise UserError(f"sweep CSV {path} has no rows")
    totals = {t for _, _, t in rows}
    if len(totals) != 1 or totals.pop() <= 0:
        raise UserError(f"sweep CSV {path}: total_segments must be one positive value")
    return [(k, obj) for k, obj, _ in rows], rows[0][2]


def cmd_budget(cfg: RunConfig, csv_path) -> int:
    sweep, total = read_sweep_csv(csv_path)
    for k, value in benefit_values(sweep, total, cfg.alpha):
        print(f"k={k}: benefit {value:.6f}")
    print(f"k* = {budget_select(sweep, total, cfg.alpha)} (alpha = {cfg.alpha:g})")
    return EXIT_OK


def _load_placement(path, grid: GridMap) -> tuple:
    try:
        doc = json.loads(Path(path).read_text())
        return tuple(int(c) for c in doc["chosen"])
    except FileNotFoundError:
        raise UserError(f"placement file not found: {path}") from None
    except (KeyError, ValueError, TypeError) as exc:
        raise UserError(f"malformed placement file {path}: {exc}") from None


def cmd_eval(cfg: RunConfig, placement_path) -> int:
    grid = _grid(cfg)
    out = _out_dir(cfg)
    chosen = _load_placement(placement_path, grid)
    G = build_coverage_matrix(grid, cfg.sensor)
    n = cfg.eval_paths if cfg.eval_paths is not None else cfg.pathgen.resolved_num_paths(grid)
    evals = generate_eval_trajectories(grid, cfg.eval, cfg.pathgen, cfg.resolved_eval_seed,
                                       alternate=_alternate(cfg, grid), num_paths=n)
    events = replay(grid, evals, chosen, G, cfg.eval, cfg.sensor)
    report = compute_ccr(events, cfg.eval.window_w_s)
    name = f"ccr_{cfg.eval.eval_source}_{cfg.eval.detector_mode}"
    (out / f"{name}.json").write_text(_dump(_ccr_doc(report, cfg)))
    (out / f"{name}_events.csv").write_text(events_to_csv(events))
    print(f"CCR {report.ccr:.4f}  TP {report.tp}  FP {report.fp}  FN {report.fn}")
    return EXIT_OK


def cmd_render(cfg: RunConfig, trajectories=None, placement=None, sweep=None) -> int:
    out = _out_dir(cfg)
    if not (trajectories or placement or sweep):
        raise UserError("render needs at least one of --trajectories, --placement, --sweep")
    if trajectories or placement:
        grid = _grid(cfg)
    if trajectories:
        try:
            trajs = TrajectorySet.from_jsonl(Path(trajectories).read_text(), grid)
        except FileNotFoundError:
            raise UserError(f"trajectory file not found: {trajectories}") from None
        counts = heatmap(trajs)
        render.write_pgm16(counts, out / "heatmap.pgm")
        render.save_heatmap_png(counts, out / "heatmap.png", grid)
    if placement:
        chosen = _load_placement(placement, grid)
        G = build_coverage_matrix(grid, cfg.sensor)
        render.save_overlay_png(grid, chosen, G, out / "overlay.png", edge_m=footprint_edge(cfg.sensor))
    if sweep:
        path = Path(sweep)
        if not path.exists():
            raise UserError(f"sweep CSV not found: {path}")
        with open(path, newline="") as fh:
            rows = list(csv.DictReader(fh))
        x = "k" if rows and "k" in rows[0] and "f" not in rows[0] else "f"
        try:
            rows = [{x: float(r[x]), "coverage_rate": float(r["coverage_rate"]), "ccr": float(r["ccr"])} for r in rows]
        except (KeyError, ValueError) as exc:
            raise UserError(f"malformed sweep CSV {path}: {exc}") from None
        render.save_sweep_chart(rows, out / f"{path.stem}.png", x=x)
    print(f"wrote images to {out}")
    return EXIT_OK


# -- argument handling ----------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="INI config file; flags override its values")
    common.add_argument("--grid", help="floor plan: ASCII (.txt), grid JSON, or an image")
    common.add_argument("--out", help="output directory")
    common.add_argument("--seed", type=int, help="design trajectory seed")
    common.add_argument("--eval-seed", type=int, help="evaluation trajectory seed (default seed + 1)")
    common.add_argument("--paths", type=int, help="number of design trajectories")
    common.add_argument("--eval-paths", type=int, help="number of evaluation trajectories")
    common.add_argument("--alpha", type=float, help="sensor cost weight for budget selection")
    common.add_argument("--threads", type=int, help="worker processes for trajectory generation")
    common.add_argument("--time-limit", type=float, help="solver time limit in seconds")
    common.add_argument("--detector-mode", choices=["conservative", "extrapolating"])
    common.add_argument("--eval-source", choices=["same_model", "alternate_interests", "random_walk"])
    common.add_argument("--alternate", help="grid whose interest cells drive alternate_interests evaluation")
    common.add_argument("--cell-size", type=float, help="cell size in m when ingesting an image")
    common.add_argument("--ppm", type=float, help="image pixels per meter")
    common.add_argument("--print-config", action="store_true", help="print the resolved configuration and exit")

    parser = argparse.ArgumentParser(prog="zoneplace", description="Trajectory-aware occupancy sensor placement.")
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("ingest", parents=[common], help="rasterize a floor plan image into a grid file")
    p = sub.add_parser("pipeline", parents=[common], help="trajectories -> coverage -> segments -> placement -> CCR")
    p.add_argument("--k", type=int, help="sensor budget")
    p.add_argument("--f", type=float, help="boundary dilation radius in m (default: footprint edge)")
    p = sub.add_parser("sweep", parents=[common], help="solve and score over a budget range or a list of f")
    p.add_argument("--k", help="budget range '1..8' or list '1,2,4' (fixed budget when --f is given)")
    p.add_argument("--f", help="comma separated dilation radii: sweep f at fixed --k")
    p = sub.add_parser("budget", parents=[common], help="pick k from a sweep CSV by the benefit rule")
    p.add_argument("csv", help="sweep CSV written by 'zoneplace sweep'")
    p = sub.add_parser("eval", parents=[common], help="score a saved placement")
    p.add_argument("--placement", required=False, help="placement.json from the pipeline")
    p.add_argument("--k", type=int, help=argparse.SUPPRESS)
    p.add_argument("--f", type=float, help=argparse.SUPPRESS)
    p = sub.add_parser("render", parents=[common], help="re-render images from saved artifacts")
    p.add_argument("--trajectories", help="trajectories.jsonl -> heatmap.pgm / heatmap.png")
    p.add_argument("--placement", help="placement.json -> overlay.png")
    p.add_argument("--sweep", help="sweep CSV -> line chart")
    return parser


def _resolve(args) -> tuple:
    text = None
    if args.config:
        try:
            text = Path(args.config).read_text(encoding="utf-8")
        except OSError as exc:
            raise UserError(f"cannot read config {args.config}: {exc}") from None
    over = {"grid": args.grid, "out": args.out, "seed": args.seed, "eval_seed": args.eval_seed,
            "eval_paths": args.eval_paths, "alpha": args.alpha, "threads": args.threads,
            "time_limit_s": args.time_limit, "alternate": args.alternate, "cell_size_m": args.cell_size,
            "pixels_per_meter": args.ppm, "pathgen.num_paths": args.paths,
            "eval.detector_mode": args.detector_mode, "eval.eval_source": args.eval_source}
    f_sweep = False
    k_arg = getattr(args, "k", None)
    f_arg = getattr(args, "f", None)
    if args.command == "sweep":
        if f_arg is not None:
            f_sweep = True
            over["f_values"] = parse_float_list(f_arg)
            if k_arg is not None:
                over["k"] = int(k_arg)
        elif k_arg is not None:
            over["k_range"] = parse_int_range(k_arg)
    else:
        over["k"] = k_arg
        if f_arg is not None:
            over["filter.dilation_f_m"] = f_arg
    return load_config(text, over), f_sweep


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg, f_sweep = _resolve(args)
        if args.print_config:
            sys.stdout.write(cfg.to_ini())
            return EXIT_OK
        if args.command == "ingest":
            return cmd_ingest(cfg)
        if args.command == "pipeline":
            return cmd_pipeline(cfg)
        if args.command == "sweep":
            return cmd_sweep(cfg, f_sweep)
        if args.command == "budget":
            return cmd_budget(cfg, args.csv)
        if args.command == "eval":
            if not args.placement:
                raise UserError("eval needs --placement")
            return cmd_eval(cfg, args.placement)
        return cmd_render(cfg, args.trajectories, args.placement, args.sweep)
    except (UserError, ConfigError, ZoneplaceError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USER
    except Exception:  # noqa: BLE001 - report and map to the internal-error code
        traceback.print_exc()
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
