"""Trajectory-aware placement of ceiling occupancy sensors on grid floor plans."""

from .config import ConfigError, RunConfig, load_config
from .coverage import CoverageMatrix, SensorModel, build_coverage_matrix, covered_cells, footprint_edge
from .errors import (DimensionMismatch, EmptyImage, EmptySweep, FloorplanError, GenerationStalled,
                     InstanceTooLarge, InvalidPlacementCell, NoCandidates, NonPositiveScale, RegionOutOfRange,
                     UnknownColor, ZoneplaceError)
from .evaluator import (CcrReport, EvalConfig, TransitionEvent, compute_ccr, evaluate,
                        generate_eval_trajectories, replay, sweep_f)
from .filtering import FilterConfig, SegmentMatrix, dilate_boundaries, filter_segments
from .floorplan import CellLabel, GridMap, load_floorplan, load_grid, parse_ascii, validate_grid_step
from .optimizer import (Placement, PlacementProblem, benefit_values, brute_force, budget_select,
                        pick_representatives, solve_bnb, solve_greedy, sweep_budget)
from .pathgen import PathGenConfig, Trajectory, TrajectorySet, generate_trajectories, heatmap

__version__ = "0.1.0"
