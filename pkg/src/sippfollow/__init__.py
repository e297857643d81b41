"""Safe-interval planning, trajectory refinement and closed-loop tracking
for disk robots on grid maps with moving disk obstacles."""

from .audit import Violation, audit_plan, audit_trace, min_obstacle_separation
from .bench import (BenchConfig, BenchReport, BenchRow, emit_report,
                    run_benchmark)
from .geometry import (angular_distance, normalize_angle,
                       shortest_angular_step)
from .grid import (Configuration, DynamicObstacle, GridMap, Instance,
                   InstanceError, MapFormatError, dump_map,
                   line_of_sight_clear, load_instance, load_map,
                   load_map_file, obstacle_position_at, save_instance)
from .intervals import (CellTimeline, LinearMotion, ObstacleField,
                        SafeInterval, build_cell_timelines,
                        disk_collision_interval, earliest_safe_departure)
from .planner import (MODE_ANY_ANGLE, MODE_ANY_ANGLE_TIMED, MODE_SIPP, MODES,
                      Plan, PlanAction, heuristic, load_plan, plan,
                      rotation_time, save_plan)
from .refine import (PolynomialPiece, ReferenceTrajectory, axis_accel_bound,
                     cruise_velocity, refine_plan, refine_rotation,
                     refine_translation)
from .scenarios import (GenerationError, generate_instance, random_map,
                        warehouse_map)
from .sim import (ControlGains, RobotState, SimOutcome, SimulationDiverged,
                  control, export_trace_csv, rmse_metrics, simulate)

__version__ = "0.1.0"

__all__ = [
    "BenchConfig", "BenchReport", "BenchRow", "CellTimeline",
    "Configuration", "ControlGains", "DynamicObstacle", "GenerationError",
    "GridMap", "Instance", "InstanceError", "LinearMotion", "MapFormatError",
    "MODE_ANY_ANGLE", "MODE_ANY_ANGLE_TIMED", "MODE_SIPP", "MODES",
    "ObstacleField", "Plan", "PlanAction", "PolynomialPiece",
    "ReferenceTrajectory", "RobotState", "SafeInterval", "SimOutcome",
    "SimulationDiverged", "Violation", "angular_distance",
    "audit_plan", "audit_trace", "axis_accel_bound", "build_cell_timelines",
    "control", "cruise_velocity", "disk_collision_interval", "dump_map",
    "earliest_safe_departure", "emit_report", "export_trace_csv",
    "generate_instance", "heuristic", "line_of_sight_clear", "load_instance",
    "load_map", "load_map_file", "load_plan", "min_obstacle_separation",
    "normalize_angle", "obstacle_position_at", "plan", "random_map",
    "refine_plan", "refine_rotation", "refine_translation", "rmse_metrics",
    "rotation_time", "run_benchmark", "save_instance", "save_plan",
    "shortest_angular_step", "simulate", "warehouse_map",
]
