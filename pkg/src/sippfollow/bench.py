"""Benchmark harness: sweep safety inflation and acceleration limits over a
population of random instances, tracking success rate, RMSE, and plan cost.

Per instance, one plan is computed for every inflation value and every plan
is refined and tracked once per acceleration limit. Plan cost is normalized
by the same instance's zero-inflation arrival time. Instances where planning
fails at some inflation are excluded from that inflation's denominators and
counted separately. All aggregation is done in instance order, so results
are reproducible for a fixed seed regardless of worker count.
"""

from __future__ import annotations

import dataclasses
import io
import json
import math
import time
from dataclasses import dataclass

from .audit import audit_plan
from .grid import GridMap, load_map_file
from .intervals import ObstacleField, build_cell_timelines
from .planner import MODES, plan
from .refine import refine_plan
from .scenarios import generate_instance, warehouse_map
from .sim import ControlGains, SimulationDiverged, simulate


@dataclass(frozen=True)
class BenchConfig:
    """Parameters of one benchmark sweep."""

    width: int = 46
    height: int = 70
    cell_size: float = 1.0
    map_path: str | None = None  # when set, overrides the generated layout
    n_obstacles: int = 128
    n_instances: int = 100
    mode: str = "aat"
    a_max_values: tuple[float, ...] = (5.0, 8.0, 15.0)
    inflation_values: tuple[float, ...] = (0.0, 0.05, 0.1, 0.2, 0.5)
    lambda1: float = -4.0
    lambda2: float = -5.0
    sim_dt: float = 1e-3
    v_max: float = 1.0
    omega_max: float = math.pi
    seed: int = 0
    horizon: float = 60.0
    wait_prob: float = 0.15
    momentum: float = 0.6
    min_start_goal_dist: float = 20.0
    endpoint_headroom: float = 0.6
    audit_plans: bool = True
    workers: int = 1

    def __post_init__(self):
        if self.mode not in MODES:
            raise ValueError(f"unknown mode {self.mode!r}")
        if not self.a_max_values or not self.inflation_values:
            raise ValueError("need at least one a_max and one inflation value")
        object.__setattr__(self, "a_max_values",
                           tuple(float(a) for a in self.a_max_values))
        object.__setattr__(self, "inflation_values",
                           tuple(float(d) for d in self.inflation_values))

    @classmethod
    def from_json(cls, path: str) -> "BenchConfig":
        with open(path, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = set(doc) - known
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        return cls(**doc)

    def to_json(self, path: str) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(dataclasses.asdict(self), fh, indent=2)
            fh.write("\n")


@dataclass(frozen=True)
class BenchRow:
    """Aggregate over all instances for one (a_max, inflation) pair."""

    a_max: float
    inflation: float
    n_planned: int
    n_no_plan: int
    success_rate: float
    rmse_plan: float
    rmse_ref: float
    cost_ratio: float | None  # arrival time relative to zero inflation


@dataclass(frozen=True)
class BenchReport:
    rows: tuple[BenchRow, ...]
    plan_audit_violations: int
    sim_failures: int
    runtime_s: float
    config: BenchConfig


def _instance_seed(seed: int, index: int) -> int:
    return (seed * 1_000_003 + index) % (2 ** 63)


def run_instance(config: BenchConfig, grid: GridMap, index: int) -> dict:
    """Plan, refine and track one random instance across the full sweep."""
    inst = generate_instance(
        grid, config.n_obstacles, _instance_seed(config.seed, index),
        horizon=config.horizon, wait_prob=config.wait_prob,
        momentum=config.momentum, v_max=config.v_max,
        omega_max=config.omega_max,
        min_start_goal_dist=config.min_start_goal_dist,
        endpoint_headroom=config.endpoint_headroom)
    field = ObstacleField.from_obstacles(inst.obstacles)
    # One bucket build covers every inflation in the sweep.
    field.ensure_bucket(grid, inst.robot_radius + field.max_radius
                        + max(config.inflation_values))
    gains = ControlGains(config.lambda1, config.lambda2)
    arrivals: dict[float, float | None] = {}
    runs: dict[tuple[float, float], dict] = {}
    audit_violations = 0
    sim_failures = 0
    for delta in config.inflation_values:
        timelines = build_cell_timelines(grid, inst.obstacles,
                                         inst.robot_radius, delta, field=field)
        p = plan(inst, mode=config.mode, inflation=delta,
                 field=field, timelines=timelines)
        if p is None:
            arrivals[delta] = None
            continue
        arrivals[delta] = p.arrival_time
        if config.audit_plans:
            audit_violations += len(audit_plan(p, inst))
        for a_max in config.a_max_values:
            reference = refine_plan(p, a_max)
            try:
                outcome = simulate(reference, inst, gains=gains,
                                   dt=config.sim_dt)
            except SimulationDiverged:
                sim_failures += 1
                continue
            runs[(a_max, delta)] = {
                "success": outcome.success,
                "rmse_plan": outcome.rmse_plan,
                "rmse_ref": outcome.rmse_ref,
            }
    return {"arrivals": arrivals, "runs": runs,
            "audit_violations": audit_violations,
            "sim_failures": sim_failures}


def run_benchmark(config: BenchConfig, progress=None) -> BenchReport:
    """Execute the sweep and aggregate one row per (a_max, inflation)."""
    t_start = time.perf_counter()
    if config.map_path:
        grid = load_map_file(config.map_path)
    else:
        grid = warehouse_map(config.width, config.height, config.cell_size)
    indices = list(range(config.n_instances))
    if config.workers > 1:
        import functools
        import multiprocessing as mp
        with mp.get_context("fork").Pool(config.workers) as pool:
            results = pool.map(functools.partial(run_instance, config, grid),
                               indices)
    else:
        results = []
        for i in indices:
            results.append(run_instance(config, grid, i))
            if progress is not None:
                progress(i + 1, config.n_instances)
    rows = []
    base = 0.0 in config.inflation_values
    for a_max in config.a_max_values:
        for delta in config.inflation_values:
            successes = []
            rmse1 = []
            rmse2 = []
            ratios = []
            n_no_plan = 0
            for res in results:
                if res["arrivals"].get(delta) is None:
                    n_no_plan += 1
                    continue
                run = res["runs"].get((a_max, delta))
                if run is None:
                    continue  # simulation failure, counted separately
                successes.append(1.0 if run["success"] else 0.0)
                rmse1.append(run["rmse_plan"])
                rmse2.append(run["rmse_ref"])
                arr0 = res["arrivals"].get(0.0)
                if base and arr0:
                    ratios.append(res["arrivals"][delta] / arr0)
            n = len(successes)
            rows.append(BenchRow(
                a_max=a_max, inflation=delta, n_planned=n,
                n_no_plan=n_no_plan,
                success_rate=(sum(successes) / n) if n else math.nan,
                rmse_plan=(sum(rmse1) / n) if n else math.nan,
                rmse_ref=(sum(rmse2) / n) if n else math.nan,
                cost_ratio=(sum(ratios) / len(ratios)) if ratios else None))
    return BenchReport(
        rows=tuple(rows),
        plan_audit_violations=sum(r["audit_violations"] for r in results),
        sim_failures=sum(r["sim_failures"] for r in results),
        runtime_s=time.perf_counter() - t_start,
        config=config)


def emit_report(report: BenchReport, fmt: str = "table") -> str:
    """Render a report as an aligned table or as CSV text."""
    if not report.rows:
        raise ValueError("report has no rows")
    if fmt == "csv":
        buf = io.StringIO()
        buf.write("a_max,inflation,n_planned,n_no_plan,success_rate,"
                  "rmse_plan,rmse_ref,cost_ratio\n")
        for r in report.rows:
            cost = f"{r.cost_ratio:.6f}" if r.cost_ratio is not None else ""
            buf.write(f"{r.a_max:g},{r.inflation:g},{r.n_planned},"
                      f"{r.n_no_plan},{r.success_rate:.6f},"
                      f"{r.rmse_plan:.6f},{r.rmse_ref:.6f},{cost}\n")
        return buf.getvalue()
    if fmt != "table":
        raise ValueError(f"unknown report format {fmt!r}")
    lines = [f"{'a_max':>6} {'delta':>6} {'n':>4} {'noplan':>6} "
             f"{'success':>8} {'rmse_plan':>10} {'rmse_ref':>10} {'cost':>8}"]
    for r in report.rows:
        cost = f"{r.cost_ratio:8.4f}" if r.cost_ratio is not None else "       -"
        lines.append(f"{r.a_max:6g} {r.inflation:6g} {r.n_planned:4d} "
                     f"{r.n_no_plan:6d} {r.success_rate:8.3f} "
                     f"{r.rmse_plan:10.5f} {r.rmse_ref:10.5f} {cost}")
    lines.append(f"plan audit violations: {report.plan_audit_violations}  "
                 f"sim failures: {report.sim_failures}  "
                 f"runtime: {report.runtime_s:.1f} s")
    return "\n".join(lines) + "\n"
