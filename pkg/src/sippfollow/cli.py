"""Command-line interface.

Verbs: gen (random instances), plan, refine, simulate, bench.
Exit codes: 0 success, 1 pipeline failure, 2 bad arguments (argparse),
3 planner found no plan. --seed is accepted by every verb for interface
uniformity; verbs without randomness are deterministic regardless.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys

from .bench import BenchConfig, emit_report, run_benchmark
from .grid import dump_map, load_instance, load_map_file, save_instance
from .planner import MODES, load_plan, plan, save_plan
from .refine import refine_plan
from .scenarios import generate_instance, random_map, warehouse_map
from .sim import ControlGains, export_trace_csv, simulate

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_USAGE = 2
EXIT_NO_PLAN = 3


def _add_seed(p: argparse.ArgumentParser):
    p.add_argument("--seed", type=int, default=0,
                   help="random seed (verbs without randomness ignore it)")


def _build_parser() -> argparse.ArgumentParser:
    top = argparse.ArgumentParser(
        prog="sippfollow",
        description="Plan, refine, track and benchmark disk-robot "
                    "trajectories among moving obstacles.")
    sub = top.add_subparsers(dest="verb", required=True)

    g = sub.add_parser("gen", help="generate a map plus random instances")
    g.add_argument("--out", required=True, help="output directory")
    g.add_argument("--count", type=int, default=1, help="number of instances")
    g.add_argument("--width", type=int, default=46)
    g.add_argument("--height", type=int, default=70)
    g.add_argument("--cell-size", type=float, default=1.0)
    g.add_argument("--layout", choices=("warehouse", "random", "empty"),
                   default="warehouse")
    g.add_argument("--density", type=float, default=0.2,
                   help="blocked fraction for --layout random")
    g.add_argument("--map", help="reuse an existing map file instead of "
                                 "generating one")
    g.add_argument("--obstacles", type=int, default=128)
    g.add_argument("--horizon", type=float, default=60.0,
                   help="seconds of obstacle motion before they rest")
    g.add_argument("--speed", type=float, default=1.0,
                   help="obstacle cruise speed")
    g.add_argument("--min-start-goal-dist", type=float, default=0.0)
    g.add_argument("--headroom", type=float, default=0.6,
                   help="extra clearance reserved around start and goal")
    _add_seed(g)

    p = sub.add_parser("plan", help="plan a timed trajectory on an instance")
    p.add_argument("--instance", required=True)
    p.add_argument("--mode", choices=MODES, default="aat")
    p.add_argument("--inflate", type=float, default=0.0,
                   help="safety inflation added to dynamic clearances")
    p.add_argument("--out", required=True, help="plan JSON path")
    _add_seed(p)

    r = sub.add_parser("refine", help="refine a plan into a reference "
                                      "trajectory CSV")
    r.add_argument("--plan", required=True)
    r.add_argument("--amax", type=float, required=True,
                   help="acceleration bound along the motion direction")
    r.add_argument("--out", required=True, help="reference CSV path")
    r.add_argument("--dt", type=float, default=1e-3, help="CSV sample step")
    _add_seed(r)

    s = sub.add_parser("simulate", help="track a refined plan in closed loop")
    s.add_argument("--plan", required=True)
    s.add_argument("--instance", required=True,
                   help="instance JSON for collision checking")
    s.add_argument("--amax", type=float, required=True)
    s.add_argument("--lambda1", type=float, default=-4.0)
    s.add_argument("--lambda2", type=float, default=-5.0)
    s.add_argument("--dt", type=float, default=1e-3)
    s.add_argument("--clamp", type=float, default=None,
                   help="optional per-axis acceleration clamp on the "
                        "commanded input")
    s.add_argument("--feedforward", action="store_true",
                   help="add the reference acceleration to the command")
    s.add_argument("--out", required=True, help="trace CSV path")
    _add_seed(s)

    b = sub.add_parser("bench", help="run an inflation/acceleration sweep")
    b.add_argument("--config", help="BenchConfig JSON; defaults when omitted")
    b.add_argument("--out", help="write the report here (stdout otherwise)")
    b.add_argument("--format", choices=("table", "csv"), default="table")
    b.add_argument("--instances", type=int, default=None,
                   help="override the configured instance count")
    b.add_argument("--workers", type=int, default=None)
    _add_seed(b)
    return top


def _cmd_gen(args) -> int:
    os.makedirs(args.out, exist_ok=True)
    if args.map:
        grid = load_map_file(args.map)
        map_path = os.path.abspath(args.map)
        map_rel = map_path
    else:
        if args.layout == "warehouse":
            grid = warehouse_map(args.width, args.height, args.cell_size)
        elif args.layout == "random":
            grid = random_map(args.width, args.height, args.cell_size,
                              args.density, args.seed)
        else:
            grid = random_map(args.width, args.height, args.cell_size,
                              0.0, args.seed)
        map_path = os.path.join(args.out, "map.txt")
        with open(map_path, "w", encoding="utf-8") as fh:
            fh.write(dump_map(grid))
        map_rel = "map.txt"
        print(map_path)
    for k in range(args.count):
        inst = generate_instance(
            grid, args.obstacles, args.seed + k, horizon=args.horizon,
            obstacle_speed=args.speed,
            min_start_goal_dist=args.min_start_goal_dist,
            endpoint_headroom=args.headroom)
        path = os.path.join(args.out, f"instance_{k:03d}.json")
        save_instance(inst, path, map_rel)
        print(path)
    return EXIT_OK


def _cmd_plan(args) -> int:
    inst = load_instance(args.instance)
    result = plan(inst, mode=args.mode, inflation=args.inflate)
    if result is None:
        print("no plan found", file=sys.stderr)
        return EXIT_NO_PLAN
    save_plan(result, args.out)
    print(f"arrival {result.arrival_time:.3f} s, "
          f"{len(result.actions)} actions -> {args.out}")
    return EXIT_OK


def _cmd_refine(args) -> int:
    p = load_plan(args.plan)
    reference = refine_plan(p, args.amax)
    for w in reference.warnings:
        print(f"warning: {w}", file=sys.stderr)
    reference.to_csv(args.out, dt=args.dt)
    print(f"reference over {reference.t_end:.3f} s "
          f"(overrun {reference.overrun_total:.3f} s) -> {args.out}")
    return EXIT_OK


def _cmd_simulate(args) -> int:
    p = load_plan(args.plan)
    inst = load_instance(args.instance)
    reference = refine_plan(p, args.amax)
    outcome = simulate(reference, inst,
                       gains=ControlGains(args.lambda1, args.lambda2),
                       dt=args.dt, accel_limit=args.clamp,
                       feedforward=args.feedforward)
    export_trace_csv(outcome, args.out, inst)
    status = "success" if outcome.success else \
        f"{len(outcome.collisions)} collision episode(s)"
    rmse1 = f"{outcome.rmse_plan:.5f}" if outcome.rmse_plan is not None else "-"
    print(f"{status}; rmse vs plan {rmse1}, vs reference "
          f"{outcome.rmse_ref:.5f} -> {args.out}")
    for c in outcome.collisions:
        who = "static" if c.kind == "static" else f"obstacle {c.obstacle}"
        print(f"  contact at t={c.t:.3f} s with {who} "
              f"(distance {c.distance:.3f} < {c.clearance:.3f})",
              file=sys.stderr)
    return EXIT_OK


def _cmd_bench(args) -> int:
    if args.config:
        config = BenchConfig.from_json(args.config)
    else:
        config = BenchConfig()
    overrides = {}
    if args.instances is not None:
        overrides["n_instances"] = args.instances
    if args.workers is not None:
        overrides["workers"] = args.workers
    if args.seed:
        overrides["seed"] = args.seed
    if overrides:
        import dataclasses
        config = dataclasses.replace(config, **overrides)
    report = run_benchmark(
        config,
        progress=lambda i, n: print(f"instance {i}/{n}", file=sys.stderr))
    text = emit_report(report, fmt=args.format)
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    if math.isnan(sum(r.success_rate for r in report.rows)):
        print("warning: some sweep cells have no planned instances",
              file=sys.stderr)
    if report.sim_failures:
        print(f"error: {report.sim_failures} simulation(s) diverged",
              file=sys.stderr)
        return EXIT_FAILURE
    return EXIT_OK


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    handlers = {"gen": _cmd_gen, "plan": _cmd_plan, "refine": _cmd_refine,
                "simulate": _cmd_simulate, "bench": _cmd_bench}
    try:
        return handlers[args.verb](args)
    except Exception as exc:  # noqa: BLE001 - CLI boundary
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAILURE


if __name__ == "__main__":
    sys.exit(main())
