"""Safe-interval search over grid cells with optional any-angle moves and
timed in-place rotations.

Modes:
  - "sipp": cardinal moves between adjacent cells, rotations free.
  - "aa": adds diagonal neighbors and any-angle shortcuts through the
    expanded state's parent, rotations free.
  - "aat": any-angle moves plus in-place rotations charged at the robot's
    maximum turn rate before every translation.

States are (cell, safe-interval, heading) triples ordered by earliest
arrival. Successors are inserted with an optimistic arrival (ignoring
dynamic conflicts along the move) and validated against the obstacle field
when popped; a validated state whose arrival grew is pushed back. Duplicate
states are discarded at expansion when an already-expanded state at the same
cell and interval could reach the new state's heading no later than its
arrival.
"""

from __future__ import annotations

import bisect
import heapq
import itertools
import json
import math
from dataclasses import dataclass, field as dc_field

import numpy as np

from .geometry import angular_distance, normalize_angle
from .grid import Configuration, GridMap, Instance, line_of_sight_clear
from .intervals import (CellTimeline, ObstacleField, SafeInterval,
                        build_cell_timelines, first_free_time)

MODE_SIPP = "sipp"
MODE_ANY_ANGLE = "aa"
MODE_ANY_ANGLE_TIMED = "aat"
MODES = (MODE_SIPP, MODE_ANY_ANGLE, MODE_ANY_ANGLE_TIMED)

_CARDINAL = ((1, 0), (-1, 0), (0, 1), (0, -1))
_OCTILE = _CARDINAL + ((1, 1), (1, -1), (-1, 1), (-1, -1))


def heuristic(pos, goal, v_max: float) -> float:
    """Admissible time-to-go: straight-line distance at top speed."""
    return math.hypot(goal[0] - pos[0], goal[1] - pos[1]) / v_max


def rotation_time(heading_a: float, heading_b: float, omega_max: float) -> float:
    """Duration of the shortest in-place rotation between two headings."""
    return angular_distance(heading_a, heading_b) / omega_max


class SearchState:
    """One (cell, safe interval, heading) node of the search tree."""

    __slots__ = ("ix", "iy", "ivk", "interval", "heading", "g", "parent",
                 "move_time", "rot_time", "validated", "expanded")

    def __init__(self, ix, iy, ivk, interval, heading, g, parent,
                 move_time, rot_time, validated):
        self.ix = ix
        self.iy = iy
        self.ivk = ivk
        self.interval = interval
        self.heading = heading
        self.g = g
        self.parent = parent
        self.move_time = move_time
        self.rot_time = rot_time
        self.validated = validated
        self.expanded = False

    @property
    def cell(self) -> tuple[int, int]:
        return (self.ix, self.iy)


@dataclass(frozen=True)
class PlanAction:
    """One timed primitive of a plan: wait, rotate, or translate."""

    kind: str  # "wait" | "rotate" | "translate"
    t0: float
    t1: float
    x0: float
    y0: float
    theta0: float
    x1: float
    y1: float
    theta1: float

    def __post_init__(self):
        if self.kind not in ("wait", "rotate", "translate"):
            raise ValueError(f"unknown action kind {self.kind!r}")
        if not (self.t1 > self.t0):
            raise ValueError("action must have positive duration")


@dataclass(frozen=True)
class Plan:
    """Timed, collision-checked trajectory through cell centers.

    Actions tile [0, arrival_time] contiguously; the robot is assumed to
    stay at the final position forever after arrival.
    """

    actions: tuple[PlanAction, ...]
    arrival_time: float
    mode: str
    inflation: float
    start: Configuration
    goal: tuple[float, float]
    v_max: float
    omega_max: float
    stats: dict = dc_field(default_factory=dict, compare=False, repr=False)

    def __post_init__(self):
        t = 0.0
        x, y = self.start.x, self.start.y
        th = self.start.heading
        for a in self.actions:
            if abs(a.t0 - t) > 1e-6 or abs(a.x0 - x) > 1e-9 or \
               abs(a.y0 - y) > 1e-9 or angular_distance(a.theta0, th) > 1e-9:
                raise ValueError("plan actions are not contiguous")
            t, x, y, th = a.t1, a.x1, a.y1, a.theta1
        if abs(t - self.arrival_time) > 1e-6:
            raise ValueError("plan arrival time does not match actions")
        if abs(x - self.goal[0]) > 1e-9 or abs(y - self.goal[1]) > 1e-9:
            raise ValueError("plan does not end at the goal")

    def state_at(self, t: float) -> tuple[float, float, float]:
        """(x, y, theta) along the plan; clamped to the endpoints outside."""
        if t <= 0.0 or not self.actions:
            return (self.start.x, self.start.y, self.start.heading)
        for a in self.actions:
            if t <= a.t1:
                s = (t - a.t0) / (a.t1 - a.t0)
                th = a.theta0 + s * (a.theta1 - a.theta0)
                return (a.x0 + s * (a.x1 - a.x0), a.y0 + s * (a.y1 - a.y0), th)
        last = self.actions[-1]
        return (last.x1, last.y1, last.theta1)

    def positions_at(self, ts: np.ndarray) -> np.ndarray:
        """Vectorized positions along the plan, clamped after arrival."""
        n = len(self.actions)
        out = np.empty((len(ts), 2), dtype=float)
        if n == 0:
            out[:, 0] = self.start.x
            out[:, 1] = self.start.y
            return out
        bounds = np.array([a.t0 for a in self.actions] +
                          [self.actions[-1].t1], dtype=float)
        idx = np.clip(np.searchsorted(bounds, ts, side="right") - 1, 0, n - 1)
        x0 = np.array([a.x0 for a in self.actions])
        y0 = np.array([a.y0 for a in self.actions])
        x1 = np.array([a.x1 for a in self.actions])
        y1 = np.array([a.y1 for a in self.actions])
        t0 = bounds[:-1]
        dt = np.array([a.t1 - a.t0 for a in self.actions])
        s = np.clip((ts - t0[idx]) / dt[idx], 0.0, 1.0)
        out[:, 0] = x0[idx] + s * (x1[idx] - x0[idx])
        out[:, 1] = y0[idx] + s * (y1[idx] - y0[idx])
        return out


def save_plan(plan: Plan, path: str) -> None:
    doc = {
        "mode": plan.mode,
        "inflation": plan.inflation,
        "arrival_time": plan.arrival_time,
        "v_max": plan.v_max,
        "omega_max": plan.omega_max,
        "start": {"x": plan.start.x, "y": plan.start.y,
                  "theta": plan.start.heading},
        "goal": {"x": plan.goal[0], "y": plan.goal[1]},
        "actions": [
            {"kind": a.kind, "t0": a.t0, "t1": a.t1,
             "from": {"x": a.x0, "y": a.y0, "theta": a.theta0},
             "to": {"x": a.x1, "y": a.y1, "theta": a.theta1}}
            for a in plan.actions
        ],
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=2)
        fh.write("\n")


def load_plan(path: str) -> Plan:
    with open(path, "r", encoding="utf-8") as fh:
        doc = json.load(fh)
    actions = tuple(
        PlanAction(kind=a["kind"], t0=a["t0"], t1=a["t1"],
                   x0=a["from"]["x"], y0=a["from"]["y"],
                   theta0=a["from"]["theta"],
                   x1=a["to"]["x"], y1=a["to"]["y"], theta1=a["to"]["theta"])
        for a in doc["actions"])
    return Plan(actions=actions, arrival_time=doc["arrival_time"],
                mode=doc["mode"], inflation=doc["inflation"],
                start=Configuration(doc["start"]["x"], doc["start"]["y"],
                                    doc["start"]["theta"]),
                goal=(doc["goal"]["x"], doc["goal"]["y"]),
                v_max=doc.get("v_max", 1.0),
                omega_max=doc.get("omega_max", math.pi))


class _Search:
    def __init__(self, instance: Instance, mode: str, inflation: float,
                 v_max: float, omega_max: float,
                 field: ObstacleField,
                 timelines: dict[tuple[int, int], CellTimeline],
                 weight: float = 1.0, bound: float = math.inf):
        self.grid = instance.grid
        self.mode = mode
        self.v = v_max
        self.omega = omega_max
        self.radius = instance.robot_radius
        self.clearance_extra = instance.robot_radius + inflation
        self.field = field
        self.timelines = timelines
        self.goal = instance.goal
        self.goal_cell = instance.goal_cell
        self.start = instance.start
        self.timed = (mode == MODE_ANY_ANGLE_TIMED)
        self.neighbors = _CARDINAL if mode == MODE_SIPP else _OCTILE
        self.any_angle = mode in (MODE_ANY_ANGLE, MODE_ANY_ANGLE_TIMED)
        self.step_masks = self.grid.neighbor_step_masks(self.radius)
        # Statics-aware admissible lower bound: exact zero-clearance geodesic
        # distance to the goal cell center. Every search move is a straight
        # clearance-valid segment, so the metric triangle inequality makes
        # this consistent in all three modes; rotations and waits only add.
        gx, gy = self.grid.cell_center(*instance.goal_cell)
        self.h_time = self.grid.static_geodesic_field(gx, gy) * (1.0 / self.v)
        self.weight = weight
        self.bound = bound
        self.open: list = []
        self.seq = itertools.count()
        self.visited: dict[tuple[int, int, int], list[tuple[float, float]]] = {}
        self.expansions = 0
        self.generated = 0

    def center(self, ix: int, iy: int) -> tuple[float, float]:
        return self.grid.cell_center(ix, iy)

    def h(self, ix: int, iy: int) -> float:
        return float(self.h_time[iy, ix])

    def push(self, state: SearchState):
        self.generated += 1
        f = state.g + self.weight * self.h(state.ix, state.iy)
        # On f ties prefer larger g: states closer to the goal expand first.
        heapq.heappush(self.open, (f, -state.g, next(self.seq), state, state.g))

    def dominated(self, state: SearchState) -> bool:
        entries = self.visited.get((state.ix, state.iy, state.ivk))
        if not entries:
            return False
        glim = state.g + 1e-12
        if entries[0][0] > glim:
            return False  # entries sorted by g; rotation only adds time
        if not self.timed:
            return True
        heading = state.heading
        omega = self.omega
        two_pi = 2.0 * math.pi
        for g_prev, h_prev in entries:
            if g_prev > glim:
                break
            d = math.fmod(heading - h_prev, two_pi)
            if d < 0.0:
                d += two_pi
            if d > math.pi:
                d = two_pi - d
            if g_prev + d / omega <= glim:
                return True
        return False

    def record(self, state: SearchState):
        key = (state.ix, state.iy, state.ivk)
        entries = self.visited.get(key)
        if entries is None:
            self.visited[key] = [(state.g, state.heading)]
        else:
            bisect.insort(entries, (state.g, state.heading))

    def validate(self, state: SearchState) -> bool:
        """Recompute the exact earliest arrival of the popped state's incoming
        move; returns False if infeasible, True when state.g is now exact."""
        src = state.parent
        ready = src.g + state.rot_time
        iv_dst = state.interval
        lo = max(ready, iv_dst.begin - state.move_time)
        hi = min(src.interval.end, iv_dst.end - state.move_time)
        if lo > hi:
            return False
        starts, ends = self.field.busy_spans_for_move(
            src.cell, state.cell, self.v, self.clearance_extra)
        tau = first_free_time(starts, ends, lo, hi)
        if tau is None:
            return False
        g_before = state.g
        arrival = tau + state.move_time
        state.g = arrival
        state.validated = True
        if arrival > g_before + 1e-12:
            self.push(state)
            return False  # requeued with the exact, larger key
        return True

    def successors(self, state: SearchState):
        v = self.v
        bound = self.bound
        timed = self.timed
        grid_w = self.grid.width
        span_cache = self.field._span_cache
        span_key_tail = (v, self.clearance_extra)
        timelines = self.timelines
        sources = [state]
        if self.any_angle and state.parent is not None:
            sources.append(state.parent)
        for dx, dy in self.neighbors:
            qx, qy = state.ix + dx, state.iy + dy
            q_timeline = timelines.get((qx, qy))
            if q_timeline is None or not q_timeline.intervals:
                continue  # blocked or permanently occupied cell
            step_clear = bool(self.step_masks[(dx, dy)][state.iy, state.ix])
            if not step_clear and not self.any_angle:
                continue
            q_center = self.center(qx, qy)
            intervals = q_timeline.intervals
            h_q = float(self.h_time[qy, qx])
            q_id = qy * grid_w + qx
            for src in sources:
                if src.ix == qx and src.iy == qy:
                    continue
                a_center = self.center(src.ix, src.iy)
                if src is state:
                    if not step_clear:
                        continue
                elif not line_of_sight_clear(a_center, q_center, self.radius,
                                             self.grid):
                    continue
                dist = math.hypot(q_center[0] - a_center[0],
                                  q_center[1] - a_center[1])
                move_time = dist / v
                if timed:
                    direction = normalize_angle(
                        math.atan2(q_center[1] - a_center[1],
                                   q_center[0] - a_center[0]))
                    rot = rotation_time(src.heading, direction, self.omega)
                else:
                    direction = src.heading
                    rot = 0.0
                ready = src.g + rot
                src_end = src.interval.end
                if ready > src_end:
                    continue
                spans = span_cache.get(
                    (src.iy * grid_w + src.ix, q_id) + span_key_tail)
                if spans is not None:
                    # Edge spans already known: compute the exact earliest
                    # arrival now, skipping the optimistic insert-validate
                    # round trip entirely.
                    starts, ends = spans
                    for j, iv in enumerate(intervals):
                        if iv.end < ready + move_time:
                            continue
                        lo = max(ready, iv.begin - move_time)
                        if lo > src_end:
                            break  # later intervals start even later
                        if lo + move_time + h_q > bound:
                            break
                        hi = min(src_end, iv.end - move_time)
                        tau = first_free_time(starts, ends, lo, hi)
                        if tau is None:
                            continue
                        arrival = tau + move_time
                        if arrival + h_q > bound:
                            continue
                        succ = SearchState(qx, qy, j, iv, direction, arrival,
                                           src, move_time, rot, validated=True)
                        if not self.dominated(succ):
                            self.push(succ)
                else:
                    for j, iv in enumerate(intervals):
                        if iv.end < ready + move_time:
                            continue
                        tau_floor = max(ready, iv.begin - move_time)
                        if tau_floor > src_end:
                            break  # later intervals start even later
                        if tau_floor + move_time + h_q > bound:
                            break  # tau_floor only grows with j
                        succ = SearchState(
                            qx, qy, j, iv, direction,
                            tau_floor + move_time, src, move_time, rot,
                            validated=False)
                        if not self.dominated(succ):
                            self.push(succ)

    def run(self) -> SearchState | None:
        start_cell = self.grid.cell_of(self.start.x, self.start.y)
        tl = self.timelines.get(start_cell)
        if tl is None:
            return None
        k0 = tl.interval_containing(0.0)
        if k0 is None:
            return None
        root = SearchState(start_cell[0], start_cell[1], k0, tl.intervals[k0],
                           self.start.heading, 0.0, None, 0.0, 0.0,
                           validated=True)
        self.push(root)
        while self.open:
            _, _, _, state, g_push = heapq.heappop(self.open)
            if state.expanded or state.g != g_push:
                continue
            if state.g + self.h(state.ix, state.iy) > self.bound:
                continue
            # Cheap pre-check: an optimistic g only underestimates the exact
            # arrival, so a state dominated now stays dominated once exact.
            if self.dominated(state):
                continue
            if not state.validated:
                if not self.validate(state):
                    continue
                if self.dominated(state):
                    continue
            state.expanded = True
            self.record(state)
            self.expansions += 1
            if state.cell == self.goal_cell and state.interval.end == math.inf:
                return state
            self.successors(state)
        return None


def _reconstruct(goal_state: SearchState, search: _Search, mode: str,
                 inflation: float, instance: Instance,
                 v_max: float, omega_max: float) -> Plan:
    chain = []
    s = goal_state
    while s is not None:
        chain.append(s)
        s = s.parent
    chain.reverse()
    actions: list[PlanAction] = []
    for prev, cur in zip(chain, chain[1:]):
        px, py = search.center(prev.ix, prev.iy)
        cx, cy = search.center(cur.ix, cur.iy)
        depart = cur.g - cur.move_time
        t = prev.g
        heading = prev.heading
        if cur.rot_time > 1e-12:
            actions.append(PlanAction("rotate", t, t + cur.rot_time,
                                      px, py, heading, px, py, cur.heading))
            t += cur.rot_time
            heading = cur.heading
        if depart - t > 1e-9:
            actions.append(PlanAction("wait", t, depart,
                                      px, py, heading, px, py, heading))
            t = depart
        actions.append(PlanAction("translate", t, cur.g,
                                  px, py, cur.heading, cx, cy, cur.heading))
    return Plan(actions=tuple(actions), arrival_time=goal_state.g, mode=mode,
                inflation=inflation, start=instance.start, goal=instance.goal,
                v_max=v_max, omega_max=omega_max,
                stats={"expansions": search.expansions,
                       "generated": search.generated})


def plan(instance: Instance, mode: str = MODE_SIPP, inflation: float = 0.0,
         v_max: float | None = None, omega_max: float | None = None,
         field: ObstacleField | None = None,
         timelines: dict[tuple[int, int], CellTimeline] | None = None,
         ) -> Plan | None:
    """Search for an earliest-arrival collision-free plan.

    Returns None when the goal cannot be reached with the requested safety
    inflation. A reusable ObstacleField and precomputed cell timelines may be
    passed in to amortize setup across repeated queries on one instance.
    """
    if mode not in MODES:
        raise ValueError(f"unknown mode {mode!r}; expected one of {MODES}")
    if inflation < 0.0:
        raise ValueError("inflation must be non-negative")
    v = instance.v_max if v_max is None else float(v_max)
    omega = instance.omega_max if omega_max is None else float(omega_max)
    if v <= 0.0 or omega <= 0.0:
        raise ValueError("speed limits must be positive")
    if field is None:
        field = ObstacleField.from_obstacles(instance.obstacles)
    field.ensure_bucket(instance.grid,
                        instance.robot_radius + field.max_radius + inflation)
    if timelines is None:
        timelines = build_cell_timelines(instance.grid, instance.obstacles,
                                         instance.robot_radius, inflation,
                                         field=field)
    start_cell = instance.start_cell
    if start_cell == instance.goal_cell:
        tl = timelines.get(start_cell)
        k0 = tl.interval_containing(0.0) if tl else None
        if k0 is not None and tl.intervals[k0].end == math.inf:
            return Plan(actions=(), arrival_time=0.0, mode=mode,
                        inflation=inflation, start=instance.start,
                        goal=instance.goal, v_max=v, omega_max=omega,
                        stats={"expansions": 0, "generated": 0})
    search = _Search(instance, mode, inflation, v, omega, field, timelines)
    goal_state = search.run()
    if goal_state is None:
        return None
    return _reconstruct(goal_state, search, mode, inflation, instance, v, omega)
