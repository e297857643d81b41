"""Independent collision audits for plans and executed traces.

Audits sample positions on a fixed time grid and test the disk clearance
rules directly, without any of the planner's interval machinery. Dynamic
checks prune work with a coarse pass first: between two coarse samples the
center distance cannot drop by more than the relative speed bound times half
the window, so windows that stay provably clear are skipped. Every flagged
window is then checked at full resolution, which makes the result identical
to checking every sample.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .grid import GridMap, Instance
from .planner import Plan


@dataclass(frozen=True)
class Violation:
    """First sample of one contiguous episode of clearance violation."""

    t: float
    kind: str  # "static" | "dynamic"
    obstacle: int | None
    distance: float
    clearance: float


def static_clearance_distances(grid: GridMap, xs: np.ndarray, ys: np.ndarray,
                               radius: float) -> np.ndarray:
    """Distance from each sample to the nearest blocked cell or map edge.

    Exact for all distances up to one cell beyond ``radius``; larger values
    are reported as the scan cap, which is all the clearance tests need.
    """
    l = grid.cell_size
    w, h = grid.extent
    reach = int(math.ceil(radius / l))
    cap = (reach + 1) * l
    # Signed wall margin: negative when the center has left the map.
    wall = np.minimum.reduce([xs, ys, w - xs, h - ys])
    ix = np.floor(xs / l).astype(np.int64)
    iy = np.floor(ys / l).astype(np.int64)
    blocked = grid.blocked
    d2_best = np.full(len(xs), cap * cap)
    for oy in range(-reach, reach + 1):
        jy = iy + oy
        for ox in range(-reach, reach + 1):
            jx = ix + ox
            inb = (jx >= 0) & (jx < grid.width) & (jy >= 0) & (jy < grid.height)
            hit = np.zeros(len(xs), dtype=bool)
            hit[inb] = blocked[jy[inb], jx[inb]]
            if not hit.any():
                continue
            bx0 = jx[hit] * l
            by0 = jy[hit] * l
            dx = np.maximum.reduce([bx0 - xs[hit], xs[hit] - (bx0 + l),
                                    np.zeros(int(hit.sum()))])
            dy = np.maximum.reduce([by0 - ys[hit], ys[hit] - (by0 + l),
                                    np.zeros(int(hit.sum()))])
            d2 = dx * dx + dy * dy
            d2_best[hit] = np.minimum(d2_best[hit], d2)
    return np.minimum(np.sqrt(d2_best), np.minimum(wall, cap))


def _episodes_from_indices(idx: np.ndarray) -> list[tuple[int, int]]:
    """Split sorted sample indices into (first, count) runs of consecutive ones."""
    if len(idx) == 0:
        return []
    cuts = np.nonzero(np.diff(idx) > 1)[0]
    starts = np.concatenate(([0], cuts + 1))
    ends = np.concatenate((cuts, [len(idx) - 1]))
    return [(int(idx[s]), int(e - s + 1)) for s, e in zip(starts, ends)]


def _obstacle_speed_bound(obstacle) -> float:
    t = obstacle.times
    if len(t) < 2:
        return 0.0
    dt = np.diff(t)
    vx = np.diff(obstacle.xs) / dt
    vy = np.diff(obstacle.ys) / dt
    return float(np.sqrt(vx * vx + vy * vy).max())


def dynamic_contact_episodes(times: np.ndarray, xs: np.ndarray, ys: np.ndarray,
                             obstacles, clearances, grace: float = 1e-9,
                             coarse_stride: int = 50) -> list[Violation]:
    """Episodes where a sampled path gets strictly closer than the clearance
    to any obstacle center. clearances is one threshold per obstacle."""
    n = len(times)
    if n == 0 or not obstacles:
        return []
    step = float(times[1] - times[0]) if n > 1 else 0.0
    if n > 2:
        dxs = np.diff(xs)
        dys = np.diff(ys)
        robot_speed = float(np.sqrt(dxs * dxs + dys * dys).max()) / step \
            if step > 0 else 0.0
    else:
        robot_speed = 0.0
    coarse_idx = np.arange(0, n, coarse_stride)
    if coarse_idx[-1] != n - 1:
        coarse_idx = np.append(coarse_idx, n - 1)
    cx = xs[coarse_idx]
    cy = ys[coarse_idx]
    ct = times[coarse_idx]
    out: list[Violation] = []
    for k, obs in enumerate(obstacles):
        clearance = float(clearances[k])
        pos_c = obs.positions_at(ct)
        dc = np.hypot(cx - pos_c[:, 0], cy - pos_c[:, 1])
        v_rel = robot_speed + _obstacle_speed_bound(obs)
        ends_min = np.minimum(dc[:-1], dc[1:])
        spans = ct[1:] - ct[:-1]
        flagged = np.nonzero(ends_min - 0.5 * v_rel * spans
                             < clearance + 1e-9)[0]
        if len(flagged) == 0:
            continue
        bad_idx_parts = []
        for w in flagged:
            s = coarse_idx[w]
            e = coarse_idx[w + 1] + 1
            sub_t = times[s:e]
            pos = obs.positions_at(sub_t)
            d = np.hypot(xs[s:e] - pos[:, 0], ys[s:e] - pos[:, 1])
            bad = np.nonzero(d < clearance - grace)[0]
            if len(bad):
                bad_idx_parts.append(bad + s)
        if not bad_idx_parts:
            continue
        bad_idx = np.unique(np.concatenate(bad_idx_parts))
        for first, _count in _episodes_from_indices(bad_idx):
            pos = obs.position_at(float(times[first]))
            d = math.hypot(xs[first] - pos[0], ys[first] - pos[1])
            out.append(Violation(float(times[first]), "dynamic", k, d, clearance))
    out.sort(key=lambda v: v.t)
    return out


def static_contact_episodes(grid: GridMap, times: np.ndarray,
                            xs: np.ndarray, ys: np.ndarray,
                            radius: float, grace: float = 1e-9,
                            ) -> list[Violation]:
    dist = static_clearance_distances(grid, xs, ys, radius)
    bad = np.nonzero(dist < radius - grace)[0]
    return [Violation(float(times[first]), "static", None,
                      float(dist[first]), radius)
            for first, _ in _episodes_from_indices(bad)]


def audit_plan(plan: Plan, instance: Instance, dt: float = 1e-3,
               grace: float = 1e-9) -> list[Violation]:
    """Resample a plan on a fixed grid and check every clearance rule.

    The robot is held at the goal after arrival and the audit extends until
    one second after the last obstacle comes to rest, so goal parking is
    covered. Static clearance is the robot radius; dynamic clearance adds
    the obstacle radius and the plan's safety inflation.
    """
    horizon = plan.arrival_time + 1.0
    for obs in instance.obstacles:
        horizon = max(horizon, float(obs.times[-1]) + 1.0)
    n = int(math.ceil(horizon / dt))
    times = np.arange(n + 1) * dt
    pos = plan.positions_at(times)
    xs, ys = pos[:, 0], pos[:, 1]
    out = static_contact_episodes(instance.grid, times, xs, ys,
                                  instance.robot_radius, grace)
    clearances = [instance.robot_radius + obs.radius + plan.inflation
                  for obs in instance.obstacles]
    out.extend(dynamic_contact_episodes(times, xs, ys, instance.obstacles,
                                        clearances, grace))
    out.sort(key=lambda v: v.t)
    return out


def audit_trace(times: np.ndarray, xs: np.ndarray, ys: np.ndarray,
                instance: Instance, grace: float = 1e-9,
                refine_factor: int = 1) -> list[Violation]:
    """Audit an executed trace against the true (uninflated) clearances.

    With refine_factor > 1 the trace is linearly upsampled first, which
    catches contacts that slip between trace samples.
    """
    if refine_factor > 1:
        fine = np.linspace(times[0], times[-1],
                           (len(times) - 1) * refine_factor + 1)
        xs = np.interp(fine, times, xs)
        ys = np.interp(fine, times, ys)
        times = fine
    out = static_contact_episodes(instance.grid, times, xs, ys,
                                  instance.robot_radius, grace)
    clearances = [instance.robot_radius + obs.radius
                  for obs in instance.obstacles]
    out.extend(dynamic_contact_episodes(times, xs, ys, instance.obstacles,
                                        clearances, grace))
    out.sort(key=lambda v: v.t)
    return out


def min_obstacle_separation(times: np.ndarray, xs: np.ndarray, ys: np.ndarray,
                            instance: Instance,
                            chunk: int = 20000) -> np.ndarray:
    """Per-sample minimum surface separation from all dynamic obstacles.

    Separation is center distance minus both radii, so negative values mean
    overlap; inf when the instance has no obstacles.
    """
    out = np.full(len(times), np.inf)
    for s in range(0, len(times), chunk):
        e = min(s + chunk, len(times))
        sub = times[s:e]
        best = np.full(e - s, np.inf)
        for obs in instance.obstacles:
            pos = obs.positions_at(sub)
            d = np.hypot(xs[s:e] - pos[:, 0], ys[s:e] - pos[:, 1]) \
                - obs.radius - instance.robot_radius
            np.minimum(best, d, out=best)
        out[s:e] = best
    return out
