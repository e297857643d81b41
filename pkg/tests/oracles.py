"""Independent reference implementations used to cross-check the library.

Everything here is written from first principles (dense sampling,
brute-force scans, closed forms, textbook A*) and never calls into the
package internals being tested, so each comparison pits two separate
derivations of the same quantity against each other.
"""

from __future__ import annotations

import heapq
import math

import numpy as np


def obstacle_positions(obstacle, times):
    """Piecewise-linear schedule lookup via np.interp (rests at the ends)."""
    t = np.asarray(times, dtype=float)
    return (np.interp(t, obstacle.times, obstacle.xs),
            np.interp(t, obstacle.times, obstacle.ys))


def point_to_blocked_distance(grid, x, y):
    """Distance from one point to the closed blocked region (walls included)."""
    l = grid.cell_size
    best = min(x, y, grid.width * l - x, grid.height * l - y)
    ys, xs = np.nonzero(grid.blocked)
    if xs.size:
        dx = np.maximum(np.maximum(xs * l - x, x - (xs + 1) * l), 0.0)
        dy = np.maximum(np.maximum(ys * l - y, y - (ys + 1) * l), 0.0)
        best = min(best, float(np.min(np.hypot(dx, dy))))
    return best


def segment_min_static_distance(grid, a, b, n=1000):
    """Dense-sampling oracle for clearance of segment a-b from blocked cells."""
    l = grid.cell_size
    ts = np.linspace(0.0, 1.0, n)
    px = a[0] + (b[0] - a[0]) * ts
    py = a[1] + (b[1] - a[1]) * ts
    best = float(np.min(np.minimum.reduce(
        [px, py, grid.width * l - px, grid.height * l - py])))
    ys, xs = np.nonzero(grid.blocked)
    for ix, iy in zip(xs, ys):
        dx = np.maximum(np.maximum(ix * l - px, px - (ix + 1) * l), 0.0)
        dy = np.maximum(np.maximum(iy * l - py, py - (iy + 1) * l), 0.0)
        best = min(best, float(np.min(np.hypot(dx, dy))))
    return best


def motion_position(motion, t):
    t = np.asarray(t, dtype=float)
    return (motion.x0 + motion.vx * (t - motion.t_start),
            motion.y0 + motion.vy * (t - motion.t_start))


def dense_collision_interval(motion_a, motion_b, clearance, dt=1e-3):
    """Sample the common window at dt; first/last strictly-inside samples."""
    lo = max(motion_a.t_start, motion_b.t_start)
    hi = min(motion_a.t_end, motion_b.t_end)
    if not hi > lo:
        return None
    ts = np.arange(lo, hi + dt * 0.5, dt)
    ax, ay = motion_position(motion_a, ts)
    bx, by = motion_position(motion_b, ts)
    inside = np.hypot(ax - bx, ay - by) < clearance
    idx = np.nonzero(inside)[0]
    if idx.size == 0:
        return None
    return float(ts[idx[0]]), float(ts[idx[-1]])


def _relative_quadratic_min(rx, ry, wx, wy, lo, hi):
    """Min of |(rx,ry) + t*(wx,wy)| over [lo, hi] (hi may be None for +inf)."""
    w2 = wx * wx + wy * wy
    cands = [lo]
    if hi is not None:
        cands.append(hi)
    if w2 > 0.0:
        t_star = -(rx * wx + ry * wy) / w2
        if t_star > lo and (hi is None or t_star < hi):
            cands.append(t_star)
    return min(math.hypot(rx + wx * t, ry + wy * t) for t in cands)


def min_separation_exact(p0, v, t0, t1, obstacle):
    """Exact min center distance between a uniform robot motion and one
    piecewise-linear obstacle over the window [t0, t1] (t1 may be inf).

    The robot moves p(t) = p0 + v*(t - t0). Obstacle segments, including
    the final rest, are handled by minimizing each relative quadratic.
    """
    best = math.inf
    times = obstacle.times
    xs = obstacle.xs
    ys = obstacle.ys
    n = len(times)
    segs = []
    for i in range(n - 1):
        dt = times[i + 1] - times[i]
        segs.append((times[i], times[i + 1],
                     (xs[i + 1] - xs[i]) / dt, (ys[i + 1] - ys[i]) / dt,
                     xs[i], ys[i]))
    segs.append((times[-1], math.inf, 0.0, 0.0, xs[-1], ys[-1]))
    for (s0, s1, wx, wy, qx, qy) in segs:
        lo = max(t0, s0)
        hi = min(t1, s1)
        if hi < lo:
            continue
        # relative position at time t: (p0 - v t0 - q + w s0) + (v - w) t
        rx = p0[0] - v[0] * t0 - qx + wx * s0
        ry = p0[1] - v[1] * t0 - qy + wy * s0
        best = min(best, _relative_quadratic_min(
            rx, ry, v[0] - wx, v[1] - wy, lo,
            None if math.isinf(hi) else hi))
    return best


def brute_force_departure(a, b, speed, obstacles, clearance,
                          lo, hi, step=1e-3):
    """Scan candidate departure times at a fixed step; for each, verify the
    whole translation keeps the centers >= clearance (exact per-segment
    minimization, tangency allowed). Returns the first passing departure."""
    dist = math.hypot(b[0] - a[0], b[1] - a[1])
    dur = dist / speed
    v = ((b[0] - a[0]) / dur, (b[1] - a[1]) / dur)
    t = lo
    while t <= hi:
        ok = all(
            min_separation_exact(a, v, t, t + dur, obs)
            >= clearance - 1e-12
            for obs in obstacles)
        if ok:
            return t
        t += step
    return None


def stationary_clear_forever(point, t_from, obstacles, clearance):
    return all(
        min_separation_exact(point, (0.0, 0.0), t_from, math.inf, obs)
        >= clearance - 1e-12
        for obs in obstacles)


def time_expanded_astar(instance, dt=0.05, horizon_pad=16.0):
    """Reference planner: A* over (cell, tick) with waits and cardinal moves.

    Moves and waits are validated with the exact per-segment quadratic
    minimization above at clearance 2r (strict collision, tangency free).
    The goal counts only if the robot can then rest there forever. Returns
    the arrival time in seconds or None.
    """
    grid = instance.grid
    l = grid.cell_size
    r = instance.robot_radius
    clearance = 2.0 * r
    sx, sy = instance.start.x, instance.start.y
    start = (int(sx / l), int(sy / l))
    goal = (int(instance.goal[0] / l), int(instance.goal[1] / l))
    move_dur = l / instance.v_max
    move_ticks = round(move_dur / dt)
    assert abs(move_ticks * dt - move_dur) < 1e-9, "dt must divide a move"

    last_activity = max((obs.times[-1] for obs in instance.obstacles),
                        default=0.0)
    t_cap = last_activity + (grid.width + grid.height) * move_dur + horizon_pad
    max_tick = int(math.ceil(t_cap / dt))

    def center(cell):
        return ((cell[0] + 0.5) * l, (cell[1] + 0.5) * l)

    def free(cell):
        return (0 <= cell[0] < grid.width and 0 <= cell[1] < grid.height
                and not grid.blocked[cell[1], cell[0]])

    def hold_ok(cell, t0, t1):
        p = center(cell)
        return all(
            min_separation_exact(p, (0.0, 0.0), t0, t1, obs)
            >= clearance - 1e-12
            for obs in instance.obstacles)

    def move_ok(cell, nxt, t0):
        p = center(cell)
        q = center(nxt)
        v = ((q[0] - p[0]) / move_dur, (q[1] - p[1]) / move_dur)
        return all(
            min_separation_exact(p, v, t0, t0 + move_dur, obs)
            >= clearance - 1e-12
            for obs in instance.obstacles)

    def h(cell):
        return (abs(cell[0] - goal[0]) + abs(cell[1] - goal[1])) * move_dur

    open_heap = [(h(start), 0, 0, start)]
    seen = {(start, 0)}
    seq = 0
    while open_heap:
        f, tick, _, cell = heapq.heappop(open_heap)
        t = tick * dt
        if cell == goal and stationary_clear_forever(
                center(cell), t, instance.obstacles, clearance):
            return t
        if tick + 1 <= max_tick and (cell, tick + 1) not in seen:
            if hold_ok(cell, t, t + dt):
                seen.add((cell, tick + 1))
                seq += 1
                heapq.heappush(open_heap,
                               ((tick + 1) * dt + h(cell), tick + 1, seq, cell))
        nt = tick + move_ticks
        if nt > max_tick:
            continue
        for dx, dy in ((1, 0), (-1, 0), (0, 1), (0, -1)):
            nxt = (cell[0] + dx, cell[1] + dy)
            if not free(nxt) or (nxt, nt) in seen:
                continue
            if move_ok(cell, nxt, t):
                seen.add((nxt, nt))
                seq += 1
                heapq.heappush(open_heap,
                               (nt * dt + h(nxt), nt, seq, nxt))
    return None


def central_difference(fn, t, step=1e-5):
    return (fn(t + step) - fn(t - step)) / (2.0 * step)


def second_difference(fn, t, step=1e-5):
    return (fn(t + step) - 2.0 * fn(t) + fn(t - step)) / (step * step)
