"""Random problem instances: warehouse-style maps and mutually
collision-free obstacle crowds.

Obstacles are generated by a synchronized random walk on the grid: every
tick each obstacle either holds its cell or moves to a 4-neighbor free cell,
all moves spanning the same tick so that any two obstacles are in linear
relative motion. A proposed move commits only if its motion keeps at least
center distance 2r from every already-committed motion and from every
not-yet-processed obstacle treated as holding; later obstacles re-check
against all commitments, so every pair is validated against its final
motions. Exact tangency (e.g. convoys in single file) is allowed; the
0.707r-deep corner cut of two diagonal neighbors is not, and the analytic
check rejects it.
"""

from __future__ import annotations

import math

import numpy as np

from .grid import Configuration, DynamicObstacle, GridMap, Instance
from .intervals import LinearMotion, disk_collision_interval


class GenerationError(RuntimeError):
    """Raised when an instance cannot be generated under the constraints."""


def warehouse_map(width: int = 46, height: int = 70, cell_size: float = 1.0,
                  rack_length: int = 8, rack_gap: int = 4,
                  rack_rows: int = 2, aisle_rows: int = 2,
                  margin: int = 1) -> GridMap:
    """Rack-and-aisle layout: horizontal rack bands separated by aisles.

    Rack bands are rack_rows cells tall and broken every rack_length cells
    by rack_gap-wide cross corridors; a margin of free cells rings the map.
    The defaults block roughly 30% of the area.
    """
    blocked = np.zeros((height, width), dtype=bool)
    period_y = rack_rows + aisle_rows
    period_x = rack_length + rack_gap
    for iy in range(margin + aisle_rows, height - margin):
        if (iy - margin) % period_y >= aisle_rows:
            for ix in range(margin, width - margin):
                if (ix - margin) % period_x < rack_length:
                    blocked[iy, ix] = True
    return GridMap(width=width, height=height, cell_size=cell_size,
                   blocked=blocked)


def random_map(width: int, height: int, cell_size: float, density: float,
               seed: int) -> GridMap:
    """Bernoulli-blocked grid; connectivity is not enforced."""
    rng = np.random.default_rng(seed)
    blocked = rng.random((height, width)) < density
    return GridMap(width=width, height=height, cell_size=cell_size,
                   blocked=blocked)


def _compress_waypoints(cells: list[tuple[int, int]], tick: float,
                        grid: GridMap) -> list[tuple[float, float, float]]:
    """Cell-per-tick path -> waypoints, merging straight runs and long holds."""
    pts = [grid.cell_center(ix, iy) for ix, iy in cells]
    out = [(pts[0][0], pts[0][1], 0.0)]
    for k in range(1, len(pts) - 1):
        bx = (pts[k][0] - pts[k - 1][0], pts[k][1] - pts[k - 1][1])
        fx = (pts[k + 1][0] - pts[k][0], pts[k + 1][1] - pts[k][1])
        if bx != fx:
            out.append((pts[k][0], pts[k][1], k * tick))
    if len(pts) > 1:
        out.append((pts[-1][0], pts[-1][1], (len(pts) - 1) * tick))
    return out


def generate_instance(grid: GridMap, n_obstacles: int, seed: int, *,
                      horizon: float = 60.0, obstacle_speed: float = 1.0,
                      wait_prob: float = 0.15, momentum: float = 0.6,
                      robot_radius: float | None = None,
                      v_max: float = 1.0, omega_max: float = math.pi,
                      min_start_goal_dist: float = 0.0,
                      endpoint_headroom: float = 0.6,
                      max_tries: int = 500) -> Instance:
    """Random instance with pairwise collision-free obstacle schedules.

    Start and goal cells keep 2r + endpoint_headroom from all obstacles at
    t=0 and from all final rest positions respectively, which leaves room
    for planning with safety inflation up to the headroom.
    """
    rng = np.random.default_rng(seed)
    l = grid.cell_size
    r = 0.5 * l if robot_radius is None else robot_radius
    free = grid.free_cells()
    if len(free) < n_obstacles + 2:
        raise GenerationError(
            f"{len(free)} free cells cannot host {n_obstacles} obstacles "
            "plus start and goal")
    tick = l / obstacle_speed
    n_ticks = max(1, int(round(horizon / tick)))
    order = rng.permutation(len(free))[:n_obstacles]
    cells = [free[int(i)] for i in order]
    paths = [[c] for c in cells]
    dirs: list[tuple[int, int] | None] = [None] * n_obstacles
    clearance = 2.0 * r
    offsets = ((1, 0), (-1, 0), (0, 1), (0, -1))

    for t in range(n_ticks):
        t0 = t * tick
        t1 = t0 + tick
        # Pairs starting more than 2 cells apart (Chebyshev) cannot close
        # below 2r within one single-cell tick, so a 5x5 window suffices.
        by_cell = {c: i for i, c in enumerate(cells)}
        motions: list[LinearMotion | None] = [None] * n_obstacles
        claimed: set[tuple[int, int]] = set()
        new_cells = list(cells)

        def near_motions(i: int):
            cur = cells[i]
            out = []
            for oy in range(-2, 3):
                for ox in range(-2, 3):
                    j = by_cell.get((cur[0] + ox, cur[1] + oy))
                    if j is None or j == i:
                        continue
                    m = motions[j]
                    if m is None:
                        hx, hy = grid.cell_center(*cells[j])
                        m = LinearMotion.hold(hx, hy, t0, t1)
                    out.append(m)
            return out

        for i in range(n_obstacles):
            cur = cells[i]
            cx, cy = grid.cell_center(*cur)
            hold = LinearMotion.hold(cx, cy, t0, t1)
            options: list[tuple[int, int] | None] = [None]
            frees = [d for d in offsets
                     if not grid.is_blocked(cur[0] + d[0], cur[1] + d[1])]
            if frees and rng.random() >= wait_prob:
                if dirs[i] in frees and rng.random() < momentum:
                    options = [dirs[i], None]
                else:
                    options = [frees[int(k)]
                               for k in rng.permutation(len(frees))] + [None]
            neighbors = near_motions(i)
            committed: tuple[tuple[int, int] | None, LinearMotion] = (None, hold)
            for opt in options:
                if opt is None:
                    motion = hold
                    target = cur
                else:
                    target = (cur[0] + opt[0], cur[1] + opt[1])
                    if target in claimed:
                        continue
                    tx, ty = grid.cell_center(*target)
                    motion = LinearMotion.from_endpoints(cx, cy, tx, ty,
                                                         t0, t1)
                if not any(disk_collision_interval(motion, other, clearance)
                           for other in neighbors):
                    committed = (opt, motion)
                    break
            # Falling through to a hold is always consistent: every committed
            # move was validated against this obstacle holding its cell.
            opt, motion = committed
            target = cur if opt is None else (cur[0] + opt[0], cur[1] + opt[1])
            motions[i] = motion
            claimed.add(target)
            new_cells[i] = target
            if opt is not None:
                dirs[i] = opt
        cells = new_cells
        for i in range(n_obstacles):
            paths[i].append(cells[i])

    obstacles = tuple(
        DynamicObstacle.from_waypoints(_compress_waypoints(p, tick, grid), r)
        for p in paths)

    start_positions = np.array([grid.cell_center(*p[0]) for p in paths]) \
        if n_obstacles else np.empty((0, 2))
    rest_positions = np.array([grid.cell_center(*p[-1]) for p in paths]) \
        if n_obstacles else np.empty((0, 2))
    need = clearance + endpoint_headroom

    def clear_of(points: np.ndarray, cell: tuple[int, int]) -> bool:
        if len(points) == 0:
            return True
        cx, cy = grid.cell_center(*cell)
        d = np.hypot(points[:, 0] - cx, points[:, 1] - cy)
        return bool(d.min() >= need)

    start_cell = goal_cell = None
    for _ in range(max_tries):
        cand = free[int(rng.integers(len(free)))]
        if clear_of(start_positions, cand):
            start_cell = cand
            break
    if start_cell is None:
        raise GenerationError("could not place a start with enough clearance")
    sx, sy = grid.cell_center(*start_cell)
    for _ in range(max_tries):
        cand = free[int(rng.integers(len(free)))]
        if cand == start_cell:
            continue
        gx, gy = grid.cell_center(*cand)
        if math.hypot(gx - sx, gy - sy) < min_start_goal_dist:
            continue
        if clear_of(rest_positions, cand):
            goal_cell = cand
            break
    if goal_cell is None:
        raise GenerationError("could not place a goal with enough clearance")
    heading = float(rng.uniform(0.0, 2.0 * math.pi))
    return Instance(
        grid=grid,
        start=Configuration(sx, sy, heading),
        goal=grid.cell_center(*goal_cell),
        robot_radius=r,
        obstacles=obstacles,
        v_max=v_max,
        omega_max=omega_max)
