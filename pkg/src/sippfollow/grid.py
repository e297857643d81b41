"""Static occupancy grids, dynamic disk obstacles, and problem instances."""

from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass, field

import numpy as np

from .geometry import (normalize_angle, point_box_distance,
                       segment_box_distance, segment_box_distance_batch)

FREE_CHAR = "."
BLOCKED_CHAR = "@"


class MapFormatError(ValueError):
    """Raised when a map file cannot be parsed."""


class InstanceError(ValueError):
    """Raised when an instance violates a structural requirement."""


@dataclass(frozen=True, eq=False)
class GridMap:
    """Axis-aligned grid of square cells.

    Cell (ix, iy) spans [ix*l, (ix+1)*l] x [iy*l, (iy+1)*l] with l the cell
    size; row iy=0 sits at the bottom (y=0). Everything outside the grid is
    treated as blocked.
    """

    width: int
    height: int
    cell_size: float
    blocked: np.ndarray  # bool, shape (height, width), indexed [iy, ix]

    def __post_init__(self):
        if self.width <= 0 or self.height <= 0:
            raise MapFormatError("map dimensions must be positive")
        if not (self.cell_size > 0.0 and math.isfinite(self.cell_size)):
            raise MapFormatError("cell size must be positive and finite")
        arr = np.asarray(self.blocked, dtype=bool)
        if arr.shape != (self.height, self.width):
            raise MapFormatError(
                f"occupancy shape {arr.shape} does not match "
                f"height={self.height}, width={self.width}")
        arr.flags.writeable = False
        object.__setattr__(self, "blocked", arr)
        # Lazy caches keyed by (radius,) for line-of-sight queries; safe to
        # share because the occupancy array is immutable.
        object.__setattr__(self, "_los_cache", {})
        object.__setattr__(self, "_step_masks", {})
        object.__setattr__(self, "_geo_graph", None)
        object.__setattr__(self, "_geo_fields", {})

    def in_bounds(self, ix: int, iy: int) -> bool:
        return 0 <= ix < self.width and 0 <= iy < self.height

    def is_blocked(self, ix: int, iy: int) -> bool:
        """Occupancy lookup; out-of-bounds cells count as blocked."""
        if not self.in_bounds(ix, iy):
            return True
        return bool(self.blocked[iy, ix])

    def cell_center(self, ix: int, iy: int) -> tuple[float, float]:
        l = self.cell_size
        return ((ix + 0.5) * l, (iy + 0.5) * l)

    def cell_of(self, x: float, y: float) -> tuple[int, int]:
        """Cell containing point (x, y); points on edges go to the upper cell."""
        l = self.cell_size
        return (int(math.floor(x / l)), int(math.floor(y / l)))

    def free_cells(self) -> list[tuple[int, int]]:
        ys, xs = np.nonzero(~self.blocked)
        return list(zip(xs.tolist(), ys.tolist()))

    @property
    def n_free(self) -> int:
        return int(np.count_nonzero(~self.blocked))

    @property
    def extent(self) -> tuple[float, float]:
        return (self.width * self.cell_size, self.height * self.cell_size)

    def neighbor_step_masks(self, radius: float) -> dict[tuple[int, int], np.ndarray]:
        """Per unit-step direction, a (height, width) bool mask that is True
        where a disk of the given radius can slide from the cell center to the
        neighboring cell center.

        The clearance geometry of a unit step does not depend on the cell, so
        the offsets whose cells must stay free are enumerated once per
        direction and applied with shifted views. Out-of-bounds counts as
        blocked, which also enforces the map-boundary clearance.
        """
        cached = self._step_masks.get(radius)
        if cached is not None:
            return cached
        l = self.cell_size
        h, w = self.blocked.shape
        free = ~self.blocked
        pad = 1 + int(math.ceil(radius / l))
        masks: dict[tuple[int, int], np.ndarray] = {}
        for dx in (-1, 0, 1):
            for dy in (-1, 0, 1):
                if dx == 0 and dy == 0:
                    continue
                mask = np.ones((h, w), dtype=bool)
                for ox in range(min(0, dx) - pad, max(0, dx) + pad + 1):
                    for oy in range(min(0, dy) - pad, max(0, dy) + pad + 1):
                        d = segment_box_distance(
                            0.5 * l, 0.5 * l, (0.5 + dx) * l, (0.5 + dy) * l,
                            ox * l, oy * l, (ox + 1) * l, (oy + 1) * l)
                        if d >= radius:
                            continue
                        shifted = np.zeros((h, w), dtype=bool)
                        shifted[max(0, -oy):min(h, h - oy),
                                max(0, -ox):min(w, w - ox)] = \
                            free[max(0, oy):min(h, h + oy),
                                 max(0, ox):min(w, w + ox)]
                        mask &= shifted
                masks[(dx, dy)] = mask
        self._step_masks[radius] = masks
        return masks

    def _geodesic_support(self):
        """Corner-visibility structures shared by all goal fields on this map:
        convex corner nodes, the corner-to-corner distance matrix, and the
        cell-center-to-corner distance matrix (inf where not visible)."""
        if self._geo_graph is None:
            l = self.cell_size
            corners = _corner_nodes(self.blocked, l)
            k = len(corners)
            cxs = corners[:, 0].copy()
            cys = corners[:, 1].copy()
            cmat = np.zeros((0, 0))
            if k:
                cmat = np.full((k, k), np.inf)
                for i in range(k):
                    vis = _interior_visible(self.blocked, l, cxs[i], cys[i],
                                            cxs, cys)
                    d = np.hypot(cxs - cxs[i], cys - cys[i])
                    cmat[i] = np.where(vis, d, np.inf)
                np.fill_diagonal(cmat, 0.0)
                np.minimum(cmat, cmat.T, out=cmat)
            h, w = self.blocked.shape
            ys, xs = np.mgrid[0:h, 0:w]
            fx = (xs.ravel() + 0.5) * l
            fy = (ys.ravel() + 0.5) * l
            cc = np.empty((h * w, k))
            for i in range(k):
                vis = _interior_visible(self.blocked, l, cxs[i], cys[i], fx, fy)
                cc[:, i] = np.where(vis, np.hypot(fx - cxs[i], fy - cys[i]),
                                    np.inf)
            object.__setattr__(self, "_geo_graph",
                               (cxs, cys, cmat, cc, fx, fy))
        return self._geo_graph

    def static_geodesic_field(self, gx: float, gy: float) -> np.ndarray:
        """Exact shortest-path distance from every free cell center to
        (gx, gy) when only the blocked-cell interiors must be avoided
        (clearance zero, straight segments bending at obstacle corners).

        This lower-bounds the distance any disk robot must travel, so it is a
        valid admissible search heuristic; being a metric shortest path it is
        also consistent across straight-segment moves. Blocked or unreachable
        cells get inf. Fields are cached per goal point.
        """
        key = (gx, gy)
        cached = self._geo_fields.get(key)
        if cached is not None:
            return cached
        cxs, cys, cmat, cc, fx, fy = self._geodesic_support()
        k = len(cxs)
        if k:
            vis = _interior_visible(self.blocked, self.cell_size, gx, gy,
                                    cxs, cys)
            dist = np.where(vis, np.hypot(cxs - gx, cys - gy), np.inf)
            done = np.zeros(k, dtype=bool)
            for _ in range(k):
                cand = np.where(done, np.inf, dist)
                u = int(cand.argmin())
                if not np.isfinite(cand[u]):
                    break
                done[u] = True
                np.minimum(dist, dist[u] + cmat[u], out=dist)
            routed = (cc + dist).min(axis=1)
        else:
            routed = np.full(fx.shape, np.inf)
        dvis = _interior_visible(self.blocked, self.cell_size, gx, gy, fx, fy)
        direct = np.where(dvis, np.hypot(fx - gx, fy - gy), np.inf)
        field = np.minimum(routed, direct)
        field[self.blocked.ravel()] = np.inf
        field = field.reshape(self.blocked.shape)
        field.flags.writeable = False
        if len(self._geo_fields) < 4096:
            self._geo_fields[key] = field
        return field


_VIS_EPS = 1e-9


def _corner_nodes(blocked: np.ndarray, cell: float) -> np.ndarray:
    """Lattice vertices where a shortest path can bend: convex corners of the
    blocked region, plus vertices pinched between two diagonal blocked cells."""
    h, w = blocked.shape
    p = np.zeros((h + 2, w + 2), dtype=bool)
    p[1:-1, 1:-1] = blocked
    sw = p[0:h + 1, 0:w + 1]
    se = p[0:h + 1, 1:w + 2]
    nw = p[1:h + 2, 0:w + 1]
    ne = p[1:h + 2, 1:w + 2]
    cnt = (sw.astype(np.int8) + se.astype(np.int8)
           + nw.astype(np.int8) + ne.astype(np.int8))
    convex = cnt == 1
    pinch = (sw & ne & ~se & ~nw) | (se & nw & ~sw & ~ne)
    vy, vx = np.nonzero(convex | pinch)
    return np.column_stack([vx.astype(float) * cell, vy.astype(float) * cell])


def _interior_visible(blocked: np.ndarray, cell: float, x0: float, y0: float,
                      xs: np.ndarray, ys: np.ndarray) -> np.ndarray:
    """For each target point, whether the open segment from (x0, y0) to it
    avoids every blocked-cell interior. Touching boundaries or corners does
    not block, and the region outside the map counts as free; both choices
    only shorten paths, keeping the geodesic field a lower bound.

    Each segment is sampled at the midpoints between consecutive grid-line
    crossings, which identifies exactly the cells whose interior it enters.
    """
    h, w = blocked.shape
    xs = np.asarray(xs, dtype=float)
    ys = np.asarray(ys, dtype=float)
    dx = xs - x0
    dy = ys - y0
    n = xs.size
    with np.errstate(divide="ignore", invalid="ignore"):
        tx = (np.arange(w + 1) * cell - x0) / dx[:, None]
        ty = (np.arange(h + 1) * cell - y0) / dy[:, None]
    t = np.concatenate([tx, ty, np.full((n, 1), _VIS_EPS)], axis=1)
    t[~np.isfinite(t)] = 1.0 - _VIS_EPS
    np.clip(t, _VIS_EPS, 1.0 - _VIS_EPS, out=t)
    t.sort(axis=1)
    mid = (t[:, :-1] + t[:, 1:]) * 0.5
    mx = x0 + mid * dx[:, None]
    my = y0 + mid * dy[:, None]
    ix = np.floor(mx / cell).astype(np.int64)
    iy = np.floor(my / cell).astype(np.int64)
    inside = (ix >= 0) & (ix < w) & (iy >= 0) & (iy < h)
    np.clip(ix, 0, w - 1, out=ix)
    np.clip(iy, 0, h - 1, out=iy)
    hit = blocked[iy, ix] & inside
    vis = ~hit.any(axis=1)
    # Segments lying exactly on a grid line touch boundaries only.
    if (x0 / cell) == math.floor(x0 / cell):
        vis |= dx == 0.0
    if (y0 / cell) == math.floor(y0 / cell):
        vis |= dy == 0.0
    vis |= (dx == 0.0) & (dy == 0.0)
    return vis


def load_map(text: str) -> GridMap:
    """Parse the plain-text map format.

    First non-empty line: ``width height cell_size``. Then ``height`` rows of
    exactly ``width`` characters, '.' free and '@' blocked, the first row
    being the bottom of the map (y = 0).
    """
    lines = text.splitlines()
    idx = 0
    while idx < len(lines) and not lines[idx].strip():
        idx += 1
    if idx >= len(lines):
        raise MapFormatError("line 1: empty map file")
    header = lines[idx].split()
    header_line = idx + 1
    if len(header) != 3:
        raise MapFormatError(
            f"line {header_line}: header must be 'width height cell_size', "
            f"got {lines[idx]!r}")
    try:
        width, height = int(header[0]), int(header[1])
        cell_size = float(header[2])
    except ValueError as exc:
        raise MapFormatError(f"line {header_line}: {exc}") from None
    if width <= 0 or height <= 0:
        raise MapFormatError(
            f"line {header_line}: width and height must be positive, "
            f"got {width} x {height}")
    if not (cell_size > 0.0 and math.isfinite(cell_size)):
        raise MapFormatError(
            f"line {header_line}: cell size must be positive, got {header[2]}")

    blocked = np.zeros((height, width), dtype=bool)
    row = 0
    for j in range(idx + 1, len(lines)):
        line = lines[j].strip()
        if not line:
            continue
        if row >= height:
            raise MapFormatError(f"line {j + 1}: more than {height} map rows")
        if len(line) != width:
            raise MapFormatError(
                f"line {j + 1}: expected {width} cells, got {len(line)}")
        for i, ch in enumerate(line):
            if ch == BLOCKED_CHAR:
                blocked[row, i] = True
            elif ch != FREE_CHAR:
                raise MapFormatError(
                    f"line {j + 1}: invalid cell character {ch!r}")
        row += 1
    if row != height:
        raise MapFormatError(f"expected {height} map rows, got {row}")
    return GridMap(width=width, height=height, cell_size=cell_size, blocked=blocked)


def load_map_file(path: str) -> GridMap:
    with open(path, "r", encoding="utf-8") as fh:
        return load_map(fh.read())


def dump_map(grid: GridMap) -> str:
    rows = [f"{grid.width} {grid.height} {grid.cell_size:g}"]
    for iy in range(grid.height):
        rows.append("".join(
            BLOCKED_CHAR if grid.blocked[iy, ix] else FREE_CHAR
            for ix in range(grid.width)))
    return "\n".join(rows) + "\n"


@dataclass(frozen=True)
class Configuration:
    """Robot configuration: planar position plus heading in [0, 2*pi)."""

    x: float
    y: float
    heading: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "heading", normalize_angle(self.heading))

    @property
    def pos(self) -> tuple[float, float]:
        return (self.x, self.y)


@dataclass(frozen=True, eq=False)
class DynamicObstacle:
    """Disk obstacle following a piecewise-linear schedule.

    Between consecutive waypoints the obstacle moves in a straight line at
    constant speed (or holds position if the waypoints coincide); after the
    last waypoint it rests there forever.
    """

    radius: float
    times: np.ndarray
    xs: np.ndarray
    ys: np.ndarray

    def __post_init__(self):
        t = np.asarray(self.times, dtype=float)
        x = np.asarray(self.xs, dtype=float)
        y = np.asarray(self.ys, dtype=float)
        if not (self.radius > 0.0 and math.isfinite(self.radius)):
            raise InstanceError("obstacle radius must be positive")
        if t.ndim != 1 or t.shape != x.shape or t.shape != y.shape or t.size == 0:
            raise InstanceError("obstacle schedule arrays must be 1-D and equal length")
        if t[0] != 0.0:
            raise InstanceError("obstacle schedule must start at t=0")
        if t.size > 1 and not np.all(np.diff(t) > 0.0):
            raise InstanceError("obstacle waypoint times must be strictly increasing")
        if not (np.all(np.isfinite(t)) and np.all(np.isfinite(x)) and np.all(np.isfinite(y))):
            raise InstanceError("obstacle schedule must be finite")
        for name, arr in (("times", t), ("xs", x), ("ys", y)):
            arr.flags.writeable = False
            object.__setattr__(self, name, arr)

    @classmethod
    def from_waypoints(cls, waypoints, radius: float) -> "DynamicObstacle":
        """Build from an iterable of (x, y, t) triples."""
        pts = list(waypoints)
        if not pts:
            raise InstanceError("obstacle needs at least one waypoint")
        return cls(radius=radius,
                   times=np.array([p[2] for p in pts], dtype=float),
                   xs=np.array([p[0] for p in pts], dtype=float),
                   ys=np.array([p[1] for p in pts], dtype=float))

    def waypoints(self) -> list[tuple[float, float, float]]:
        return [(float(x), float(y), float(t))
                for x, y, t in zip(self.xs, self.ys, self.times)]

    def position_at(self, t: float) -> tuple[float, float]:
        """Center position at time t; clamped to the endpoints outside the schedule."""
        x = float(np.interp(t, self.times, self.xs))
        y = float(np.interp(t, self.times, self.ys))
        return (x, y)

    def positions_at(self, ts: np.ndarray) -> np.ndarray:
        """Vectorized position_at; returns shape (len(ts), 2)."""
        out = np.empty((len(ts), 2), dtype=float)
        out[:, 0] = np.interp(ts, self.times, self.xs)
        out[:, 1] = np.interp(ts, self.times, self.ys)
        return out


def obstacle_position_at(obstacle: DynamicObstacle, t: float) -> tuple[float, float]:
    """Center of a dynamic obstacle at time t (rests at the last waypoint)."""
    return obstacle.position_at(t)


def swept_cells(grid: GridMap, ax: float, ay: float, bx: float, by: float,
                radius: float) -> list[tuple[int, int]]:
    """Cells whose closed square intersects the radius-r sweep of segment a-b."""
    l = grid.cell_size
    ix0 = max(0, int(math.floor((min(ax, bx) - radius) / l)))
    ix1 = min(grid.width - 1, int(math.floor((max(ax, bx) + radius) / l)))
    iy0 = max(0, int(math.floor((min(ay, by) - radius) / l)))
    iy1 = min(grid.height - 1, int(math.floor((max(ay, by) + radius) / l)))
    out = []
    for iy in range(iy0, iy1 + 1):
        y0 = iy * l
        for ix in range(ix0, ix1 + 1):
            x0 = ix * l
            if segment_box_distance(ax, ay, bx, by, x0, y0, x0 + l, y0 + l) < radius:
                out.append((ix, iy))
    return out


def line_of_sight_clear(a, b, radius: float, grid: GridMap) -> bool:
    """True when a disk of the given radius can slide from a to b.

    The swept corridor must stay at least ``radius`` away from every blocked
    cell and from the map boundary; exactly touching distance counts as clear.
    """
    ax, ay = float(a[0]), float(a[1])
    bx, by = float(b[0]), float(b[1])
    key = (radius, ax, ay, bx, by)
    cache = grid._los_cache
    hit = cache.get(key)
    if hit is not None:
        return hit
    result = _line_of_sight_uncached(ax, ay, bx, by, radius, grid)
    if len(cache) < 4_000_000:
        cache[key] = result
        cache[(radius, bx, by, ax, ay)] = result
    return result


def _line_of_sight_uncached(ax, ay, bx, by, radius, grid: GridMap) -> bool:
    l = grid.cell_size
    w, h = grid.extent
    # Boundary: the whole corridor must keep the disk inside the map.
    if min(ax, bx) < radius or min(ay, by) < radius:
        return False
    if max(ax, bx) > w - radius or max(ay, by) > h - radius:
        return False
    ix0 = max(0, int(math.floor((min(ax, bx) - radius) / l)) - 1)
    ix1 = min(grid.width - 1, int(math.floor((max(ax, bx) + radius) / l)) + 1)
    iy0 = max(0, int(math.floor((min(ay, by) - radius) / l)) - 1)
    iy1 = min(grid.height - 1, int(math.floor((max(ay, by) + radius) / l)) + 1)
    sub = grid.blocked[iy0:iy1 + 1, ix0:ix1 + 1]
    if not sub.any():
        return True
    iys, ixs = np.nonzero(sub)
    lox = (ixs + ix0) * l
    loy = (iys + iy0) * l
    d = segment_box_distance_batch(ax, ay, bx, by, lox, loy, lox + l, loy + l)
    return bool((d >= radius).all())


def point_clear_of_static(x: float, y: float, radius: float, grid: GridMap) -> bool:
    """True when a disk at (x, y) keeps >= radius from blocked cells and walls."""
    w, h = grid.extent
    if x < radius or y < radius or x > w - radius or y > h - radius:
        return False
    l = grid.cell_size
    reach = int(math.floor(radius / l)) + 1
    cx, cy = grid.cell_of(x, y)
    for iy in range(max(0, cy - reach), min(grid.height, cy + reach + 1)):
        y0 = iy * l
        for ix in range(max(0, cx - reach), min(grid.width, cx + reach + 1)):
            if grid.blocked[iy, ix]:
                if point_box_distance(x, y, ix * l, y0, (ix + 1) * l, y0 + l) < radius:
                    return False
    return True


@dataclass(frozen=True, eq=False)
class Instance:
    """A complete planning problem: map, robot limits, endpoints, obstacles."""

    grid: GridMap
    start: Configuration
    goal: tuple[float, float]
    robot_radius: float
    obstacles: tuple[DynamicObstacle, ...] = ()
    v_max: float = 1.0
    omega_max: float = math.pi
    map_path: str | None = field(default=None, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "goal", (float(self.goal[0]), float(self.goal[1])))
        object.__setattr__(self, "obstacles", tuple(self.obstacles))
        if not (self.robot_radius > 0.0):
            raise InstanceError("robot radius must be positive")
        if not (self.v_max > 0.0):
            raise InstanceError("v_max must be positive")
        if not (self.omega_max > 0.0):
            raise InstanceError("omega_max must be positive")
        self._require_free_center("start", self.start.x, self.start.y)
        self._require_free_center("goal", self.goal[0], self.goal[1])
        for k, obs in enumerate(self.obstacles):
            for x, y, t in zip(obs.xs, obs.ys, obs.times):
                self._require_free_center(f"obstacle {k} waypoint", float(x), float(y))

    def _require_free_center(self, what: str, x: float, y: float):
        l = self.grid.cell_size
        ix = round(x / l - 0.5)
        iy = round(y / l - 0.5)
        cx, cy = (ix + 0.5) * l, (iy + 0.5) * l
        if abs(x - cx) > 1e-9 * max(1.0, l) or abs(y - cy) > 1e-9 * max(1.0, l):
            raise InstanceError(f"{what} ({x}, {y}) is not on a cell center")
        if self.grid.is_blocked(int(ix), int(iy)):
            raise InstanceError(f"{what} ({x}, {y}) lies on a blocked cell")

    @property
    def goal_cell(self) -> tuple[int, int]:
        return self.grid.cell_of(self.goal[0], self.goal[1])

    @property
    def start_cell(self) -> tuple[int, int]:
        return self.grid.cell_of(self.start.x, self.start.y)


def save_instance(instance: Instance, path: str, map_path: str) -> None:
    """Write an instance as JSON next to its map file."""
    doc = {
        "map_path": map_path,
        "robot": {
            "radius": instance.robot_radius,
            "v_max": instance.v_max,
            "omega_max": instance.omega_max,
        },
        "start": {"x": instance.start.x, "y": instance.start.y,
                  "theta": instance.start.heading},
        "goal": {"x": instance.goal[0], "y": instance.goal[1]},
        "obstacles": [
            {"radius": obs.radius,
             "waypoints": [{"x": x, "y": y, "t": t} for x, y, t in obs.waypoints()]}
            for obs in instance.obstacles
        ],
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=2)
        fh.write("\n")


def load_instance(path: str) -> Instance:
    """Read an instance JSON file; map_path resolves relative to the file."""
    with open(path, "r", encoding="utf-8") as fh:
        doc = json.load(fh)
    map_path = doc["map_path"]
    if not os.path.isabs(map_path):
        map_path = os.path.join(os.path.dirname(os.path.abspath(path)), map_path)
    grid = load_map_file(map_path)
    robot = doc["robot"]
    default_radius = float(robot["radius"])
    obstacles = []
    for entry in doc.get("obstacles", []):
        obstacles.append(DynamicObstacle.from_waypoints(
            [(wp["x"], wp["y"], wp["t"]) for wp in entry["waypoints"]],
            radius=float(entry.get("radius", default_radius))))
    return Instance(
        grid=grid,
        start=Configuration(doc["start"]["x"], doc["start"]["y"],
                            doc["start"].get("theta", 0.0)),
        goal=(doc["goal"]["x"], doc["goal"]["y"]),
        robot_radius=default_radius,
        obstacles=tuple(obstacles),
        v_max=float(robot.get("v_max", 1.0)),
        omega_max=float(robot.get("omega_max", math.pi)),
        map_path=map_path,
    )
