"""Safe-interval computation for disk robots among piecewise-linear obstacles.

All collision predicates are strict: two disks collide only when the
center-to-center distance drops strictly below the clearance, so exact
tangency never counts as a collision. Safe intervals are therefore closed
at both ends.
"""

from __future__ import annotations

import bisect
import math
from dataclasses import dataclass

import numpy as np

from .grid import DynamicObstacle, GridMap

# Safe intervals shorter than this are discarded as numerical noise.
MIN_INTERVAL = 1e-6

_EMPTY_IDX = np.empty(0, dtype=np.int64)


@dataclass(frozen=True)
class SafeInterval:
    """Closed time interval [begin, end] during which a cell is collision-free."""

    begin: float
    end: float

    def __post_init__(self):
        if not (self.begin < self.end):
            raise ValueError(f"empty safe interval [{self.begin}, {self.end}]")

    def contains(self, t: float) -> bool:
        return self.begin <= t <= self.end


@dataclass(frozen=True)
class LinearMotion:
    """Constant-velocity disk-center motion over [t_start, t_end].

    A stationary hold is a motion with zero velocity; t_end may be inf.
    """

    x0: float
    y0: float
    vx: float
    vy: float
    t_start: float
    t_end: float

    def __post_init__(self):
        if not (self.t_start <= self.t_end):
            raise ValueError("motion must have t_start <= t_end")

    @classmethod
    def from_endpoints(cls, x0, y0, x1, y1, t_start, t_end) -> "LinearMotion":
        dt = t_end - t_start
        if dt <= 0.0:
            raise ValueError("motion needs positive duration")
        return cls(x0, y0, (x1 - x0) / dt, (y1 - y0) / dt, t_start, t_end)

    @classmethod
    def hold(cls, x, y, t_start, t_end=math.inf) -> "LinearMotion":
        return cls(x, y, 0.0, 0.0, t_start, t_end)

    def position_at(self, t: float) -> tuple[float, float]:
        t = min(max(t, self.t_start), self.t_end)
        dt = t - self.t_start
        return (self.x0 + self.vx * dt, self.y0 + self.vy * dt)


@dataclass(frozen=True)
class CellTimeline:
    """Safe intervals of one grid cell, sorted by begin time."""

    cell: tuple[int, int]
    intervals: tuple[SafeInterval, ...]

    def interval_containing(self, t: float) -> int | None:
        for k, iv in enumerate(self.intervals):
            if iv.begin <= t <= iv.end:
                return k
            if iv.begin > t:
                return None
        return None


def disk_collision_interval(motion_a: LinearMotion, motion_b: LinearMotion,
                            clearance: float) -> tuple[float, float] | None:
    """Open time interval where two moving disk centers are closer than clearance.

    Both motions are only considered on the overlap of their time windows.
    Returns None when the distance never drops strictly below the clearance
    (tangency is not a collision), or when the overlap is empty or a single
    instant.
    """
    lo = max(motion_a.t_start, motion_b.t_start)
    hi = min(motion_a.t_end, motion_b.t_end)
    if not (hi > lo):
        return None
    # Relative separation as a linear function of absolute time t:
    # d(t) = B + D * t.
    bx = (motion_a.x0 - motion_a.vx * motion_a.t_start) - \
         (motion_b.x0 - motion_b.vx * motion_b.t_start)
    by = (motion_a.y0 - motion_a.vy * motion_a.t_start) - \
         (motion_b.y0 - motion_b.vy * motion_b.t_start)
    dx = motion_a.vx - motion_b.vx
    dy = motion_a.vy - motion_b.vy
    dd = dx * dx + dy * dy
    cc = clearance * clearance
    if dd <= 0.0:
        # Constant separation.
        if bx * bx + by * by < cc:
            return (lo, hi)
        return None
    b1 = 2.0 * (bx * dx + by * dy)
    c0 = bx * bx + by * by - cc
    disc = b1 * b1 - 4.0 * dd * c0
    if disc <= 0.0:
        return None
    sq = math.sqrt(disc)
    # Numerically stable quadratic roots.
    if b1 >= 0.0:
        q = -0.5 * (b1 + sq)
    else:
        q = -0.5 * (b1 - sq)
    r1 = q / dd
    r2 = c0 / q if q != 0.0 else r1
    t_in, t_out = (r1, r2) if r1 <= r2 else (r2, r1)
    s = max(t_in, lo)
    e = min(t_out, hi)
    if not (e > s):
        return None
    return (s, e)


def merge_busy_intervals(spans: list[tuple[float, float]]) -> list[tuple[float, float]]:
    """Union of open intervals, merged when they touch or overlap."""
    if not spans:
        return []
    spans = sorted(spans)
    out = [list(spans[0])]
    for s, e in spans[1:]:
        if s <= out[-1][1]:
            out[-1][1] = max(out[-1][1], e)
        else:
            out.append([s, e])
    return [(s, e) for s, e in out]


def complement_intervals(busy: list[tuple[float, float]]) -> tuple[SafeInterval, ...]:
    """Safe intervals over [0, inf) left free by the given open busy spans."""
    out = []
    cursor = 0.0
    for s, e in merge_busy_intervals(busy):
        if s > cursor and s - cursor >= MIN_INTERVAL:
            out.append(SafeInterval(cursor, s))
        cursor = max(cursor, e)
        if cursor == math.inf:
            return tuple(out)
    out.append(SafeInterval(cursor, math.inf))
    return tuple(out)


class ObstacleField:
    """Column-array view of all obstacle motion segments plus a cell bucket index.

    Each obstacle contributes one segment per waypoint pair and a final
    infinite rest segment. The bucket index maps grid cells to the segments
    passing within ``bucket_reach`` of the cell center, which gives a sound
    candidate superset for any clearance query up to
    ``bucket_reach - 0.7072 * cell_size``.
    """

    def __init__(self, obstacles: tuple[DynamicObstacle, ...]):
        px, py, vx, vy, t0, t1, rad, oid = [], [], [], [], [], [], [], []
        for k, obs in enumerate(obstacles):
            times, xs, ys = obs.times, obs.xs, obs.ys
            for j in range(len(times) - 1):
                dt = times[j + 1] - times[j]
                px.append(xs[j])
                py.append(ys[j])
                vx.append((xs[j + 1] - xs[j]) / dt)
                vy.append((ys[j + 1] - ys[j]) / dt)
                t0.append(times[j])
                t1.append(times[j + 1])
                rad.append(obs.radius)
                oid.append(k)
            px.append(xs[-1])
            py.append(ys[-1])
            vx.append(0.0)
            vy.append(0.0)
            t0.append(times[-1])
            t1.append(math.inf)
            rad.append(obs.radius)
            oid.append(k)
        self.n_obstacles = len(obstacles)
        self.px = np.array(px, dtype=float)
        self.py = np.array(py, dtype=float)
        self.vx = np.array(vx, dtype=float)
        self.vy = np.array(vy, dtype=float)
        self.t0 = np.array(t0, dtype=float)
        self.t1 = np.array(t1, dtype=float)
        self.rad = np.array(rad, dtype=float)
        self.obs_index = np.array(oid, dtype=np.int64)
        # Segment endpoint coordinates, used by the bucket rasterizer.
        dt = np.where(np.isfinite(self.t1), self.t1 - self.t0, 0.0)
        self.qx = self.px + self.vx * dt
        self.qy = self.py + self.vy * dt
        self.max_radius = float(self.rad.max()) if len(self.rad) else 0.0
        self.n_segments = len(self.px)
        # Row-per-segment matrix so collision queries gather all columns with
        # a single fancy index: t0, t1, vx, vy, x-at-t=0, y-at-t=0, radius,
        # finite end (t0 for rest segments), and a finite-end flag.
        fin = np.isfinite(self.t1)
        self.seg_mat = np.column_stack([
            self.t0, self.t1, self.vx, self.vy,
            self.px - self.vx * self.t0, self.py - self.vy * self.t0,
            self.rad, np.where(fin, self.t1, self.t0), fin.astype(float)])
        self._bucket: dict[int, np.ndarray] | None = None
        self._bucket_reach = 0.0
        self._bucket_grid: GridMap | None = None
        self._move_cache: dict[tuple[int, int], np.ndarray] = {}
        self._span_cache: dict[tuple, tuple[list[float], list[float]]] = {}

    @classmethod
    def from_obstacles(cls, obstacles) -> "ObstacleField":
        return cls(tuple(obstacles))

    def ensure_bucket(self, grid: GridMap, reach: float) -> None:
        """(Re)build the cell index so queries up to the given reach are sound."""
        need = reach + 0.7072 * grid.cell_size
        if (self._bucket is not None and self._bucket_grid is grid
                and self._bucket_reach >= need):
            return
        self._bucket_reach = need
        self._bucket_grid = grid
        self._move_cache = {}
        self._span_cache = {}
        bucket: dict[int, list[int]] = {}
        l = grid.cell_size
        w, h = grid.width, grid.height
        for k in range(self.n_segments):
            ax, ay, bx, by = self.px[k], self.py[k], self.qx[k], self.qy[k]
            ix0 = max(0, int((min(ax, bx) - need) / l))
            ix1 = min(w - 1, int((max(ax, bx) + need) / l))
            iy0 = max(0, int((min(ay, by) - need) / l))
            iy1 = min(h - 1, int((max(ay, by) + need) / l))
            if ix0 > ix1 or iy0 > iy1:
                continue
            near = _cells_near_segment(ax, ay, bx, by, ix0, ix1, iy0, iy1,
                                       l, need)
            iys, ixs = np.nonzero(near)
            for iy, ix in zip((iys + iy0).tolist(), (ixs + ix0).tolist()):
                bucket.setdefault(iy * w + ix, []).append(k)
        self._bucket = {cid: np.array(ks, dtype=np.int64)
                        for cid, ks in bucket.items()}

    def candidates_for_point(self, ix: int, iy: int) -> np.ndarray:
        assert self._bucket is not None, "bucket index not built"
        return self._bucket.get(iy * self._bucket_grid.width + ix, _EMPTY_IDX)

    def candidates_for_move(self, cell_a: tuple[int, int],
                            cell_b: tuple[int, int]) -> np.ndarray:
        """Segments possibly within the bucket query reach of the straight move
        between the two cell centers."""
        grid = self._bucket_grid
        assert self._bucket is not None and grid is not None
        w = grid.width
        key = (cell_a[1] * w + cell_a[0], cell_b[1] * w + cell_b[0])
        hit = self._move_cache.get(key)
        if hit is not None:
            return hit
        l = grid.cell_size
        ax, ay = grid.cell_center(*cell_a)
        bx, by = grid.cell_center(*cell_b)
        reach = 0.7072 * l
        ix0 = max(0, int((min(ax, bx) - reach) / l))
        ix1 = min(w - 1, int((max(ax, bx) + reach) / l))
        iy0 = max(0, int((min(ay, by) - reach) / l))
        iy1 = min(grid.height - 1, int((max(ay, by) + reach) / l))
        near = _cells_near_segment(ax, ay, bx, by, ix0, ix1, iy0, iy1, l, reach)
        iys, ixs = np.nonzero(near)
        parts = []
        bucket = self._bucket
        for iy, ix in zip((iys + iy0).tolist(), (ixs + ix0).tolist()):
            arr = bucket.get(iy * w + ix)
            if arr is not None:
                parts.append(arr)
        if parts:
            cand = np.unique(np.concatenate(parts))
        else:
            cand = _EMPTY_IDX
        if len(self._move_cache) < 2_000_000:
            self._move_cache[key] = cand
        return cand

    def busy_spans_for_move(self, cell_a: tuple[int, int],
                            cell_b: tuple[int, int], speed: float,
                            clearance_extra: float
                            ) -> tuple[list[float], list[float]]:
        """Cached merged busy spans for the center-to-center move a -> b.

        The span geometry depends only on the endpoints, the speed, and the
        clearance, so repeated queries on the same edge hit the cache."""
        grid = self._bucket_grid
        assert grid is not None, "bucket index not built"
        w = grid.width
        key = (cell_a[1] * w + cell_a[0], cell_b[1] * w + cell_b[0],
               speed, clearance_extra)
        hit = self._span_cache.get(key)
        if hit is not None:
            return hit
        cand = self.candidates_for_move(cell_a, cell_b)
        ax, ay = grid.cell_center(*cell_a)
        bx, by = grid.cell_center(*cell_b)
        spans = colliding_move_spans(self, cand, ax, ay, bx, by, speed,
                                     clearance_extra)
        if len(self._span_cache) < 2_000_000:
            self._span_cache[key] = spans
        return spans

    @property
    def horizon(self) -> float:
        """Latest finite segment end; all obstacles rest after this time."""
        finite = self.t1[np.isfinite(self.t1)]
        return float(finite.max()) if len(finite) else 0.0


def _cells_near_segment(ax: float, ay: float, bx: float, by: float,
                        ix0: int, ix1: int, iy0: int, iy1: int,
                        l: float, reach: float) -> np.ndarray:
    """Bool (ny, nx) mask of window cells whose center is within reach of the
    segment a -> b."""
    cxs = (np.arange(ix0, ix1 + 1) + 0.5) * l - ax
    cys = (np.arange(iy0, iy1 + 1) + 0.5) * l - ay
    ux, uy = bx - ax, by - ay
    dd = ux * ux + uy * uy
    if dd > 0.0:
        s = cxs[None, :] * (ux / dd) + cys[:, None] * (uy / dd)
        np.clip(s, 0.0, 1.0, out=s)
        ex = cxs[None, :] - s * ux
        ey = cys[:, None] - s * uy
    else:
        ex = np.broadcast_to(cxs[None, :], (len(cys), len(cxs)))
        ey = np.broadcast_to(cys[:, None], (len(cys), len(cxs)))
    return ex * ex + ey * ey <= reach * reach


def _busy_spans_for_point(field: ObstacleField, cand: np.ndarray,
                          cx: float, cy: float,
                          clearance_extra: float) -> list[tuple[float, float]]:
    """Open spans during which any candidate segment's disk comes strictly
    closer than (segment radius + clearance_extra) to the fixed point."""
    if len(cand) == 0:
        return []
    m = field.seg_mat[cand].T
    t0 = m[0]
    t1 = m[1]
    # Relative position at absolute time t: B + D*t with D = -v.
    bx = cx - m[4]
    by = cy - m[5]
    dx = -m[2]
    dy = -m[3]
    cc = (m[6] + clearance_extra) ** 2
    dd = dx * dx + dy * dy
    b1 = 2.0 * (bx * dx + by * dy)
    c0 = bx * bx + by * by - cc
    spans: list[tuple[float, float]] = []
    moving = dd > 0.0
    disc = b1 * b1 - 4.0 * dd * c0
    with np.errstate(invalid="ignore", divide="ignore"):
        sq = np.sqrt(np.maximum(disc, 0.0))
        r1 = (-b1 - sq) / (2.0 * np.where(moving, dd, 1.0))
        r2 = (-b1 + sq) / (2.0 * np.where(moving, dd, 1.0))
    for k in range(len(cand)):
        if moving[k]:
            if disc[k] <= 0.0:
                continue
            s = max(r1[k], t0[k])
            e = min(r2[k], t1[k])
            if e > s:
                spans.append((float(s), float(e)))
        else:
            if c0[k] < 0.0 and t1[k] > t0[k]:
                spans.append((float(t0[k]), float(t1[k])))
    return spans


def build_cell_timelines(grid: GridMap, obstacles, robot_radius: float,
                         inflation: float = 0.0,
                         field: ObstacleField | None = None,
                         ) -> dict[tuple[int, int], CellTimeline]:
    """Safe intervals of every free cell for a robot disk waiting at the center.

    A cell is unsafe at time t when some obstacle center is strictly closer
    than robot_radius + obstacle_radius + inflation to the cell center.
    """
    if field is None:
        field = ObstacleField.from_obstacles(obstacles)
    clearance_extra = robot_radius + inflation
    field.ensure_bucket(grid, robot_radius + field.max_radius + inflation)
    out: dict[tuple[int, int], CellTimeline] = {}
    free = ~grid.blocked
    l = grid.cell_size
    full = (SafeInterval(0.0, math.inf),)
    for iy in range(grid.height):
        row = free[iy]
        cy = (iy + 0.5) * l
        for ix in range(grid.width):
            if not row[ix]:
                continue
            cand = field.candidates_for_point(ix, iy)
            if len(cand) == 0:
                out[(ix, iy)] = CellTimeline((ix, iy), full)
                continue
            spans = _busy_spans_for_point(field, cand, (ix + 0.5) * l, cy,
                                          clearance_extra)
            out[(ix, iy)] = CellTimeline((ix, iy), complement_intervals(spans))
    return out


def _ball_spans(ex, ey, wx, wy, c, lo, hi):
    """Vectorized tau-spans inside [lo, hi] where |(ex, ey) - tau (wx, wy)| < c.

    Empty spans come back as (inf, -inf)."""
    a = wx * wx + wy * wy
    b = -2.0 * (ex * wx + ey * wy)
    k = ex * ex + ey * ey - c * c
    disc = b * b - 4.0 * a * k
    moving = a > 0.0
    hit = moving & (disc > 0.0)
    sq = np.sqrt(np.maximum(disc, 0.0))
    qq = np.where(b >= 0.0, -0.5 * (b + sq), -0.5 * (b - sq))
    r1 = qq / np.where(moving, a, 1.0)
    r2 = k / np.where(qq != 0.0, qq, 1.0)
    t_lo = np.where(hit, np.minimum(r1, r2), np.inf)
    t_hi = np.where(hit, np.maximum(r1, r2), -np.inf)
    still = ~moving & (k < 0.0)
    t_lo = np.where(still, -np.inf, t_lo)
    t_hi = np.where(still, np.inf, t_hi)
    t_lo = np.maximum(t_lo, lo)
    t_hi = np.minimum(t_hi, hi)
    empty = t_hi <= t_lo
    return np.where(empty, np.inf, t_lo), np.where(empty, -np.inf, t_hi)


def colliding_move_spans(field: ObstacleField, cand: np.ndarray,
                         ax: float, ay: float, bx: float, by: float,
                         speed: float,
                         clearance_extra: float) -> tuple[list[float], list[float]]:
    """Merged open departure-time spans on which the translation a -> b
    collides with any candidate obstacle segment.

    Per segment the colliding departures form a single interval; it is the
    union of the pieces where the closest approach happens at the departure
    instant, when the segment begins, at the arrival instant, when the
    segment ends, or at an interior stationary point of the relative
    distance. Each piece is a quadratic or linear condition in the departure
    time. A span reaching +inf marks a terminal rest segment that blocks the
    move forever.
    """
    dist = math.hypot(bx - ax, by - ay)
    if dist <= 0.0:
        raise ValueError("translation must cover a positive distance")
    n = len(cand)
    if n == 0:
        return [], []
    tm = dist / speed
    vrx = (bx - ax) / tm
    vry = (by - ay) / tm
    m = field.seg_mat[cand].T
    t0 = m[0]
    t1 = m[1]
    vx = m[2]
    vy = m[3]
    qx0 = m[4]
    qy0 = m[5]
    c = m[6] + clearance_extra
    t1f = m[7]
    fin = m[8] > 0.5
    rx = ax - qx0
    ry = ay - qy0
    # Boundary pieces, one batched ball test per row: closest approach at the
    # departure instant (robot still at a), when the segment begins (robot
    # mid-move at t0), at the arrival instant (robot at b), and when the
    # segment ends (robot mid-move at t1).
    ex = np.empty((4, n))
    ey = np.empty((4, n))
    wx = np.empty((4, n))
    wy = np.empty((4, n))
    wlo = np.empty((4, n))
    whi = np.empty((4, n))
    ex[0] = rx
    ey[0] = ry
    wx[0] = vx
    wy[0] = vy
    wlo[0] = t0
    whi[0] = t1
    ex[1] = ax + vrx * t0 - (qx0 + vx * t0)
    ey[1] = ay + vry * t0 - (qy0 + vy * t0)
    wx[1] = vrx
    wy[1] = vry
    wlo[1] = t0 - tm
    whi[1] = t0
    ex[2] = ax + (vrx - vx) * tm - qx0
    ey[2] = ay + (vry - vy) * tm - qy0
    wx[2] = vx
    wy[2] = vy
    wlo[2] = t0 - tm
    whi[2] = t1 - tm
    ex[3] = ax + vrx * t1f - (qx0 + vx * t1f)
    ey[3] = ay + vry * t1f - (qy0 + vy * t1f)
    wx[3] = vrx
    wy[3] = vry
    wlo[3] = t1f - tm
    whi[3] = t1f
    cc = np.broadcast_to(c, (4, n))
    blo, bhi = _ball_spans(ex, ey, wx, wy, cc, wlo, whi)
    blo[3] = np.where(fin, blo[3], np.inf)
    bhi[3] = np.where(fin, bhi[3], -np.inf)
    # interior stationary point: distance to the relative-motion line
    dx = vrx - vx
    dy = vry - vy
    dd = dx * dx + dy * dy
    ddn = np.where(dd > 0.0, dd, 1.0)
    k0 = rx * dy - ry * dx
    k1 = vry * dx - vrx * dy
    band = c * np.sqrt(dd)
    stat = np.abs(k0) < band
    k1n = np.where(k1 != 0.0, k1, 1.0)
    rplus = (band - k0) / k1n
    rminus = (-band - k0) / k1n
    lo5 = np.where(k1 != 0.0, np.minimum(rplus, rminus),
                   np.where(stat, -np.inf, np.inf))
    hi5 = np.where(k1 != 0.0, np.maximum(rplus, rminus),
                   np.where(stat, np.inf, -np.inf))
    u0 = -(rx * dx + ry * dy) / ddn
    u1 = (vrx * dx + vry * dy) / ddn
    # The stationary time u0 + u1 tau must fall inside the overlap window;
    # each row is one linear constraint k tau + m >= 0.
    kk = np.empty((4, n))
    mm = np.empty((4, n))
    kk[0] = u1 - 1.0
    mm[0] = u0
    kk[1] = 1.0 - u1
    mm[1] = tm - u0
    kk[2] = u1
    mm[2] = u0 - t0
    kk[3] = np.where(fin, -u1, 0.0)
    mm[3] = np.where(fin, t1f - u0, 1.0)
    with np.errstate(divide="ignore", invalid="ignore"):
        xx = -mm / np.where(kk != 0.0, kk, 1.0)
    lo5 = np.maximum(lo5, np.where(kk > 0.0, xx, -np.inf).max(axis=0))
    hi5 = np.minimum(hi5, np.where(kk < 0.0, xx, np.inf).min(axis=0))
    dead = ((kk == 0.0) & (mm < 0.0)).any(axis=0)
    live = (dd > 0.0) & ~dead & (hi5 > lo5)
    lo5 = np.where(live, lo5, np.inf)
    hi5 = np.where(live, hi5, -np.inf)
    seg_lo = np.minimum(blo.min(axis=0), lo5)
    seg_hi = np.maximum(bhi.max(axis=0), hi5)
    hitmask = seg_hi > seg_lo
    if not hitmask.any():
        return [], []
    s = seg_lo[hitmask]
    e = seg_hi[hitmask]
    order = np.argsort(s, kind="stable")
    s = s[order].tolist()
    e = e[order].tolist()
    starts = [s[0]]
    ends = [e[0]]
    for i in range(1, len(s)):
        # merge only proper overlaps: spans are open, so endpoints that merely
        # touch leave the shared instant safe
        if s[i] < ends[-1]:
            if e[i] > ends[-1]:
                ends[-1] = e[i]
        else:
            starts.append(s[i])
            ends.append(e[i])
    return starts, ends


def first_free_time(starts: list[float], ends: list[float],
                    lo: float, hi: float) -> float | None:
    """Earliest t in [lo, hi] outside every open busy span.

    The spans must be sorted by start and pairwise disjoint."""
    if hi < lo:
        return None
    tau = lo
    # Spans ending at or before lo cannot push tau; skip them in one step.
    for k in range(bisect.bisect_right(ends, lo), len(ends)):
        if starts[k] >= tau:
            break
        tau = ends[k]
        if tau > hi:
            return None
    return tau if tau <= hi else None


def earliest_departure(field: ObstacleField, cand: np.ndarray,
                       ax: float, ay: float, bx: float, by: float,
                       speed: float,
                       dep_lo: float, dep_hi: float,
                       arr_lo: float, arr_hi: float,
                       clearance_extra: float) -> float | None:
    """Earliest conflict-free departure time for the translation a -> b.

    The departure must lie in [dep_lo, dep_hi], the arrival in
    [arr_lo, arr_hi]. The colliding departures per obstacle segment form a
    single open interval computed in closed form; the answer is the first
    point of the allowed window outside their union.
    """
    dist = math.hypot(bx - ax, by - ay)
    if dist <= 0.0:
        raise ValueError("translation must cover a positive distance")
    tm = dist / speed
    lo = max(dep_lo, arr_lo - tm)
    hi = min(dep_hi, arr_hi - tm)
    if lo > hi:
        return None
    starts, ends = colliding_move_spans(field, cand, ax, ay, bx, by, speed,
                                        clearance_extra)
    return first_free_time(starts, ends, lo, hi)


def earliest_safe_departure(a, b, speed: float,
                            depart_interval: SafeInterval,
                            arrive_interval: SafeInterval,
                            obstacles, robot_radius: float,
                            inflation: float = 0.0,
                            earliest: float = 0.0) -> float | None:
    """Standalone earliest-departure query against raw obstacle schedules.

    a, b are (x, y) positions; the departure must fall inside
    depart_interval and be >= earliest, the arrival inside arrive_interval.
    Returns None when no such departure exists.
    """
    field = ObstacleField.from_obstacles(obstacles)
    cand = np.arange(field.n_segments, dtype=np.int64)
    return earliest_departure(
        field, cand, float(a[0]), float(a[1]), float(b[0]), float(b[1]),
        speed,
        max(depart_interval.begin, earliest), depart_interval.end,
        arrive_interval.begin, arrive_interval.end,
        robot_radius + inflation)
