"""Planar geometry helpers shared by the map, planner, and audit code."""

from __future__ import annotations

import math

import numpy as np

TWO_PI = 2.0 * math.pi


def normalize_angle(theta: float) -> float:
    """Map an angle in radians to the canonical range [0, 2*pi)."""
    theta = math.fmod(theta, TWO_PI)
    if theta < 0.0:
        theta += TWO_PI
    # fmod can return exactly TWO_PI after the correction when theta is a
    # tiny negative number; fold that back to zero.
    return 0.0 if theta >= TWO_PI else theta


def angular_distance(a: float, b: float) -> float:
    """Unsigned magnitude of the shortest rotation from heading a to b, in [0, pi]."""
    d = math.fmod(b - a, TWO_PI)
    if d < 0.0:
        d += TWO_PI
    return min(d, TWO_PI - d)


def shortest_angular_step(a: float, b: float) -> float:
    """Signed shortest rotation from a to b, in (-pi, pi]."""
    d = math.fmod(b - a, TWO_PI)
    if d < 0.0:
        d += TWO_PI
    if d > math.pi:
        d -= TWO_PI
    return d


def segment_point_distance(ax: float, ay: float, bx: float, by: float,
                           px: float, py: float) -> float:
    """Distance from point p to the closed segment a-b."""
    dx = bx - ax
    dy = by - ay
    dd = dx * dx + dy * dy
    if dd <= 0.0:
        return math.hypot(px - ax, py - ay)
    s = ((px - ax) * dx + (py - ay) * dy) / dd
    s = min(1.0, max(0.0, s))
    return math.hypot(px - (ax + s * dx), py - (ay + s * dy))


def _orient(ax: float, ay: float, bx: float, by: float, cx: float, cy: float) -> float:
    return (bx - ax) * (cy - ay) - (by - ay) * (cx - ax)


def segments_intersect(p1x: float, p1y: float, p2x: float, p2y: float,
                       q1x: float, q1y: float, q2x: float, q2y: float) -> bool:
    """True when the closed segments p1-p2 and q1-q2 share at least one point."""
    d1 = _orient(q1x, q1y, q2x, q2y, p1x, p1y)
    d2 = _orient(q1x, q1y, q2x, q2y, p2x, p2y)
    d3 = _orient(p1x, p1y, p2x, p2y, q1x, q1y)
    d4 = _orient(p1x, p1y, p2x, p2y, q2x, q2y)
    if ((d1 > 0 and d2 < 0) or (d1 < 0 and d2 > 0)) and \
       ((d3 > 0 and d4 < 0) or (d3 < 0 and d4 > 0)):
        return True

    def on_seg(ax, ay, bx, by, cx, cy):
        return min(ax, bx) <= cx <= max(ax, bx) and min(ay, by) <= cy <= max(ay, by)

    if d1 == 0 and on_seg(q1x, q1y, q2x, q2y, p1x, p1y):
        return True
    if d2 == 0 and on_seg(q1x, q1y, q2x, q2y, p2x, p2y):
        return True
    if d3 == 0 and on_seg(p1x, p1y, p2x, p2y, q1x, q1y):
        return True
    if d4 == 0 and on_seg(p1x, p1y, p2x, p2y, q2x, q2y):
        return True
    return False


def segment_segment_distance(p1x: float, p1y: float, p2x: float, p2y: float,
                             q1x: float, q1y: float, q2x: float, q2y: float) -> float:
    """Minimum distance between two closed segments."""
    if segments_intersect(p1x, p1y, p2x, p2y, q1x, q1y, q2x, q2y):
        return 0.0
    return min(
        segment_point_distance(p1x, p1y, p2x, p2y, q1x, q1y),
        segment_point_distance(p1x, p1y, p2x, p2y, q2x, q2y),
        segment_point_distance(q1x, q1y, q2x, q2y, p1x, p1y),
        segment_point_distance(q1x, q1y, q2x, q2y, p2x, p2y),
    )


def point_box_distance(px: float, py: float,
                       x0: float, y0: float, x1: float, y1: float) -> float:
    """Distance from point p to the closed axis-aligned box [x0,x1] x [y0,y1]."""
    dx = max(x0 - px, 0.0, px - x1)
    dy = max(y0 - py, 0.0, py - y1)
    return math.hypot(dx, dy)


def segment_box_distance(ax: float, ay: float, bx: float, by: float,
                         x0: float, y0: float, x1: float, y1: float) -> float:
    """Minimum distance between the closed segment a-b and a closed box.

    Zero when the segment touches or crosses the box.
    """
    if x0 <= ax <= x1 and y0 <= ay <= y1:
        return 0.0
    if x0 <= bx <= x1 and y0 <= by <= y1:
        return 0.0
    return min(
        segment_segment_distance(ax, ay, bx, by, x0, y0, x1, y0),
        segment_segment_distance(ax, ay, bx, by, x1, y0, x1, y1),
        segment_segment_distance(ax, ay, bx, by, x1, y1, x0, y1),
        segment_segment_distance(ax, ay, bx, by, x0, y1, x0, y0),
    )


def segment_box_distance_batch(ax: float, ay: float, bx: float, by: float,
                               lox: np.ndarray, loy: np.ndarray,
                               hix: np.ndarray, hiy: np.ndarray) -> np.ndarray:
    """Distances from segment a-b to many closed axis-aligned boxes at once.

    The squared point-box distance along the segment is convex and piecewise
    quadratic in the segment parameter, so its minimum lies at a segment
    endpoint, where the segment crosses a box-edge line, or at the stationary
    point of one of the four corner regimes; evaluating the true distance at
    all ten candidates and taking the minimum is exact.
    """
    ux = bx - ax
    uy = by - ay
    dd = ux * ux + uy * uy
    n = len(lox)
    t = np.empty((10, n), dtype=float)
    t[0] = 0.0
    t[1] = 1.0
    inv_x = 1.0 / ux if ux != 0.0 else 0.0
    inv_y = 1.0 / uy if uy != 0.0 else 0.0
    t[2] = (lox - ax) * inv_x
    t[3] = (hix - ax) * inv_x
    t[4] = (loy - ay) * inv_y
    t[5] = (hiy - ay) * inv_y
    if dd > 0.0:
        for i, (ex, ey) in enumerate(((lox, loy), (lox, hiy),
                                      (hix, loy), (hix, hiy))):
            t[6 + i] = ((ex - ax) * ux + (ey - ay) * uy) / dd
    else:
        t[6:] = 0.0
    np.clip(t, 0.0, 1.0, out=t)
    px = ax + t * ux
    py = ay + t * uy
    gx = np.maximum(np.maximum(lox - px, px - hix), 0.0)
    gy = np.maximum(np.maximum(loy - py, py - hiy), 0.0)
    return np.sqrt((gx * gx + gy * gy).min(axis=0))
