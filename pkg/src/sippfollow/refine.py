"""Refinement of timed plans into acceleration-bounded reference trajectories.

Each plan translation becomes a three-phase profile per axis (quadratic ramp,
linear cruise, quadratic ramp down) that reproduces the segment's endpoints,
duration, and zero boundary velocities. The cruise speed solves
T*a = v + L*a/v, so it deliberately exceeds the plan's average speed to pay
for the ramps. When no cruise speed can meet the duration the segment is
retimed at the axis speed cap and the lost time is pushed onto all later
segments. Rotations become cubic ease-in-ease-out heading laws.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field as dc_field

import numpy as np

from .geometry import shortest_angular_step
from .planner import Plan

_EPS_LEN = 1e-12


@dataclass(frozen=True)
class PolynomialPiece:
    """Polynomial in local time xi = t - t0, valid on [t0, t1]."""

    t0: float
    t1: float
    coeffs: tuple[float, ...]  # ascending powers, degree <= 3

    def __post_init__(self):
        if self.t1 < self.t0:
            raise ValueError("piece must have t1 >= t0")
        if not 1 <= len(self.coeffs) <= 4:
            raise ValueError("piece degree must be between 0 and 3")

    def value(self, t: float) -> float:
        xi = t - self.t0
        acc = 0.0
        for c in reversed(self.coeffs):
            acc = acc * xi + c
        return acc

    def derivative(self, t: float) -> float:
        xi = t - self.t0
        acc = 0.0
        for k in range(len(self.coeffs) - 1, 0, -1):
            acc = acc * xi + k * self.coeffs[k]
        return acc

    def second_derivative(self, t: float) -> float:
        xi = t - self.t0
        acc = 0.0
        for k in range(len(self.coeffs) - 1, 1, -1):
            acc = acc * xi + k * (k - 1) * self.coeffs[k]
        return acc


def axis_accel_bound(a_max: float, direction: float) -> tuple[float, float]:
    """Per-axis acceleration budget for a straight move along ``direction``."""
    return (a_max * abs(math.cos(direction)), a_max * abs(math.sin(direction)))


def cruise_velocity(x0: float, xf: float, t0: float, tf: float,
                    a: float) -> float:
    """Signed cruise speed of the time-matched trapezoidal profile.

    Solves v**2 - T*a*v + |xf - x0|*a = 0 for the slower root. Raises
    ValueError when the duration is infeasible under the acceleration bound
    (negative discriminant); callers fall back to a retimed profile.
    """
    length = abs(xf - x0)
    duration = tf - t0
    if duration <= 0.0:
        raise ValueError("segment must have positive duration")
    if a <= 0.0:
        raise ValueError("acceleration bound must be positive")
    disc = (duration * a) ** 2 - 4.0 * length * a
    if disc < 0.0:
        raise ValueError(
            f"no cruise speed covers {length:.6g} m in {duration:.6g} s "
            f"under {a:.6g} m/s^2")
    v = 0.5 * (duration * a - math.sqrt(disc))
    return math.copysign(v, xf - x0)


def _trapezoid_pieces(x0: float, t0: float, sign: float, v: float,
                      ramp: float, total: float) -> list[PolynomialPiece]:
    """Ramp/cruise/ramp pieces for one axis; v, ramp, total are magnitudes."""
    half_a = v / ramp * 0.5 if ramp > 0.0 else 0.0
    pieces = []
    t_ramp_end = t0 + ramp
    t_cruise_end = t0 + total - ramp
    pieces.append(PolynomialPiece(t0, t_ramp_end,
                                  (x0, 0.0, sign * half_a)))
    x_cruise = x0 + sign * 0.5 * v * ramp
    if t_cruise_end - t_ramp_end > _EPS_LEN:
        pieces.append(PolynomialPiece(t_ramp_end, t_cruise_end,
                                      (x_cruise, sign * v)))
        x_down = x_cruise + sign * v * (t_cruise_end - t_ramp_end)
    else:
        t_cruise_end = t_ramp_end
        x_down = x_cruise
    pieces.append(PolynomialPiece(t_cruise_end, t0 + total,
                                  (x_down, sign * v, -sign * half_a)))
    return pieces


def refine_translation(x0: float, xf: float, t0: float, tf: float,
                       a: float, v_cap: float,
                       ) -> tuple[list[PolynomialPiece], float]:
    """Acceleration-bounded profile for one axis of a straight move.

    Returns (pieces, overrun). The pieces cover [t0, tf + overrun], start and
    end at rest at x0 / xf, and keep |acceleration| <= a. overrun is zero
    whenever a cruise speed can reproduce the requested duration; otherwise
    the axis is retimed at v_cap (or the triangular peak speed when the move
    is too short to reach it).
    """
    length = abs(xf - x0)
    duration = tf - t0
    if duration <= 0.0:
        raise ValueError("segment must have positive duration")
    if length <= _EPS_LEN:
        return ([PolynomialPiece(t0, tf, (x0,))], 0.0)
    sign = 1.0 if xf > x0 else -1.0
    try:
        v = abs(cruise_velocity(x0, xf, t0, tf, a))
    except ValueError:
        v = None
    if v is not None:
        ramp = v / a
        return (_trapezoid_pieces(x0, t0, sign, v, ramp, duration), 0.0)
    if v_cap <= 0.0:
        raise ValueError("fallback needs a positive axis speed cap")
    if length < v_cap * v_cap / a:
        # Too short to reach the cap: triangular profile at the peak speed.
        v_peak = math.sqrt(length * a)
        new_total = 2.0 * math.sqrt(length / a)
        pieces = _trapezoid_pieces(x0, t0, sign, v_peak, v_peak / a, new_total)
    else:
        new_total = length / v_cap + v_cap / a
        pieces = _trapezoid_pieces(x0, t0, sign, v_cap, v_cap / a, new_total)
    return (pieces, new_total - duration)


def refine_rotation(theta0: float, theta1: float, t0: float, tf: float,
                    ) -> PolynomialPiece:
    """Cubic heading law from theta0 toward theta1 along the shortest branch.

    Boundary rates are zero; the peak rate is 1.5x the mean rate.
    theta0 is taken as a continuous (unwrapped) value; the piece ends at
    theta0 + signed shortest step, which equals theta1 modulo 2*pi.
    """
    duration = tf - t0
    if duration <= 0.0:
        raise ValueError("rotation must have positive duration")
    step = shortest_angular_step(theta0, theta1)
    return PolynomialPiece(t0, tf, (theta0, 0.0,
                                    3.0 * step / duration ** 2,
                                    -2.0 * step / duration ** 3))


@dataclass(frozen=True)
class ReferenceTrajectory:
    """Piecewise-polynomial reference for the three tracked coordinates.

    Pieces tile [0, t_end] per coordinate. The heading channel is continuous
    (unwrapped), so its values may leave [0, 2*pi).
    """

    x_pieces: tuple[PolynomialPiece, ...]
    y_pieces: tuple[PolynomialPiece, ...]
    theta_pieces: tuple[PolynomialPiece, ...]
    t_end: float
    plan: Plan | None = None
    warnings: tuple[str, ...] = ()
    overrun_total: float = 0.0
    stats: dict = dc_field(default_factory=dict, compare=False, repr=False)

    def _axis_state(self, pieces, t: float) -> tuple[float, float]:
        t = min(max(t, pieces[0].t0), pieces[-1].t1)
        for p in pieces:
            if t <= p.t1:
                return (p.value(t), p.derivative(t))
        last = pieces[-1]
        return (last.value(last.t1), last.derivative(last.t1))

    def state_at(self, t: float) -> tuple[float, float, float, float, float, float]:
        """(x, y, theta, vx, vy, omega) at time t, clamped to [0, t_end]."""
        x, vx = self._axis_state(self.x_pieces, t)
        y, vy = self._axis_state(self.y_pieces, t)
        th, om = self._axis_state(self.theta_pieces, t)
        return (x, y, th, vx, vy, om)

    def sample(self, ts: np.ndarray) -> dict[str, np.ndarray]:
        """Vectorized reference state on a sorted time grid.

        Times outside [0, t_end] clamp to the boundary states.
        """
        out = {}
        for name, pieces in (("x", self.x_pieces), ("y", self.y_pieces),
                             ("theta", self.theta_pieces)):
            val, der, acc = _sample_pieces(pieces, ts)
            out[name] = val
            out["d" + name] = der
            out["dd" + name] = acc
        return out

    def to_csv(self, path: str, dt: float = 1e-3) -> None:
        n = max(1, int(math.ceil(self.t_end / dt)))
        ts = np.minimum(np.arange(n + 1) * dt, self.t_end)
        s = self.sample(ts)
        data = np.column_stack([ts, s["x"], s["y"], s["theta"],
                                s["dx"], s["dy"], s["dtheta"]])
        np.savetxt(path, data, delimiter=",",
                   header="t,x,y,theta,vx,vy,omega", comments="")


def _sample_pieces(pieces: tuple[PolynomialPiece, ...], ts: np.ndarray):
    """Evaluate value/derivative/second derivative on a sorted time grid."""
    ts = np.asarray(ts, dtype=float)
    val = np.empty_like(ts)
    der = np.empty_like(ts)
    acc = np.empty_like(ts)
    starts = np.array([p.t0 for p in pieces])
    # Clamp beyond the ends to the boundary state of the first/last piece;
    # ts is sorted, so each piece owns one contiguous slice.
    ts_c = np.clip(ts, pieces[0].t0, pieces[-1].t1)
    bounds = np.append(np.searchsorted(ts_c, starts), len(ts_c))
    for k, p in enumerate(pieces):
        sl = slice(bounds[k], bounds[k + 1])
        if sl.start >= sl.stop:
            continue
        xi = np.minimum(ts_c[sl], p.t1) - p.t0
        c = p.coeffs
        v = np.zeros_like(xi)
        d = np.zeros_like(xi)
        a = np.zeros_like(xi)
        for j in range(len(c) - 1, -1, -1):
            v = v * xi + c[j]
            if j >= 1:
                d = d * xi + j * c[j]
            if j >= 2:
                a = a * xi + j * (j - 1) * c[j]
        val[sl] = v
        der[sl] = d
        acc[sl] = a
    return val, der, acc


def refine_plan(plan: Plan, a_max: float,
                v_max: float | None = None,
                omega_max: float | None = None) -> ReferenceTrajectory:
    """Turn a timed plan into an acceleration-bounded reference trajectory.

    Translation segments keep their planned duration whenever the
    acceleration budget allows; infeasible segments are retimed at the axis
    speed cap and every later segment shifts by the accumulated overrun.
    """
    if a_max <= 0.0:
        raise ValueError("a_max must be positive")
    v_cap = plan.v_max if v_max is None else float(v_max)
    omega = plan.omega_max if omega_max is None else float(omega_max)
    xs: list[PolynomialPiece] = []
    ys: list[PolynomialPiece] = []
    ths: list[PolynomialPiece] = []
    warnings: list[str] = []
    t_cur = 0.0
    x_cur, y_cur = plan.start.x, plan.start.y
    th_cur = plan.start.heading  # continuous, may leave [0, 2*pi)
    overrun_total = 0.0
    rot_excess = 0.0
    fallbacks = 0
    for k, action in enumerate(plan.actions):
        duration = action.t1 - action.t0
        if action.kind == "wait":
            t1 = t_cur + duration
            xs.append(PolynomialPiece(t_cur, t1, (x_cur,)))
            ys.append(PolynomialPiece(t_cur, t1, (y_cur,)))
            ths.append(PolynomialPiece(t_cur, t1, (th_cur,)))
            t_cur = t1
        elif action.kind == "rotate":
            t1 = t_cur + duration
            piece = refine_rotation(th_cur, action.theta1, t_cur, t1)
            xs.append(PolynomialPiece(t_cur, t1, (x_cur,)))
            ys.append(PolynomialPiece(t_cur, t1, (y_cur,)))
            ths.append(piece)
            step = shortest_angular_step(th_cur, action.theta1)
            # Peak rate of the cubic is 1.5x the mean rate.
            rot_excess = max(rot_excess, 1.5 * abs(step) / duration - omega)
            th_cur += step
            t_cur = t1
        elif action.kind == "translate":
            direction = math.atan2(action.y1 - action.y0,
                                   action.x1 - action.x0)
            ax_bound, ay_bound = axis_accel_bound(a_max, direction)
            vx_cap = v_cap * abs(math.cos(direction))
            vy_cap = v_cap * abs(math.sin(direction))
            t1 = t_cur + duration
            overruns = []
            for (p0, p1, bound, cap, dest) in (
                    (x_cur, action.x1, ax_bound, vx_cap, xs),
                    (y_cur, action.y1, ay_bound, vy_cap, ys)):
                if abs(p1 - p0) <= _EPS_LEN:
                    continue
                pieces, over = refine_translation(p0, p1, t_cur, t1,
                                                  bound, cap)
                overruns.append((over, pieces, dest))
            if not overruns:
                # Degenerate zero-length translate: hold position.
                xs.append(PolynomialPiece(t_cur, t1, (x_cur,)))
                ys.append(PolynomialPiece(t_cur, t1, (y_cur,)))
                ths.append(PolynomialPiece(t_cur, t1, (th_cur,)))
                t_cur = t1
                continue
            over = overruns[0][0]
            if len(overruns) == 2 and abs(overruns[0][0] - overruns[1][0]) > 1e-9:
                raise AssertionError("axis overruns diverged on a straight move")
            for _, pieces, dest in overruns:
                dest.extend(pieces)
            actual_end = t1 + over
            if over > 0.0:
                fallbacks += 1
                overrun_total += over
                warnings.append(
                    f"segment {k}: duration {duration:.3f} s infeasible under "
                    f"a_max={a_max:g}, retimed with +{over:.3f} s")
            # Axes that did not move still need covering pieces.
            if len(overruns) == 1:
                moved = overruns[0][2]
                still = ys if moved is xs else xs
                hold = y_cur if moved is xs else x_cur
                still.append(PolynomialPiece(t_cur, actual_end, (hold,)))
            ths.append(PolynomialPiece(t_cur, actual_end, (th_cur,)))
            x_cur, y_cur = action.x1, action.y1
            t_cur = actual_end
        else:  # pragma: no cover - PlanAction validates kinds
            raise ValueError(f"unknown action kind {action.kind!r}")
    if rot_excess > 0.0:
        warnings.append(
            f"cubic heading law peaks {rot_excess:.3f} rad/s above the "
            f"commanded turn rate (expected: peak is 1.5x the mean rate)")
    if not xs:
        # Empty plan: a single instantaneous hold at the start.
        xs.append(PolynomialPiece(0.0, 0.0, (x_cur,)))
        ys.append(PolynomialPiece(0.0, 0.0, (y_cur,)))
        ths.append(PolynomialPiece(0.0, 0.0, (th_cur,)))
    return ReferenceTrajectory(
        x_pieces=tuple(xs), y_pieces=tuple(ys), theta_pieces=tuple(ths),
        t_end=t_cur, plan=plan, warnings=tuple(warnings),
        overrun_total=overrun_total,
        stats={"fallback_segments": fallbacks})
