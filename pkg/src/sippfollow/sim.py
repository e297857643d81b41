"""Closed-loop tracking of reference trajectories with a flatness-based
state-feedback law, integrated by classical RK4.

Each coordinate is a double integrator under u = kd*(v - v*) - kp*(x - x*),
kd = lambda1 + lambda2, kp = lambda1 * lambda2, so the closed loop is linear
and time-invariant with the reference entering as a forcing term. One RK4
step is then an exact affine update z+ = M z + B0 w(t) + BH w(t + h/2)
+ B1 w(t + h); the whole rollout collapses to a second-order scalar
recurrence evaluated by scipy.signal.lfilter. The optional acceleration
clamp makes the loop nonlinear, which switches the integrator to an explicit
per-step RK4 with the clamp applied inside every stage evaluation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.signal import lfilter

from .audit import (Violation, dynamic_contact_episodes,
                    min_obstacle_separation, static_contact_episodes)
from .grid import Instance
from .refine import ReferenceTrajectory


class SimulationDiverged(RuntimeError):
    """Raised when the integrated state stops being finite."""


@dataclass(frozen=True)
class ControlGains:
    """Closed-loop pole pair of the per-coordinate tracking law."""

    lambda1: float = -4.0
    lambda2: float = -5.0

    def __post_init__(self):
        if not (self.lambda1 < 0.0 and self.lambda2 < 0.0):
            raise ValueError("both poles must be strictly negative")

    @property
    def kd(self) -> float:
        return self.lambda1 + self.lambda2

    @property
    def kp(self) -> float:
        return self.lambda1 * self.lambda2


@dataclass(frozen=True)
class RobotState:
    x: float
    y: float
    theta: float
    vx: float = 0.0
    vy: float = 0.0
    omega: float = 0.0


@dataclass(frozen=True)
class SimOutcome:
    """Trace and verdict of one closed-loop tracking run."""

    times: np.ndarray
    x: np.ndarray
    y: np.ndarray
    theta: np.ndarray
    vx: np.ndarray
    vy: np.ndarray
    omega: np.ndarray
    ux: np.ndarray
    uy: np.ndarray
    utheta: np.ndarray
    collisions: tuple[Violation, ...]
    success: bool
    rmse_plan: float | None
    rmse_ref: float
    arrival_time: float
    dt: float
    gains: ControlGains


def control(value, rate, ref_value, ref_rate, gains: ControlGains,
            ref_accel=0.0, feedforward: bool = False):
    """Tracking acceleration for one coordinate; works on scalars or arrays."""
    u = gains.kd * (rate - ref_rate) - gains.kp * (value - ref_value)
    if feedforward:
        u = u + ref_accel
    return u


def _rk4_matrices(gains: ControlGains, h: float):
    """Exact affine one-step map of the forced closed loop for step h."""
    a = np.array([[0.0, 1.0], [-gains.kp, gains.kd]])
    a2 = a @ a
    a3 = a2 @ a
    a4 = a3 @ a
    eye = np.eye(2)
    m = eye + h * a + (h * h / 2.0) * a2 + (h ** 3 / 6.0) * a3 \
        + (h ** 4 / 24.0) * a4
    b0 = (h / 6.0) * (eye + h * a + (h * h / 2.0) * a2 + (h ** 3 / 4.0) * a3)
    bh = (h / 6.0) * (4.0 * eye + 2.0 * h * a + (h * h / 2.0) * a2)
    b1 = (h / 6.0) * eye
    # The forcing enters only the velocity component.
    return m, b0[:, 1], bh[:, 1], b1[:, 1]


def _axis_rollout_linear(gains: ControlGains, h: float, n_steps: int,
                         x0: float, v0: float, w_half: np.ndarray):
    """Roll out n_steps of the affine RK4 map via a scalar linear recurrence.

    w_half holds the forcing sampled on the half-step grid
    (2 * n_steps + 1 points). Returns positions and velocities on the whole
    grid (n_steps + 1 points each).
    """
    if n_steps == 0:
        return np.array([x0]), np.array([v0])
    m, b0, bh, b1 = _rk4_matrices(gains, h)
    w0 = w_half[0:-1:2]
    wh = w_half[1::2]
    w1 = w_half[2::2]
    c0 = b0[0] * w0 + bh[0] * wh + b1[0] * w1
    c1 = b0[1] * w0 + bh[1] * wh + b1[1] * w1
    tr = m[0, 0] + m[1, 1]
    det = m[0, 0] * m[1, 1] - m[0, 1] * m[1, 0]
    x1 = m[0, 0] * x0 + m[0, 1] * v0 + c0[0]
    # x[k+2] = tr*x[k+1] - det*x[k] + (M01*c1[k] - M11*c0[k] + c0[k+1])
    drive = np.empty(n_steps + 1)
    drive[0] = x0
    drive[1] = x1 - tr * x0
    if n_steps > 1:
        drive[2:] = m[0, 1] * c1[:-1] - m[1, 1] * c0[:-1] + c0[1:]
    xs = lfilter([1.0], [1.0, -tr, det], drive)
    vs = np.empty(n_steps + 1)
    vs[:-1] = (xs[1:] - m[0, 0] * xs[:-1] - c0) / m[0, 1]
    vs[-1] = m[1, 0] * xs[-2] + m[1, 1] * vs[-2] + c1[-1]
    return xs, vs


def _axis_rollout_clamped(gains: ControlGains, h: float, n_steps: int,
                          x0: float, v0: float,
                          ref_val: np.ndarray, ref_rate: np.ndarray,
                          ref_acc: np.ndarray, limit: float,
                          feedforward: bool):
    """Explicit RK4 rollout with the clamp inside every stage evaluation.

    ref_* are sampled on the half-step grid (2 * n_steps + 1 points).
    """
    kd, kp = gains.kd, gains.kp
    lo, hi = -limit, limit
    xs = np.empty(n_steps + 1)
    vs = np.empty(n_steps + 1)
    xs[0], vs[0] = x0, v0
    x, v = x0, v0
    for k in range(n_steps):
        i0, ih, i1 = 2 * k, 2 * k + 1, 2 * k + 2

        def accel(px, pv, i):
            u = kd * (pv - ref_rate[i]) - kp * (px - ref_val[i])
            if feedforward:
                u += ref_acc[i]
            return min(hi, max(lo, u))

        a1 = accel(x, v, i0)
        x2, v2 = x + 0.5 * h * v, v + 0.5 * h * a1
        a2 = accel(x2, v2, ih)
        x3, v3 = x + 0.5 * h * v2, v + 0.5 * h * a2
        a3 = accel(x3, v3, ih)
        x4, v4 = x + h * v3, v + h * a3
        a4 = accel(x4, v4, i1)
        x = x + (h / 6.0) * (v + 2.0 * v2 + 2.0 * v3 + v4)
        v = v + (h / 6.0) * (a1 + 2.0 * a2 + 2.0 * a3 + a4)
        xs[k + 1], vs[k + 1] = x, v
    return xs, vs


def rmse_metrics(times: np.ndarray, xs: np.ndarray, ys: np.ndarray,
                 plan, reference: ReferenceTrajectory,
                 ) -> tuple[float | None, float]:
    """Position RMSE of a trace against the plan and against the reference.

    Both comparisons hold their target at its final position after it ends.
    """
    ref = reference.sample(times)
    err_ref = (xs - ref["x"]) ** 2 + (ys - ref["y"]) ** 2
    rmse_ref = float(np.sqrt(err_ref.mean()))
    if plan is None:
        return None, rmse_ref
    pos = plan.positions_at(times)
    err_plan = (xs - pos[:, 0]) ** 2 + (ys - pos[:, 1]) ** 2
    return float(np.sqrt(err_plan.mean())), rmse_ref


def simulate(reference: ReferenceTrajectory, instance: Instance | None = None,
             gains: ControlGains | None = None, dt: float = 1e-3,
             accel_limit: float | None = None, feedforward: bool = False,
             initial_state: RobotState | None = None,
             check_collisions: bool = True, grace: float = 1e-9,
             ) -> SimOutcome:
    """Track a reference trajectory in closed loop and audit the result.

    The robot starts on the reference unless initial_state overrides it.
    Collisions are recorded against the true clearances (no inflation) and
    never stop the rollout; success means the trace stayed contact-free.
    """
    if gains is None:
        gains = ControlGains()
    if not (0.0 < dt <= 0.01):
        raise ValueError("dt must lie in (0, 0.01]")
    t_end = reference.t_end
    n_steps = int(math.floor(t_end / dt + 1e-9))
    rem = t_end - n_steps * dt
    if rem < 1e-9:
        rem = 0.0
    half = np.arange(2 * n_steps + 1) * (0.5 * dt)
    ref_h = reference.sample(half)
    if initial_state is None:
        x0, y0, th0, vx0, vy0, om0 = reference.state_at(0.0)
        initial_state = RobotState(x0, y0, th0, vx0, vy0, om0)

    def rollout(axis: str, p0: float, r0: float):
        val = ref_h[axis]
        rate = ref_h["d" + axis]
        acc = ref_h["dd" + axis]
        if accel_limit is None:
            w = gains.kp * val - gains.kd * rate
            if feedforward:
                w = w + acc
            return _axis_rollout_linear(gains, dt, n_steps, p0, r0, w)
        return _axis_rollout_clamped(gains, dt, n_steps, p0, r0,
                                     val, rate, acc, accel_limit, feedforward)

    xs, vxs = rollout("x", initial_state.x, initial_state.vx)
    ys, vys = rollout("y", initial_state.y, initial_state.vy)
    ths, oms = rollout("theta", initial_state.theta, initial_state.omega)
    times = np.arange(n_steps + 1) * dt
    if rem > 0.0:
        t_tail = np.array([n_steps * dt, n_steps * dt + 0.5 * rem, t_end])
        tail = reference.sample(t_tail)
        m, b0, bh, b1 = _rk4_matrices(gains, rem)
        new = []
        for axis, arr_p, arr_v in (("x", xs, vxs), ("y", ys, vys),
                                   ("theta", ths, oms)):
            w = gains.kp * tail[axis] - gains.kd * tail["d" + axis]
            if feedforward:
                w = w + tail["dd" + axis]
            z = m @ np.array([arr_p[-1], arr_v[-1]]) \
                + b0 * w[0] + bh * w[1] + b1 * w[2]
            if accel_limit is not None:
                # Keep the clamped path consistent on the tail step too.
                pz, vz = _axis_rollout_clamped(
                    gains, rem, 1, arr_p[-1], arr_v[-1],
                    tail[axis], tail["d" + axis], tail["dd" + axis],
                    accel_limit, feedforward)
                z = np.array([pz[-1], vz[-1]])
            new.append(z)
        xs = np.append(xs, new[0][0])
        vxs = np.append(vxs, new[0][1])
        ys = np.append(ys, new[1][0])
        vys = np.append(vys, new[1][1])
        ths = np.append(ths, new[2][0])
        oms = np.append(oms, new[2][1])
        times = np.append(times, t_end)
    if not (np.isfinite(xs[-1]) and np.isfinite(ys[-1]) and
            np.isfinite(ths[-1]) and np.all(np.isfinite(xs))):
        bad = np.nonzero(~np.isfinite(xs))[0]
        t_bad = times[bad[0]] if len(bad) else times[-1]
        raise SimulationDiverged(
            f"state became non-finite near t={t_bad:.3f} s "
            f"(dt={dt:g}, poles {gains.lambda1:g}/{gains.lambda2:g})")

    ref_whole = {k: v[0::2] for k, v in ref_h.items()}
    if rem > 0.0:
        tail_s = reference.sample(np.array([t_end]))
        ref_whole = {k: np.append(v, tail_s[k][0])
                     for k, v in ref_whole.items()}
    ux = control(xs, vxs, ref_whole["x"], ref_whole["dx"], gains,
                 ref_whole["ddx"], feedforward)
    uy = control(ys, vys, ref_whole["y"], ref_whole["dy"], gains,
                 ref_whole["ddy"], feedforward)
    uth = control(ths, oms, ref_whole["theta"], ref_whole["dtheta"], gains,
                  ref_whole["ddtheta"], feedforward)
    if accel_limit is not None:
        ux = np.clip(ux, -accel_limit, accel_limit)
        uy = np.clip(uy, -accel_limit, accel_limit)
        uth = np.clip(uth, -accel_limit, accel_limit)

    collisions: list[Violation] = []
    if check_collisions and instance is not None:
        collisions = static_contact_episodes(
            instance.grid, times, xs, ys, instance.robot_radius, grace)
        clearances = [instance.robot_radius + obs.radius
                      for obs in instance.obstacles]
        collisions.extend(dynamic_contact_episodes(
            times, xs, ys, instance.obstacles, clearances, grace))
        collisions.sort(key=lambda v: v.t)
    rmse_plan, rmse_ref = rmse_metrics(times, xs, ys, reference.plan,
                                       reference)
    return SimOutcome(
        times=times, x=xs, y=ys, theta=ths, vx=vxs, vy=vys, omega=oms,
        ux=ux, uy=uy, utheta=uth, collisions=tuple(collisions),
        success=(len(collisions) == 0), rmse_plan=rmse_plan,
        rmse_ref=rmse_ref, arrival_time=t_end, dt=dt, gains=gains)


def export_trace_csv(outcome: SimOutcome, path: str,
                     instance: Instance | None = None) -> None:
    """Write the trace as CSV, including the per-sample obstacle separation."""
    if instance is not None and instance.obstacles:
        sep = min_obstacle_separation(outcome.times, outcome.x, outcome.y,
                                      instance)
    else:
        sep = np.full(len(outcome.times), np.inf)
    data = np.column_stack([
        outcome.times, outcome.x, outcome.y, outcome.theta,
        outcome.vx, outcome.vy, outcome.omega,
        outcome.ux, outcome.uy, outcome.utheta, sep])
    np.savetxt(path, data, delimiter=",",
               header="t,x,y,theta,vx,vy,omega,ux,uy,utheta,"
                      "min_obstacle_separation", comments="")
