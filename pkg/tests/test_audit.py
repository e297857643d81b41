"""Tests for the independent clearance audits.

Static distances are checked against a dense brute-force scan, dynamic
episode extraction against a naive every-sample sweep, and the plan/trace
audits against hand-built plans whose contact times are known in closed form.
"""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import oracles
from conftest import empty_map, make_instance, make_map, make_obstacle

from sippfollow.audit import (Violation, audit_plan, audit_trace,
                              dynamic_contact_episodes,
                              min_obstacle_separation,
                              static_clearance_distances,
                              static_contact_episodes)
from sippfollow.grid import Configuration, DynamicObstacle
from sippfollow.planner import Plan, PlanAction


def straight_plan(x0, y0, x1, y1, speed=1.0, inflation=0.0, t0=0.0):
    """Single-translation plan between two points at constant speed."""
    length = math.hypot(x1 - x0, y1 - y0)
    heading = math.atan2(y1 - y0, x1 - x0)
    actions = []
    if t0 > 0.0:
        actions.append(PlanAction(kind="wait", t0=0.0, t1=t0, x0=x0, y0=y0,
                                  theta0=heading, x1=x0, y1=y0,
                                  theta1=heading))
    actions.append(PlanAction(kind="translate", t0=t0, t1=t0 + length / speed,
                              x0=x0, y0=y0, theta0=heading,
                              x1=x1, y1=y1, theta1=heading))
    return Plan(actions=tuple(actions), arrival_time=t0 + length / speed,
                mode="sipp", inflation=inflation,
                start=Configuration(x0, y0, heading), goal=(x1, y1),
                v_max=max(speed, 1.0), omega_max=math.pi)


# ---------------------------------------------------------------- statics


def test_static_distances_center_blocked():
    grid = make_map(["...", ".@.", "..."])
    xs = np.array([0.5, 0.75, 1.5, 1.5, 1.5])
    ys = np.array([0.5, 1.5, 0.9, 1.0 - 1e-9, 1.5])
    d = static_clearance_distances(grid, xs, ys, 0.5)
    # Corner cell: the wall at 0.5 is closer than the block at hypot(.5,.5).
    assert d[0] == pytest.approx(0.5, abs=1e-12)
    # Directly left of the block.
    assert d[1] == pytest.approx(0.25, abs=1e-12)
    # Below the block.
    assert d[2] == pytest.approx(0.1, abs=1e-12)
    # A hair below the block boundary.
    assert d[3] == pytest.approx(1e-9, abs=1e-12)
    # Inside the block.
    assert d[4] == 0.0


def test_static_distances_match_oracle():
    # The scan is exact out to ``reach`` whole cells; beyond that it only
    # promises a value at least that large, which is all the clearance test
    # consumes.
    rng = np.random.default_rng(7)
    for _ in range(20):
        rows = ["".join("@" if rng.random() < 0.3 else "." for _ in range(6))
                for _ in range(5)]
        grid = make_map(rows)
        radius = float(rng.uniform(0.2, 0.9))
        reach = int(math.ceil(radius / grid.cell_size))
        exact_to = reach * grid.cell_size
        xs = rng.uniform(0.0, 6.0, size=40)
        ys = rng.uniform(0.0, 5.0, size=40)
        got = static_clearance_distances(grid, xs, ys, radius)
        for x, y, g in zip(xs, ys, got):
            want = oracles.point_to_blocked_distance(grid, x, y)
            assert (g < radius - 1e-9) == (want < radius - 1e-9)
            if want < exact_to:
                assert math.isclose(g, want, abs_tol=1e-9)
            else:
                assert g >= exact_to - 1e-9


def test_static_episodes_two_dips():
    # Straight run along the bottom wall with two dips below clearance.
    grid = empty_map(8, 3)
    times = np.arange(0.0, 6.0, 1e-3)
    xs = 1.0 + times
    ys = np.full_like(times, 0.6)
    dip1 = (times > 1.0) & (times < 1.5)
    dip2 = (times > 3.0) & (times < 3.2)
    ys[dip1] = 0.45
    ys[dip2] = 0.49
    out = static_contact_episodes(grid, times, xs, ys, 0.5)
    assert [v.kind for v in out] == ["static", "static"]
    assert out[0].t == pytest.approx(times[np.nonzero(dip1)[0][0]])
    assert out[1].t == pytest.approx(times[np.nonzero(dip2)[0][0]])
    assert out[0].distance == pytest.approx(0.45, abs=1e-12)
    assert out[0].clearance == 0.5
    assert all(v.obstacle is None for v in out)
    # A generous grace forgives the shallow dip but not the deep one.
    out = static_contact_episodes(grid, times, xs, ys, 0.5, grace=0.02)
    assert len(out) == 1
    assert out[0].distance == pytest.approx(0.45, abs=1e-12)


# --------------------------------------------------------------- dynamics


def crossing_obstacle():
    """Drives straight through a robot parked at the origin over t in [0,10]."""
    return DynamicObstacle(radius=0.5, times=(0.0, 10.0), xs=(-5.0, 5.0),
                           ys=(0.0, 0.0))


def test_dynamic_episode_head_on_pass():
    obs = crossing_obstacle()
    times = np.arange(0.0, 10.0 + 1e-9, 1e-3)
    xs = np.zeros_like(times)
    ys = np.zeros_like(times)
    out = dynamic_contact_episodes(times, xs, ys, [obs], [1.0])
    assert len(out) == 1
    v = out[0]
    assert v.kind == "dynamic"
    assert v.obstacle == 0
    assert v.clearance == 1.0
    # The center distance is |t - 5|, so contact opens just after t = 4.
    assert v.t == pytest.approx(4.001, abs=1e-9)
    assert v.distance == pytest.approx(0.999, abs=1e-9)
    # Raising the grace threshold delays the recorded onset accordingly.
    out = dynamic_contact_episodes(times, xs, ys, [obs], [1.0], grace=0.1)
    assert out[0].t == pytest.approx(4.101, abs=1e-9)


def test_dynamic_episodes_sorted_across_obstacles():
    early = DynamicObstacle(radius=0.5, times=(0.0, 2.0), xs=(0.0, 0.0),
                            ys=(3.0, 0.0))
    late = DynamicObstacle(radius=0.5, times=(0.0, 8.0), xs=(-6.0, 2.0),
                           ys=(0.0, 0.0))
    times = np.arange(0.0, 9.0, 1e-3)
    xs = np.zeros_like(times)
    ys = np.zeros_like(times)
    out = dynamic_contact_episodes(times, xs, ys, [late, early], [1.0, 1.0])
    assert [v.obstacle for v in out] == [1, 0]
    assert out[0].t < out[1].t


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 10_000), stride=st.integers(2, 97))
def test_dynamic_episodes_match_naive_sweep(seed, stride):
    rng = np.random.default_rng(seed)
    n = 300
    times = np.arange(n) * 0.01
    xs = np.cumsum(rng.normal(0.0, 0.01, n)) + 3.0
    ys = np.cumsum(rng.normal(0.0, 0.01, n)) + 3.0
    obs = DynamicObstacle(
        radius=0.5, times=(0.0, float(rng.uniform(1.0, 3.0))),
        xs=tuple(rng.uniform(1.0, 5.0, 2)), ys=tuple(rng.uniform(1.0, 5.0, 2)))
    clearance = 0.7
    got = dynamic_contact_episodes(times, xs, ys, [obs], [clearance],
                                   coarse_stride=stride)
    ox, oy = oracles.obstacle_positions(obs, times)
    d = np.hypot(xs - ox, ys - oy)
    bad = np.nonzero(d < clearance - 1e-9)[0]
    starts = [i for k, i in enumerate(bad) if k == 0 or bad[k - 1] != i - 1]
    assert [v.t for v in got] == pytest.approx([times[i] for i in starts])
    assert [v.distance for v in got] == pytest.approx([d[i] for i in starts])


# ------------------------------------------------------------ plan audits


def test_audit_plan_clean():
    grid = empty_map(5, 3)
    obs = make_obstacle([(2.5, 2.5, 0.0)])
    inst = make_instance(grid, (0.5, 0.5), (4.5, 0.5), obstacles=(obs,))
    p = straight_plan(0.5, 0.5, 4.5, 0.5)
    assert audit_plan(p, inst) == []


def test_audit_plan_through_parked_obstacle():
    grid = empty_map(5, 3)
    obs = make_obstacle([(2.5, 1.5, 0.0)])
    inst = make_instance(grid, (0.5, 1.5), (4.5, 1.5), obstacles=(obs,))
    p = straight_plan(0.5, 1.5, 4.5, 1.5)
    out = audit_plan(p, inst)
    assert len(out) == 1
    v = out[0]
    assert v.kind == "dynamic"
    assert v.obstacle == 0
    # Distance along the row is |t - 2|, so contact opens just after t = 1.
    assert v.t == pytest.approx(1.001, abs=1e-9)


def test_audit_plan_static_hug():
    grid = empty_map(5, 3)
    inst = make_instance(grid, (0.5, 1.5), (4.5, 1.5))
    p = straight_plan(0.5, 0.4, 4.5, 0.4)
    out = audit_plan(p, inst)
    assert len(out) == 1
    assert out[0].kind == "static"
    assert out[0].t == 0.0
    assert out[0].distance == pytest.approx(0.4, abs=1e-9)
    assert out[0].clearance == 0.5


def test_audit_plan_applies_inflation():
    # A pass at exactly the uninflated clearance is legal; adding the plan's
    # own safety margin to the check flags it.
    grid = empty_map(5, 3)
    obs = make_obstacle([(2.5, 0.5, 0.0)])
    inst = make_instance(grid, (0.5, 1.5), (4.5, 1.5), obstacles=(obs,))
    assert audit_plan(straight_plan(0.5, 1.5, 4.5, 1.5), inst) == []
    out = audit_plan(straight_plan(0.5, 1.5, 4.5, 1.5, inflation=0.3), inst)
    assert len(out) == 1
    assert out[0].kind == "dynamic"
    assert out[0].clearance == pytest.approx(1.3)


def test_audit_plan_covers_goal_parking():
    # The obstacle reaches the parked robot only after arrival; the audit
    # horizon extends past the last waypoint, so the contact is still seen.
    grid = empty_map(5, 5)
    obs = make_obstacle([(4.5, 3.5, 0.0), (4.5, 1.5, 8.0)])
    inst = make_instance(grid, (0.5, 1.5), (4.5, 1.5), obstacles=(obs,))
    p = straight_plan(0.5, 1.5, 4.5, 1.5)
    out = audit_plan(p, inst)
    assert len(out) == 1
    assert out[0].kind == "dynamic"
    assert out[0].t > p.arrival_time
    # Parked at the goal, the gap is 2 - 0.25 t, crossing 1 right past t = 4.
    assert out[0].t == pytest.approx(4.001, abs=1e-9)


# ----------------------------------------------------------- trace audits


def test_audit_trace_refine_factor_catches_skips():
    # Coarse samples straddle the obstacle at exactly the clearance, so only
    # the upsampled audit sees the pass through its center.
    grid = empty_map(9, 3)
    obs = make_obstacle([(3.5, 1.5, 0.0)])
    inst = make_instance(grid, (0.5, 1.5), (8.5, 1.5), obstacles=(obs,))
    times = np.array([0.0, 1.0, 2.0, 3.0])
    xs = np.array([0.5, 2.5, 4.5, 6.5])
    ys = np.full(4, 1.5)
    assert audit_trace(times, xs, ys, inst) == []
    fine = audit_trace(times, xs, ys, inst, refine_factor=10)
    assert len(fine) == 1
    assert fine[0].kind == "dynamic"
    assert fine[0].distance < 1.0


def test_min_obstacle_separation():
    grid = empty_map(6, 6)
    parked = make_obstacle([(1.5, 1.5, 0.0)])
    mover = make_obstacle([(5.5, 0.5, 0.0), (5.5, 5.5, 5.0)])
    inst = make_instance(grid, (0.5, 0.5), (3.5, 3.5),
                         obstacles=(parked, mover))
    times = np.linspace(0.0, 5.0, 23)
    xs = 0.5 + 0.6 * times
    ys = np.full_like(times, 2.5)
    for chunk in (20000, 7):
        sep = min_obstacle_separation(times, xs, ys, inst, chunk=chunk)
        for k, t in enumerate(times):
            best = np.inf
            for obs in (parked, mover):
                ox, oy = oracles.obstacle_positions(obs, np.array([t]))
                best = min(best, math.hypot(xs[k] - ox[0], ys[k] - oy[0]) - 1.0)
            assert sep[k] == pytest.approx(best, abs=1e-12)
    none = make_instance(grid, (0.5, 0.5), (3.5, 3.5))
    assert np.all(np.isinf(min_obstacle_separation(times, xs, ys, none)))
