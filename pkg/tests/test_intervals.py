import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from sippfollow import (
    LinearMotion,
    SafeInterval,
    build_cell_timelines,
    disk_collision_interval,
    earliest_safe_departure,
)
from sippfollow.intervals import (
    ObstacleField,
    colliding_move_spans,
    complement_intervals,
    first_free_time,
    merge_busy_intervals,
)

from conftest import empty_map, make_obstacle
from oracles import (
    brute_force_departure,
    dense_collision_interval,
    min_separation_exact,
)


def test_safe_interval_requires_positive_length():
    iv = SafeInterval(1.0, 2.5)
    assert iv.contains(1.0) and iv.contains(2.5) and not iv.contains(2.6)
    with pytest.raises(ValueError):
        SafeInterval(2.0, 2.0)


def test_head_on_crossing_interval_is_exact():
    hold = LinearMotion.hold(0.0, 0.0, 0.0, 10.0)
    mover = LinearMotion.from_endpoints(-5.0, 0.0, 5.0, 0.0, 0.0, 10.0)
    got = disk_collision_interval(hold, mover, 1.0)
    assert got is not None
    assert math.isclose(got[0], 4.0, abs_tol=1e-12)
    assert math.isclose(got[1], 6.0, abs_tol=1e-12)
    wider = disk_collision_interval(hold, mover, 1.5)
    assert math.isclose(wider[0], 3.5, abs_tol=1e-12)
    assert math.isclose(wider[1], 6.5, abs_tol=1e-12)


def test_crossing_interval_matches_dense_sampling():
    hold = LinearMotion.hold(0.0, 0.0, 0.0, 10.0)
    mover = LinearMotion.from_endpoints(-5.0, 0.0, 5.0, 0.0, 0.0, 10.0)
    for clearance in (1.0, 1.5):
        exact = disk_collision_interval(hold, mover, clearance)
        dense = dense_collision_interval(hold, mover, clearance)
        assert abs(exact[0] - dense[0]) <= 2e-3
        assert abs(exact[1] - dense[1]) <= 2e-3


def test_parallel_constant_separation_no_collision():
    a = LinearMotion.from_endpoints(0.0, 0.0, 10.0, 0.0, 0.0, 10.0)
    b = LinearMotion.from_endpoints(0.0, 3.0, 10.0, 3.0, 0.0, 10.0)
    assert disk_collision_interval(a, b, 1.0) is None


def test_tangency_is_not_a_collision():
    hold = LinearMotion.hold(0.0, 0.0, 0.0, 10.0)
    grazer = LinearMotion.from_endpoints(-5.0, 1.0, 5.0, 1.0, 0.0, 10.0)
    assert disk_collision_interval(hold, grazer, 1.0) is None


def test_collision_interval_clips_to_common_window():
    hold = LinearMotion.hold(0.0, 0.0, 0.0, 10.0)
    half = LinearMotion.from_endpoints(-5.0, 0.0, 0.0, 0.0, 0.0, 5.0)
    got = disk_collision_interval(hold, half, 1.0)
    assert math.isclose(got[0], 4.0, abs_tol=1e-12)
    assert math.isclose(got[1], 5.0, abs_tol=1e-12)


def test_parked_overlap_is_unbounded():
    a = LinearMotion.hold(0.0, 0.0, 0.0, math.inf)
    b = LinearMotion.hold(0.5, 0.0, 0.0, math.inf)
    got = disk_collision_interval(a, b, 1.0)
    assert got[0] == 0.0 and math.isinf(got[1])


motions = st.builds(
    LinearMotion,
    st.floats(-4, 4), st.floats(-4, 4),      # origin
    st.floats(-1.5, 1.5), st.floats(-1.5, 1.5),  # velocity
    st.just(0.0), st.floats(0.5, 12.0))      # window


@given(motions, motions, st.floats(0.2, 2.0))
def test_collision_interval_is_symmetric(a, b, clearance):
    ab = disk_collision_interval(a, b, clearance)
    ba = disk_collision_interval(b, a, clearance)
    if ab is None:
        assert ba is None
    else:
        assert math.isclose(ab[0], ba[0], abs_tol=1e-12)
        assert math.isclose(ab[1], ba[1], abs_tol=1e-12)


@given(motions, motions, st.floats(0.2, 1.5), st.floats(0.01, 1.0))
def test_collision_interval_grows_with_clearance(a, b, c1, extra):
    small = disk_collision_interval(a, b, c1)
    big = disk_collision_interval(a, b, c1 + extra)
    if small is not None:
        assert big is not None
        assert big[0] <= small[0] + 1e-12
        assert big[1] >= small[1] - 1e-12


def test_random_pairs_match_dense_oracle():
    rng = np.random.default_rng(3)
    found = 0
    for _ in range(300):
        a = LinearMotion(*rng.uniform(-3, 3, size=2),
                         *rng.uniform(-1.2, 1.2, size=2),
                         0.0, float(rng.uniform(1.0, 10.0)))
        b = LinearMotion(*rng.uniform(-3, 3, size=2),
                         *rng.uniform(-1.2, 1.2, size=2),
                         0.0, float(rng.uniform(1.0, 10.0)))
        clearance = float(rng.uniform(0.3, 1.8))
        exact = disk_collision_interval(a, b, clearance)
        dense = dense_collision_interval(a, b, clearance)
        if dense is not None:
            # a sampled hit can never be spurious
            assert exact is not None
            assert abs(exact[0] - dense[0]) <= 2e-3
            assert abs(exact[1] - dense[1]) <= 2e-3
            found += 1
        elif exact is not None:
            # sampling may only miss sub-resolution grazes
            assert exact[1] - exact[0] < 2e-3
    assert found > 50


def test_merge_unions_touching_and_overlapping_spans():
    # a single free instant between open spans is no usable safe time
    assert merge_busy_intervals([(1.0, 3.0), (3.0, 5.0)]) == [(1.0, 5.0)]
    assert merge_busy_intervals([(1.0, 3.0), (2.5, 5.0)]) == [(1.0, 5.0)]
    assert merge_busy_intervals([(4.0, 5.0), (1.0, 2.0)]) == [(1.0, 2.0),
                                                              (4.0, 5.0)]
    assert merge_busy_intervals([]) == []


def test_complement_tiles_the_time_axis():
    out = complement_intervals([(2.0, 4.0), (4.5, 7.0)])
    assert [(iv.begin, iv.end) for iv in out] == [
        (0.0, 2.0), (4.0, 4.5), (7.0, math.inf)]


def test_complement_discards_noise_gaps():
    out = complement_intervals([(1.0, 5.0), (5.0 + 5e-7, 9.0)])
    assert [(iv.begin, iv.end) for iv in out] == [(0.0, 1.0),
                                                  (9.0, math.inf)]


def test_complement_of_nothing_is_everything():
    out = complement_intervals([])
    assert len(out) == 1 and out[0].begin == 0.0 and math.isinf(out[0].end)


spans_strategy = st.lists(
    st.tuples(st.floats(0.0, 20.0), st.floats(0.05, 5.0)), max_size=8)


@given(spans_strategy)
def test_complement_and_busy_union_cover_everything(raw):
    busy = merge_busy_intervals([(s, s + w) for s, w in raw])
    safe = complement_intervals([(s, s + w) for s, w in raw])
    probes = np.linspace(0.0, 30.0, 601)
    for t in probes:
        in_busy = any(s < t < e for s, e in busy)
        in_safe = any(iv.begin <= t <= iv.end for iv in safe)
        # a probe can fall in a discarded noise gap, never in neither+both
        assert in_busy or in_safe or any(
            abs(t - s) < 1e-6 or abs(t - e) < 1e-6 for s, e in busy)
        assert not (in_busy and in_safe)


def test_timelines_without_obstacles_are_unbounded(empty3):
    tls = build_cell_timelines(empty3, [], 0.5)
    assert len(tls) == 9
    for tl in tls.values():
        assert len(tl.intervals) == 1
        assert tl.intervals[0].begin == 0.0
        assert math.isinf(tl.intervals[0].end)


def test_single_crossing_splits_cell_timeline_in_two():
    grid = empty_map(5, 3)
    obs = make_obstacle([(0.5, 1.5, 0), (4.5, 1.5, 4)])
    tls = build_cell_timelines(grid, [obs], 0.5)
    tl = tls[(2, 1)]
    # |x_obs(t) - 2.5| < 1 exactly for t in (1, 3)
    assert len(tl.intervals) == 2
    assert math.isclose(tl.intervals[0].begin, 0.0, abs_tol=1e-12)
    assert math.isclose(tl.intervals[0].end, 1.0, abs_tol=1e-9)
    assert math.isclose(tl.intervals[1].begin, 3.0, abs_tol=1e-9)
    assert math.isinf(tl.intervals[1].end)


def test_parked_obstacle_empties_its_cell():
    grid = empty_map(5, 3)
    obs = make_obstacle([(2.5, 1.5, 0)])
    tls = build_cell_timelines(grid, [obs], 0.5)
    assert tls[(2, 1)].intervals == ()
    # far cell is untouched
    assert math.isinf(tls[(0, 0)].intervals[0].end)


def test_timelines_match_stationary_sampling():
    grid = empty_map(6, 4)
    rng = np.random.default_rng(11)
    obstacles = []
    for _ in range(3):
        n = int(rng.integers(2, 5))
        ts = np.concatenate([[0.0], np.cumsum(rng.uniform(0.5, 3.0, n - 1))])
        xs = rng.uniform(0.5, 5.5, n)
        ys = rng.uniform(0.5, 3.5, n)
        obstacles.append(make_obstacle(list(zip(xs, ys, ts))))
    inflation = 0.1
    tls = build_cell_timelines(grid, obstacles, 0.5, inflation)
    ts = np.linspace(0.0, 15.0, 3001)
    for (ix, iy), tl in tls.items():
        cx, cy = (ix + 0.5), (iy + 0.5)
        dmin = np.full(ts.shape, np.inf)
        for obs in obstacles:
            pts = obs.positions_at(ts)
            dmin = np.minimum(dmin,
                              np.hypot(pts[:, 0] - cx, pts[:, 1] - cy))
        clearance = 0.5 + 0.5 + inflation
        for t, d in zip(ts, dmin):
            if abs(d - clearance) < 2e-3:
                continue  # too close to the threshold for sampling
            safe = any(iv.begin <= t <= iv.end for iv in tl.intervals)
            assert safe == (d >= clearance), ((ix, iy), t, d)


def _naive_first_free(starts, ends, lo, hi):
    t = lo
    while True:
        inside = [e for s, e in zip(starts, ends) if s < t < e]
        if not inside:
            return t if t <= hi else None
        t = max(inside)
        if t > hi:
            return None


@given(spans_strategy, st.floats(0.0, 25.0), st.floats(0.0, 10.0))
def test_first_free_time_matches_naive_scan(raw, lo, width):
    spans = merge_busy_intervals([(s, s + w) for s, w in raw])
    starts = [s for s, _ in spans]
    ends = [e for _, e in spans]
    hi = lo + width
    got = first_free_time(starts, ends, lo, hi)
    want = _naive_first_free(starts, ends, lo, hi)
    assert got == want


def test_first_free_time_rejects_empty_window():
    assert first_free_time([], [], 5.0, 4.0) is None


def test_colliding_move_spans_match_exact_departure_predicate():
    rng = np.random.default_rng(23)
    obstacles = []
    for _ in range(3):
        n = int(rng.integers(2, 5))
        ts = np.concatenate([[0.0], np.cumsum(rng.uniform(0.8, 3.0, n - 1))])
        xs = rng.uniform(0.0, 6.0, n)
        ys = rng.uniform(0.0, 6.0, n)
        obstacles.append(make_obstacle(list(zip(xs, ys, ts))))
    field = ObstacleField.from_obstacles(obstacles)
    cand = np.arange(field.n_segments, dtype=np.int64)
    a, b = (0.5, 0.5), (5.5, 4.5)
    speed = 1.0
    clearance = 0.5 + 0.5 + 0.05
    starts, ends = colliding_move_spans(field, cand, a[0], a[1], b[0], b[1],
                                        speed, 0.5 + 0.05)
    dur = math.hypot(b[0] - a[0], b[1] - a[1]) / speed
    v = ((b[0] - a[0]) / dur, (b[1] - a[1]) / dur)
    for td in rng.uniform(0.0, field.horizon + 4.0, 400):
        if any(abs(td - x) < 1e-6 for x in starts + ends):
            continue  # exactly at a span boundary, either verdict fine
        in_span = any(s < td < e for s, e in zip(starts, ends))
        collides = any(
            min_separation_exact(a, v, td, td + dur, obs) < clearance - 1e-12
            for obs in obstacles)
        assert in_span == collides, td


def test_departure_without_obstacles_is_immediate():
    got = earliest_safe_departure(
        (0.0, 0.0), (3.0, 4.0), 1.0,
        SafeInterval(2.0, math.inf), SafeInterval(0.0, math.inf),
        [], 0.5)
    assert got == 2.0


def test_departure_postponed_until_crossing_clears():
    # obstacle sweeps the robot's crossing point around t=2
    obs = make_obstacle([(-2.0, 0.0, 0.0), (2.0, 0.0, 4.0)])
    a, b = (0.0, -2.0), (0.0, 2.0)
    got = earliest_safe_departure(
        a, b, 1.0, SafeInterval(0.0, math.inf), SafeInterval(0.0, math.inf),
        [obs], 0.5)
    assert got is not None and got > 0.1
    want = brute_force_departure(a, b, 1.0, [obs], 1.0, 0.0, 10.0)
    assert abs(got - want) <= 1e-3
    # re-simulating the returned departure never violates the clearance
    sep = min_separation_exact(a, (0.0, 1.0), got, got + 4.0, obs)
    assert sep >= 1.0 - 1e-9
    # and departing a hair earlier does violate it
    sep_early = min_separation_exact(a, (0.0, 1.0), got - 1e-4,
                                     got - 1e-4 + 4.0, obs)
    assert sep_early < 1.0


def test_departure_respects_arrival_interval():
    got = earliest_safe_departure(
        (0.0, 0.0), (0.0, 4.0), 1.0,
        SafeInterval(0.0, math.inf), SafeInterval(0.0, 3.0),
        [], 0.5)
    assert got is None


def test_departure_inflation_shrinks_options():
    obs = make_obstacle([(-2.0, 0.0, 0.0), (2.0, 0.0, 4.0)])
    a, b = (0.0, -2.0), (0.0, 2.0)
    base = earliest_safe_departure(
        a, b, 1.0, SafeInterval(0.0, math.inf), SafeInterval(0.0, math.inf),
        [obs], 0.5)
    inflated = earliest_safe_departure(
        a, b, 1.0, SafeInterval(0.0, math.inf), SafeInterval(0.0, math.inf),
        [obs], 0.5, inflation=0.4)
    assert inflated >= base
    want = brute_force_departure(a, b, 1.0, [obs], 1.4, 0.0, 10.0)
    assert abs(inflated - want) <= 1e-3


def test_obstacle_field_horizon_and_counts():
    obs1 = make_obstacle([(0.5, 0.5, 0), (3.5, 0.5, 3)])
    obs2 = make_obstacle([(1.5, 2.5, 0)])
    field = ObstacleField.from_obstacles([obs1, obs2])
    assert field.horizon == 3.0
    assert field.n_segments == 3  # one move, two terminal rests
