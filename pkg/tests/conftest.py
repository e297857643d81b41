import math

import numpy as np
import pytest

from sippfollow import Configuration, DynamicObstacle, Instance, load_map


def make_map(rows, cell_size=1.0):
    """Build a GridMap from character rows; rows[0] is the bottom (y=0)."""
    width = len(rows[0])
    text = f"{width} {len(rows)} {cell_size}\n" + "\n".join(rows)
    return load_map(text)


def empty_map(width, height, cell_size=1.0):
    return make_map(["." * width] * height, cell_size)


def make_obstacle(waypoints, radius=0.5):
    """waypoints: iterable of (x, y, t) with t strictly increasing from 0."""
    xs = [w[0] for w in waypoints]
    ys = [w[1] for w in waypoints]
    ts = [w[2] for w in waypoints]
    return DynamicObstacle(radius=radius, times=np.array(ts, dtype=float),
                           xs=np.array(xs, dtype=float),
                           ys=np.array(ys, dtype=float))


def make_instance(grid, start, goal, obstacles=(), heading=0.0,
                  v_max=1.0, omega_max=math.pi):
    return Instance(
        grid=grid,
        start=Configuration(start[0], start[1], heading),
        goal=(goal[0], goal[1]),
        robot_radius=0.5 * grid.cell_size,
        obstacles=tuple(obstacles),
        v_max=v_max,
        omega_max=omega_max)


@pytest.fixture
def empty3():
    return empty_map(3, 3)


@pytest.fixture
def center_blocked3():
    return make_map([
        "...",
        ".@.",
        "...",
    ])
