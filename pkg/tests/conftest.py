import numpy as np
import pytest

from core.config import SimConfig, VehicleConfig, EvaluationConfig
from core.mission import MissionSpec, DilationBounds
from core.trajectory import TrajectoryPoint, Trajectory2D


@pytest.fixture
def sim_cfg():
    return SimConfig()


@pytest.fixture
def vehicle():
    return VehicleConfig()


@pytest.fixture
def evaluation():
    return EvaluationConfig()


@pytest.fixture
def mission_spec(vehicle):
    return MissionSpec.baseline(vehicle.v_stall)


@pytest.fixture
def zero_bounds():
    return DilationBounds(delta_vertical=0.0, delta_horizontal=0.0)


@pytest.fixture
def default_bounds():
    return DilationBounds()


def straight_trajectory(flight_id: int, length: float, speed: float = 44.0, heading: float = 0.0,
                        start=(0.0, 0.0), t0: float = 0.0) -> Trajectory2D:
    """以 1 s 间隔采样的匀速直线轨迹"""
    n = int(np.ceil(length / speed)) + 1
    t = t0 + np.arange(n, dtype=float)
    vx, vy = speed * np.cos(heading), speed * np.sin(heading)
    points = [TrajectoryPoint(start[0] + vx * (ti - t0), start[1] + vy * (ti - t0), vx, vy, ti) for ti in t]
    return Trajectory2D(flight_id, (points[0].x, points[0].y), (points[-1].x, points[-1].y), points)


@pytest.fixture
def make_trajectory():
    return straight_trajectory
