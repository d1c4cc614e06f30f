from enum import Enum
from dataclasses import dataclass, field
from typing import List, Tuple

import numpy as np

from core.trajectory import TrajectoryPoint, Trajectory2D


class Phase(Enum):
    PENDING = 'pending'
    AIRBORNE = 'airborne'
    ARRIVED = 'arrived'


@dataclass
class Agent:
    """仿真中的一架 eVTOL"""
    id: int
    origin: Tuple[float, float]
    destination: Tuple[float, float]
    requested_departure: float
    state: TrajectoryPoint = None
    phase: Phase = Phase.PENDING
    history: List[TrajectoryPoint] = field(default_factory=list)

    def __post_init__(self):
        if tuple(self.origin) == tuple(self.destination):
            raise ValueError(f"航班 {self.id} 起降点重合")
        if self.state is None:
            self.state = TrajectoryPoint(self.origin[0], self.origin[1], 0.0, 0.0, self.requested_departure)

    @property
    def position(self) -> np.ndarray:
        return self.state.position

    @property
    def velocity(self) -> np.ndarray:
        return self.state.velocity

    def distance_to_destination(self) -> float:
        return float(np.hypot(self.destination[0] - self.state.x, self.destination[1] - self.state.y))

    def preferred_velocity(self, max_speed: float) -> np.ndarray:
        """直飞目的地、以最大速度飞行的速度"""
        delta = np.asarray(self.destination, dtype=float) - self.position
        dist = np.hypot(*delta)
        if dist == 0:
            return np.zeros(2)
        return delta / dist * max_speed

    def to_trajectory(self) -> Trajectory2D:
        return Trajectory2D(self.id, tuple(self.origin), tuple(self.destination), list(self.history))
