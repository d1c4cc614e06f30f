import logging
from typing import List, Sequence, Tuple

import numpy as np

from core.demand import DemandModel, FlightRequest


class PoissonDemand(DemandModel):
    """泊松到达 + 作业区内均匀分布的起降点

    作业区为以原点为中心、边长 area_side 的正方形。
    """

    def __init__(self, area_side: float, arrival_rate: float, min_od_distance: float, rng_seed: int = 0):
        """
        :param area_side: 作业区边长 (m)
        :param arrival_rate: 到达率 (架次/s)
        :param min_od_distance: 起降点最小距离 (m)
        :param rng_seed: 随机种子
        """
        super().__init__(rng_seed)
        self.half = 0.5 * area_side
        self.arrival_rate = arrival_rate
        self.min_od_distance = min_od_distance
        self.logger = logging.getLogger(__name__)

    @classmethod
    def from_config(cls, cfg, rng_seed: int = None) -> 'PoissonDemand':
        seed = cfg.rng_seed if rng_seed is None else rng_seed
        return cls(cfg.area_side, cfg.arrival_rate, cfg.min_od_distance, seed)

    def _sample_pair(self, rng: np.random.Generator) -> Tuple[np.ndarray, np.ndarray]:
        origin = rng.uniform(-self.half, self.half, size=2)
        while True:
            destination = rng.uniform(-self.half, self.half, size=2)
            if np.hypot(*(destination - origin)) >= self.min_od_distance:
                return origin, destination

    def generate(self, n_flights: int) -> List[FlightRequest]:
        rng = np.random.default_rng(self.rng_seed)
        gaps = rng.exponential(1.0 / self.arrival_rate, size=n_flights)
        # 第一架在 t=0 申请
        times = np.concatenate([[0.0], np.cumsum(gaps[1:])])
        requests = []
        for i in range(n_flights):
            origin, destination = self._sample_pair(rng)
            requests.append(FlightRequest(i, tuple(map(float, origin)), tuple(map(float, destination)),
                                          float(times[i])))
        self.logger.info(f"生成 {n_flights} 个起飞申请，最后申请时刻 {times[-1]:.1f}s")
        return requests


class ScheduledDemand(DemandModel):
    """给定起降点与申请时刻的需求，用于构造确定的遭遇场景"""

    def __init__(self, flights: Sequence[Tuple[Tuple[float, float], Tuple[float, float], float]]):
        """
        :param flights: [(origin, destination, requested_departure), ...]
        """
        super().__init__(0)
        self.flights = list(flights)

    def generate(self, n_flights: int = None) -> List[FlightRequest]:
        flights = self.flights if n_flights is None else self.flights[:n_flights]
        return [FlightRequest(i, tuple(map(float, o)), tuple(map(float, d)), float(t))
                for i, (o, d, t) in enumerate(flights)]
