from abc import ABC, abstractmethod
from dataclasses import dataclass
from typing import List, Tuple


@dataclass(frozen=True)
class FlightRequest:
    """一次起飞申请"""
    flight_id: int
    origin: Tuple[float, float]
    destination: Tuple[float, float]
    requested_departure: float


class DemandModel(ABC):
    """需求模型抽象基类"""

    def __init__(self, rng_seed: int = 0):
        self.rng_seed = rng_seed

    @abstractmethod
    def generate(self, n_flights: int) -> List[FlightRequest]:
        """生成起飞申请

        Args:
            n_flights: 航班数量

        Returns:
            按 flight_id 排序的起飞申请列表，相同种子结果相同
        """
        pass
