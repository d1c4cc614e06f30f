from abc import ABC, abstractmethod
from typing import Dict, List, Type

import numpy as np

from core.exceptions import ConfigError


class ConflictResolution(ABC):
    """冲突解脱方法基类

    resolve 对当前快照中的一架飞机给出指令速度，不修改任何状态。
    """
    name: str = ''

    def __init__(self, cfg):
        self.cfg = cfg

    @abstractmethod
    def resolve(self, own, neighbors: List) -> np.ndarray:
        """计算指令速度

        Args:
            own: 本机 Agent
            neighbors: 感知半径内的其他空中 Agent

        Returns:
            指令速度 (vx, vy)，模不超过 max_speed
        """
        pass


_REGISTRY: Dict[str, Type[ConflictResolution]] = {}


def register_resolution(cls: Type[ConflictResolution]) -> Type[ConflictResolution]:
    """注册冲突解脱方法，按 cls.name 查找"""
    _REGISTRY[cls.name.upper()] = cls
    return cls


def get_resolution(name: str, cfg) -> ConflictResolution:
    try:
        return _REGISTRY[name.upper()](cfg)
    except KeyError:
        raise ConfigError(f"未知的冲突解脱方法 {name}，可选 {sorted(_REGISTRY)}", field='sim.resolution_method')
