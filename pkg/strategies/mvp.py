"""Modified Voltage Potential 冲突解脱

预测采用意图广播：本机与入侵机都按各自直飞目的地的期望速度外推，
预测间隔小于 min_separation 时，在最近接近点把入侵机推到 resolution_target，
所需位移除以到达 CPA 的时间即为速度修正量。
"""
import logging
from typing import List

import numpy as np

from core.agent import Agent
from core.trajectory import TrajectoryPoint, ConflictPrediction
from core.resolution import ConflictResolution, register_resolution

logger = logging.getLogger(__name__)

_EPS = 1e-9


def _cpa_arrays(d: np.ndarray, w: np.ndarray):
    """相对位置 d、相对速度 w 下的 (t_cpa, 相对位置@CPA)"""
    w2 = float(w @ w)
    t = 0.0 if w2 < _EPS else max(0.0, -float(d @ w) / w2)
    return t, d + w * t


def cpa(own: TrajectoryPoint, intruder: TrajectoryPoint, intruder_id: int = -1) -> ConflictPrediction:
    """匀速外推下的最近接近点

    Args:
        own: 本机状态
        intruder: 入侵机状态
        intruder_id: 写入结果的入侵机编号

    Returns:
        ConflictPrediction；相对速度为零或最近点已过去时 t_cpa = 0
    """
    d = intruder.position - own.position
    w = intruder.velocity - own.velocity
    t, r = _cpa_arrays(d, w)
    return ConflictPrediction(intruder_id, t, float(np.hypot(*r)))


def _escape_direction(r: np.ndarray, w: np.ndarray, d: np.ndarray) -> np.ndarray:
    """入侵机在 CPA 处相对本机的单位方向

    CPA 正好重合时取相对速度的右法向，对两机互为相反方向。
    """
    norm = np.hypot(*r)
    if norm > _EPS:
        return r / norm
    for v in (w, d):
        n = np.hypot(*v)
        if n > _EPS:
            return np.array([v[1], -v[0]]) / n
    return np.array([1.0, 0.0])


def clamp_speed(v: np.ndarray, max_speed: float) -> np.ndarray:
    speed = np.hypot(*v)
    if speed > max_speed:
        return v * (max_speed / speed)
    return v


def mvp_resolve(own: Agent, neighbors: List[Agent], cfg) -> np.ndarray:
    """MVP 指令速度

    Args:
        own: 本机
        neighbors: 感知半径内的邻机
        cfg: SimConfig

    Returns:
        指令速度 (vx, vy)；无冲突时等于期望速度
    """
    v_pref = own.preferred_velocity(cfg.max_speed)
    target = cfg.resolution_target
    correction = np.zeros(2)
    for other in sorted(neighbors, key=lambda a: a.id):
        if other.id == own.id:
            continue
        d = other.position - own.position
        w = other.preferred_velocity(cfg.max_speed) - v_pref
        t_cpa, r_cpa = _cpa_arrays(d, w)
        if t_cpa > cfg.lookahead:
            continue
        d_cpa = np.hypot(*r_cpa)
        if d_cpa >= cfg.min_separation:
            continue
        unit = _escape_direction(r_cpa, w, d)
        correction -= (target - d_cpa) * unit / max(t_cpa, cfg.tick)
    return clamp_speed(v_pref + correction, cfg.max_speed)


@register_resolution
class MVPResolution(ConflictResolution):
    name = 'MVP'

    def resolve(self, own: Agent, neighbors: List[Agent]) -> np.ndarray:
        return mvp_resolve(own, neighbors, self.cfg)


@register_resolution
class NoResolution(ConflictResolution):
    """不做冲突解脱，始终直飞"""
    name = 'OFF'

    def resolve(self, own: Agent, neighbors: List[Agent]) -> np.ndarray:
        return own.preferred_velocity(self.cfg.max_speed)
