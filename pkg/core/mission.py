"""任务剖面数据结构

包括九个任务段的基线规格 (MissionSpec)、随机化区间 (DilationBounds)
以及扩展后的完整任务剖面 (MissionProfile)。所有数值均为 SI。
"""
from enum import Enum
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple, Any

import numpy as np

from core.units import to_si
from core.exceptions import ConfigError, DilationError


class SegmentKind(Enum):
    """任务段类型，定义顺序即任务执行顺序"""
    HoverClimb = 'HoverClimb'
    TransitionClimb = 'TransitionClimb'
    DepartureTerminalProcedure = 'DepartureTerminalProcedure'
    AccelClimb = 'AccelClimb'
    Cruise = 'Cruise'
    DecelDescend = 'DecelDescend'
    ArrivalTerminalProcedure = 'ArrivalTerminalProcedure'
    TransitionDescend = 'TransitionDescend'
    HoverDescend = 'HoverDescend'


SEGMENT_ORDER: Tuple[SegmentKind, ...] = tuple(SegmentKind)

CLIMB_KINDS = {SegmentKind.HoverClimb, SegmentKind.TransitionClimb, SegmentKind.AccelClimb}
DESCENT_KINDS = {SegmentKind.DecelDescend, SegmentKind.TransitionDescend, SegmentKind.HoverDescend}
LEVEL_KINDS = {SegmentKind.DepartureTerminalProcedure, SegmentKind.Cruise,
               SegmentKind.ArrivalTerminalProcedure}
HOVER_KINDS = {SegmentKind.HoverClimb, SegmentKind.HoverDescend}


@dataclass(frozen=True)
class SpeedSchedule:
    """速度表：常值 (start == end) 或线性斜坡"""
    start: float
    end: float

    @classmethod
    def constant(cls, value: float) -> 'SpeedSchedule':
        return cls(value, value)

    @property
    def is_ramp(self) -> bool:
        return self.start != self.end

    @property
    def mean(self) -> float:
        return 0.5 * (self.start + self.end)

    def to_list(self) -> List[float]:
        return [self.start, self.end]


@dataclass(frozen=True)
class SegmentSpec:
    """单个任务段的规格

    vertical_speed 与 horizontal_speed 为幅值 (>= 0)，方向由高度变化决定。
    """
    kind: SegmentKind
    vertical_speed: SpeedSchedule
    horizontal_speed: SpeedSchedule
    end_altitude: float

    def __post_init__(self):
        name = self.kind.value
        if self.end_altitude < 0:
            raise ConfigError("结束高度不能为负", field=f"{name}.end_altitude")
        for label, sched in (('vertical_speed', self.vertical_speed),
                             ('horizontal_speed', self.horizontal_speed)):
            if sched.start < 0 or sched.end < 0:
                raise ConfigError("速度幅值不能为负", field=f"{name}.{label}")
        if self.kind in HOVER_KINDS and (self.horizontal_speed.start != 0
                                         or self.horizontal_speed.end != 0):
            raise ConfigError("悬停段水平速度必须为 0", field=f"{name}.horizontal_speed")


def baseline_segments(v_stall: float, cruise_altitude: float) -> Tuple[SegmentSpec, ...]:
    """基线任务规格

    Args:
        v_stall: 失速速度 (m/s)，过渡段速度取 1.2 倍
        cruise_altitude: 巡航高度 (m AGL)

    Returns:
        按执行顺序排列的九个 SegmentSpec
    """
    fpm = lambda v: to_si(v, 'ft/min')
    mph = lambda v: to_si(v, 'mph')
    ft = lambda v: to_si(v, 'ft')
    v_tr = 1.2 * v_stall
    const = SpeedSchedule.constant
    ramp = SpeedSchedule

    K = SegmentKind
    return (
        SegmentSpec(K.HoverClimb, ramp(0.0, fpm(500)), const(0.0), ft(50)),
        SegmentSpec(K.TransitionClimb, const(fpm(500)), ramp(0.0, v_tr), ft(300)),
        SegmentSpec(K.DepartureTerminalProcedure, const(0.0), const(v_tr), ft(300)),
        SegmentSpec(K.AccelClimb, const(fpm(500)), ramp(v_tr, mph(110)), cruise_altitude),
        SegmentSpec(K.Cruise, const(0.0), const(mph(110)), cruise_altitude),
        SegmentSpec(K.DecelDescend, const(fpm(500)), ramp(mph(110), v_tr), ft(300)),
        SegmentSpec(K.ArrivalTerminalProcedure, ramp(0.0, fpm(500)), const(v_tr), ft(300)),
        SegmentSpec(K.TransitionDescend, ramp(fpm(500), fpm(300)), ramp(v_tr, 0.0), ft(50)),
        SegmentSpec(K.HoverDescend, ramp(fpm(300), 0.0), const(0.0), 0.0),
    )


@dataclass(frozen=True)
class MissionSpec:
    """完整任务规格"""
    segments: Tuple[SegmentSpec, ...]
    cruise_altitude: float = to_si(1500, 'ft')
    # 终端区程序段在基线表中没有距离，按固定时长飞平飞
    terminal_duration: float = 60.0
    # 离场程序在该时间内由过渡结束速度调整到程序速度
    procedure_entry_time: float = 1.0

    def __post_init__(self):
        kinds = tuple(s.kind for s in self.segments)
        if kinds != SEGMENT_ORDER:
            raise ConfigError(f"任务段顺序必须为 {[k.value for k in SEGMENT_ORDER]}", field='mission.segments')
        if self.cruise_altitude <= 0:
            raise ConfigError("巡航高度必须为正", field='mission.cruise_altitude')
        if self.terminal_duration <= 0:
            raise ConfigError("终端区程序时长必须为正", field='mission.terminal_duration')
        if not 0 < self.procedure_entry_time <= self.terminal_duration:
            raise ConfigError("程序进入时间必须在 (0, terminal_duration] 内", field='mission.procedure_entry_time')
        if self.segment(SegmentKind.Cruise).end_altitude != self.cruise_altitude:
            raise ConfigError("巡航段高度必须等于 cruise_altitude", field='mission.cruise_altitude')

        start = 0.0
        for seg in self.segments:
            name = seg.kind.value
            if seg.kind in CLIMB_KINDS and seg.end_altitude <= start:
                raise ConfigError("爬升段结束高度必须高于起始高度", field=f"{name}.end_altitude")
            if seg.kind in DESCENT_KINDS and seg.end_altitude >= start:
                raise ConfigError("下降段结束高度必须低于起始高度", field=f"{name}.end_altitude")
            if seg.kind in LEVEL_KINDS and seg.end_altitude != start:
                raise ConfigError("平飞段高度必须保持不变", field=f"{name}.end_altitude")
            if seg.kind in CLIMB_KINDS | DESCENT_KINDS and seg.vertical_speed.mean <= 0:
                raise ConfigError("高度变化段的平均垂直速度必须为正", field=f"{name}.vertical_speed")
            start = seg.end_altitude
        if start != 0.0:
            raise ConfigError("最后一段必须降落到地面", field='HoverDescend.end_altitude')

    @classmethod
    def baseline(cls, v_stall: float, cruise_altitude: float = to_si(1500, 'ft'), **kwargs) -> 'MissionSpec':
        return cls(baseline_segments(v_stall, cruise_altitude), cruise_altitude=cruise_altitude, **kwargs)

    def segment(self, kind: SegmentKind) -> SegmentSpec:
        return self.segments[SEGMENT_ORDER.index(kind)]

    def start_altitude(self, kind: SegmentKind) -> float:
        idx = SEGMENT_ORDER.index(kind)
        return 0.0 if idx == 0 else self.segments[idx - 1].end_altitude


@dataclass(frozen=True)
class DilationBounds:
    """速度随机化区间半宽 Δ，取值区间为 [μ-Δ, μ+Δ]，高度不参与随机化"""
    delta_vertical: float = field(default=to_si(100, 'ft/min'), metadata={'dimension': 'vertical_speed'})
    delta_horizontal: float = field(default=to_si(15, 'mph'), metadata={'dimension': 'speed'})
    rng_seed: int = 0

    def __post_init__(self):
        if self.delta_vertical < 0:
            raise ConfigError("Δ 不能为负", field='bounds.delta_vertical')
        if self.delta_horizontal < 0:
            raise ConfigError("Δ 不能为负", field='bounds.delta_horizontal')

    def check_against(self, spec: MissionSpec):
        """确认随机化后的速度保持为正：对每个非零 μ 要求 Δ < μ"""
        for seg in spec.segments:
            for label, sched, delta in (('vertical_speed', seg.vertical_speed, self.delta_vertical),
                                        ('horizontal_speed', seg.horizontal_speed, self.delta_horizontal)):
                for mu in (sched.start, sched.end):
                    if mu != 0 and delta >= mu:
                        raise ConfigError(f"Δ={delta:.4g} 不小于 μ={mu:.4g}",
                                          field=f"bounds.delta_{label.split('_')[0]}")


@dataclass(frozen=True)
class Waypoint:
    """巡航段三维航路点"""
    x: float
    y: float
    z: float
    vx: float
    vy: float
    t: float

    @property
    def speed(self) -> float:
        return float(np.hypot(self.vx, self.vy))


@dataclass
class MissionSegment:
    """扩展后的任务段

    horizontal / vertical 为分段线性速度表的结点 (段内时间, 速度)，
    垂直速度带符号，下降为负。巡航段另带航路点。
    """
    kind: SegmentKind
    start_time: float
    duration: float
    start_altitude: float
    end_altitude: float
    horizontal: List[Tuple[float, float]]
    vertical: List[Tuple[float, float]]
    spec: Optional[SegmentSpec] = None
    waypoints: List[Waypoint] = field(default_factory=list)

    @property
    def end_time(self) -> float:
        return self.start_time + self.duration

    def horizontal_speed_at(self, tau) -> np.ndarray:
        t, v = zip(*self.horizontal)
        return np.interp(tau, t, v)

    def vertical_speed_at(self, tau) -> np.ndarray:
        t, v = zip(*self.vertical)
        return np.interp(tau, t, v)

    def horizontal_accel_at(self, tau) -> np.ndarray:
        """速度表各段斜率；结点处取后一段"""
        t = np.array([k[0] for k in self.horizontal])
        v = np.array([k[1] for k in self.horizontal])
        slopes = np.zeros(len(t))
        dt = np.diff(t)
        with np.errstate(divide='ignore', invalid='ignore'):
            slopes[:-1] = np.where(dt > 0, np.diff(v) / dt, 0.0)
        idx = np.clip(np.searchsorted(t, tau, side='right') - 1, 0, len(t) - 1)
        return slopes[idx]

    def altitude_at(self, tau) -> np.ndarray:
        """对垂直速度表积分得到高度"""
        t = np.array([k[0] for k in self.vertical])
        v = np.array([k[1] for k in self.vertical])
        cum = np.concatenate([[0.0], np.cumsum(0.5 * (v[1:] + v[:-1]) * np.diff(t))])
        tau = np.asarray(tau, dtype=float)
        idx = np.clip(np.searchsorted(t, tau, side='right') - 1, 0, len(t) - 2)
        dt = tau - t[idx]
        seg_dt = t[idx + 1] - t[idx]
        with np.errstate(divide='ignore', invalid='ignore'):
            slope = np.where(seg_dt > 0, (v[idx + 1] - v[idx]) / seg_dt, 0.0)
        return self.start_altitude + cum[idx] + v[idx] * dt + 0.5 * slope * dt * dt

    def to_dict(self) -> Dict[str, Any]:
        data = {
            'kind': self.kind.value,
            'start_time_s': self.start_time,
            'duration_s': self.duration,
            'start_altitude_m': self.start_altitude,
            'end_altitude_m': self.end_altitude,
            'horizontal_speed_mps': [list(k) for k in self.horizontal],
            'vertical_speed_mps': [list(k) for k in self.vertical],
        }
        if self.spec is not None:
            data['realized_spec'] = {
                'vertical_speed_mps': self.spec.vertical_speed.to_list(),
                'horizontal_speed_mps': self.spec.horizontal_speed.to_list(),
                'end_altitude_m': self.spec.end_altitude,
            }
        if self.waypoints:
            data['waypoints'] = [[w.x, w.y, w.z, w.vx, w.vy, w.t] for w in self.waypoints]
        return data

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> 'MissionSegment':
        kind = SegmentKind(data['kind'])
        spec = None
        if 'realized_spec' in data:
            rs = data['realized_spec']
            spec = SegmentSpec(kind, SpeedSchedule(*rs['vertical_speed_mps']),
                               SpeedSchedule(*rs['horizontal_speed_mps']), rs['end_altitude_m'])
        return cls(
            kind=kind,
            start_time=data['start_time_s'],
            duration=data['duration_s'],
            start_altitude=data['start_altitude_m'],
            end_altitude=data['end_altitude_m'],
            horizontal=[tuple(k) for k in data['horizontal_speed_mps']],
            vertical=[tuple(k) for k in data['vertical_speed_mps']],
            spec=spec,
            waypoints=[Waypoint(*w) for w in data.get('waypoints', [])],
        )


@dataclass
class MissionProfile:
    """单个航班的完整任务剖面"""
    flight_id: int
    segments: List[MissionSegment]

    @property
    def duration(self) -> float:
        return sum(s.duration for s in self.segments)

    def segment(self, kind: SegmentKind) -> MissionSegment:
        for seg in self.segments:
            if seg.kind == kind:
                return seg
        raise KeyError(kind)

    @property
    def cruise_range(self) -> float:
        """巡航段地面航迹长度"""
        wps = self.segment(SegmentKind.Cruise).waypoints
        xy = np.array([[w.x, w.y] for w in wps])
        if len(xy) < 2:
            return 0.0
        return float(np.sum(np.hypot(*np.diff(xy, axis=0).T)))

    def check_invariants(self, altitude_tol: float = 0.1, speed_tol: float = 0.1):
        """检查段序、时长以及段间高度/水平速度连续性

        Raises:
            DilationError: 任一约束不满足
        """
        kinds = tuple(s.kind for s in self.segments)
        if kinds != SEGMENT_ORDER:
            raise DilationError(f"任务段顺序错误: {[k.value for k in kinds]}", self.flight_id)
        if abs(self.segments[0].start_altitude) > altitude_tol:
            raise DilationError("任务必须从地面开始", self.flight_id)
        for seg in self.segments:
            if not seg.duration > 0:
                raise DilationError(f"{seg.kind.value} 时长必须为正", self.flight_id)
            end_alt = float(seg.altitude_at(seg.duration))
            if abs(end_alt - seg.end_altitude) > altitude_tol:
                raise DilationError(f"{seg.kind.value} 积分高度 {end_alt:.3f} 与结束高度 "
                                    f"{seg.end_altitude:.3f} 不一致", self.flight_id)
        for prev, nxt in zip(self.segments[:-1], self.segments[1:]):
            if abs(prev.end_altitude - nxt.start_altitude) > altitude_tol:
                raise DilationError(f"{prev.kind.value}->{nxt.kind.value} 高度不连续", self.flight_id)
            v_out = float(prev.horizontal_speed_at(prev.duration))
            v_in = float(nxt.horizontal_speed_at(0.0))
            if abs(v_out - v_in) > speed_tol:
                raise DilationError(f"{prev.kind.value}->{nxt.kind.value} 水平速度不连续: "
                                    f"{v_out:.3f} -> {v_in:.3f}", self.flight_id)
            if abs(prev.end_time - nxt.start_time) > 1e-6:
                raise DilationError(f"{prev.kind.value}->{nxt.kind.value} 时间不连续", self.flight_id)

    def to_dict(self) -> Dict[str, Any]:
        return {
            'flight_id': self.flight_id,
            'range_m': self.cruise_range,
            'duration_s': self.duration,
            'segments': [s.to_dict() for s in self.segments],
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> 'MissionProfile':
        return cls(flight_id=int(data['flight_id']),
                   segments=[MissionSegment.from_dict(s) for s in data['segments']])
