"""配置结构与配置文件加载

配置文件为 YAML，包含 sim / vehicle / mission / bounds / evaluation 五个段。
数值字段可以是裸数字 (SI) 或带单位后缀的字符串，例如 "1500 ft"。
"""
import json
import math
import hashlib
import logging
from pathlib import Path
from dataclasses import dataclass, field, fields, asdict, replace
from typing import Any, Dict, Tuple, Union

import yaml

from core.units import to_si, parse_quantity, G0, HOUR
from core.exceptions import ConfigError, UnitError
from core.mission import (MissionSpec, DilationBounds, SegmentKind, SegmentSpec,
                          SpeedSchedule, baseline_segments)

logger = logging.getLogger(__name__)


def _q(default, dimension: str):
    """带量纲的字段"""
    return field(default=default, metadata={'dimension': dimension})


@dataclass(frozen=True)
class SimConfig:
    """UTM 仿真参数"""
    area_side: float = _q(50_000.0, 'length')
    min_separation: float = _q(500.0, 'length')
    sensing_radius: float = _q(5_000.0, 'length')
    max_speed: float = _q(to_si(100.662, 'mph'), 'speed')
    tick: float = _q(1.0, 'time')
    rng_seed: int = 42
    n_flights: int = 262
    # 需求模型：泊松到达率与最小起降点距离
    arrival_rate: float = _q(0.05, 'rate')
    min_od_distance: float = _q(5_000.0, 'length')
    # 解脱位移目标 = min_separation × resolution_margin，触发条件仍是 d_cpa < min_separation
    resolution_margin: float = 1.1
    resolution_method: str = 'MVP'
    # 仿真时间上限，防止无法结束
    horizon: float = _q(2 * 86_400.0, 'time')

    def __post_init__(self):
        if not self.area_side > 0:
            raise ConfigError("必须为正", field='sim.area_side')
        if not 0 < self.min_separation < self.sensing_radius:
            raise ConfigError("必须满足 0 < min_separation < sensing_radius", field='sim.min_separation')
        if not self.max_speed > 0:
            raise ConfigError("必须为正", field='sim.max_speed')
        if not self.tick > 0:
            raise ConfigError("必须为正", field='sim.tick')
        if self.n_flights < 1:
            raise ConfigError("至少为 1", field='sim.n_flights')
        if not self.arrival_rate > 0:
            raise ConfigError("必须为正", field='sim.arrival_rate')
        if not 0 <= self.min_od_distance < self.area_side * math.sqrt(2):
            raise ConfigError("超出作业区对角线", field='sim.min_od_distance')
        if self.resolution_margin < 1:
            raise ConfigError("不能小于 1", field='sim.resolution_margin')
        if not self.horizon > 0:
            raise ConfigError("必须为正", field='sim.horizon')

    @property
    def lookahead(self) -> float:
        """冲突探测前瞻时间"""
        return self.sensing_radius / self.max_speed

    @property
    def arrival_threshold(self) -> float:
        return self.max_speed * self.tick

    @property
    def resolution_target(self) -> float:
        """MVP 在最近接近点把间隔推到的距离"""
        return self.min_separation * self.resolution_margin


@dataclass(frozen=True)
class VehicleConfig:
    """升力+巡航构型 eVTOL 参数"""
    max_takeoff_mass: float = _q(to_si(2450, 'lbs'), 'mass')
    max_payload_mass: float = _q(to_si(200, 'lbs'), 'mass')
    reference_area: float = _q(10.76, 'area')
    n_lift_motors: int = 12
    n_cruise_motors: int = 1
    battery_max_voltage: float = _q(500.0, 'voltage')
    battery_specific_energy: float = _q(to_si(300, 'Wh/kg'), 'specific_energy')
    battery_mass: float = _q(300.0, 'mass')
    v_stall: float = _q(to_si(84.28, 'mph'), 'speed')
    design_speed: float = _q(to_si(111.847, 'mph'), 'speed')
    rotor_radius: float = _q(0.8, 'length')
    figure_of_merit: float = 0.75
    lift_to_drag: float = 12.0
    powertrain_efficiency: float = 0.9
    max_motor_power_lift: float = _q(25_000.0, 'power')
    max_motor_power_cruise: float = _q(150_000.0, 'power')
    max_c_rate: float = _q(to_si(4.0, '1/h'), 'rate')
    min_voltage: float = _q(400.0, 'voltage')
    internal_resistance: float = _q(0.05, 'resistance')

    def __post_init__(self):
        for name in ('max_takeoff_mass', 'max_payload_mass', 'reference_area', 'battery_mass',
                     'battery_specific_energy', 'battery_max_voltage', 'rotor_radius',
                     'max_motor_power_lift', 'max_motor_power_cruise', 'max_c_rate',
                     'lift_to_drag', 'v_stall'):
            if not getattr(self, name) > 0:
                raise ConfigError("必须为正", field=f"vehicle.{name}")
        if self.n_lift_motors < 1 or self.n_cruise_motors < 1:
            raise ConfigError("电机数量至少为 1", field='vehicle.n_lift_motors')
        if not 0 < self.figure_of_merit <= 1:
            raise ConfigError("必须在 (0, 1] 内", field='vehicle.figure_of_merit')
        if not 0 < self.powertrain_efficiency <= 1:
            raise ConfigError("必须在 (0, 1] 内", field='vehicle.powertrain_efficiency')
        if not self.v_stall < self.design_speed:
            raise ConfigError("失速速度必须小于设计速度", field='vehicle.v_stall')
        if not 0 < self.min_voltage < self.battery_max_voltage:
            raise ConfigError("必须满足 0 < min_voltage < battery_max_voltage", field='vehicle.min_voltage')
        if self.internal_resistance < 0:
            raise ConfigError("不能为负", field='vehicle.internal_resistance')
        if self.battery_mass >= self.max_takeoff_mass:
            raise ConfigError("电池质量必须小于最大起飞质量", field='vehicle.battery_mass')

    @property
    def battery_capacity(self) -> float:
        """电池能量 (J)"""
        return self.battery_mass * self.battery_specific_energy

    @property
    def capacity_ah(self) -> float:
        """按满电电压折算的安时容量"""
        return self.battery_capacity / 3600.0 / self.battery_max_voltage

    @property
    def max_c_rate_per_hour(self) -> float:
        return self.max_c_rate * HOUR

    @property
    def v_wingborne(self) -> float:
        """机翼完全承载升力的速度 1.2·v_stall"""
        return 1.2 * self.v_stall

    @property
    def rotor_disk_area(self) -> float:
        """全部升力旋翼的桨盘面积"""
        return self.n_lift_motors * math.pi * self.rotor_radius ** 2

    @property
    def max_lift_power(self) -> float:
        return self.n_lift_motors * self.max_motor_power_lift

    @property
    def max_cruise_power(self) -> float:
        return self.n_cruise_motors * self.max_motor_power_cruise


@dataclass(frozen=True)
class EvaluationConfig:
    """性能评估参数"""
    sample_step: float = _q(0.5, 'time')
    accel_cap: float = _q(0.3 * G0, 'acceleration')
    reserve_fraction: float = 0.0

    def __post_init__(self):
        if not self.sample_step > 0:
            raise ConfigError("必须为正", field='evaluation.sample_step')
        if not self.accel_cap > 0:
            raise ConfigError("必须为正", field='evaluation.accel_cap')
        if not 0 <= self.reserve_fraction < 1:
            raise ConfigError("必须在 [0, 1) 内", field='evaluation.reserve_fraction')


@dataclass(frozen=True)
class RunConfig:
    """一次完整运行所需的全部配置"""
    sim: SimConfig
    vehicle: VehicleConfig
    mission: MissionSpec
    bounds: DilationBounds
    evaluation: EvaluationConfig

    def as_tuple(self) -> Tuple[SimConfig, VehicleConfig, MissionSpec, DilationBounds]:
        return self.sim, self.vehicle, self.mission, self.bounds

    def canonical(self) -> Dict[str, Any]:
        """规范化为可哈希的 JSON 结构"""
        mission = {
            'cruise_altitude': self.mission.cruise_altitude,
            'terminal_duration': self.mission.terminal_duration,
            'procedure_entry_time': self.mission.procedure_entry_time,
            'segments': [{
                'kind': s.kind.value,
                'vertical_speed': s.vertical_speed.to_list(),
                'horizontal_speed': s.horizontal_speed.to_list(),
                'end_altitude': s.end_altitude,
            } for s in self.mission.segments],
        }
        return {
            'sim': asdict(self.sim),
            'vehicle': asdict(self.vehicle),
            'mission': mission,
            'bounds': asdict(self.bounds),
            'evaluation': asdict(self.evaluation),
        }

    @classmethod
    def from_canonical(cls, data: Dict[str, Any]) -> 'RunConfig':
        """canonical() 的逆过程"""
        m = data['mission']
        segments = tuple(SegmentSpec(SegmentKind(s['kind']), SpeedSchedule(*s['vertical_speed']),
                                     SpeedSchedule(*s['horizontal_speed']), s['end_altitude'])
                         for s in m['segments'])
        mission = MissionSpec(segments, cruise_altitude=m['cruise_altitude'],
                              terminal_duration=m['terminal_duration'],
                              procedure_entry_time=m['procedure_entry_time'])
        return cls(SimConfig(**data['sim']), VehicleConfig(**data['vehicle']), mission,
                   DilationBounds(**data['bounds']), EvaluationConfig(**data['evaluation']))

    def with_overrides(self, seed: int = None, n_flights: int = None,
                       delta_vertical: float = None, delta_horizontal: float = None) -> 'RunConfig':
        """命令行参数覆盖配置文件中的对应字段"""
        sim, bounds = self.sim, self.bounds
        if seed is not None:
            sim = replace(sim, rng_seed=seed)
        if n_flights is not None:
            sim = replace(sim, n_flights=n_flights)
        if delta_vertical is not None:
            bounds = replace(bounds, delta_vertical=delta_vertical)
        if delta_horizontal is not None:
            bounds = replace(bounds, delta_horizontal=delta_horizontal)
        bounds.check_against(self.mission)
        return replace(self, sim=sim, bounds=bounds)


SECTIONS = ('sim', 'vehicle', 'mission', 'bounds', 'evaluation')

_MISSION_SCALARS = {
    'cruise_altitude': 'altitude',
    'terminal_duration': 'time',
    'procedure_entry_time': 'time',
}


def _build(cls, section: str, raw: Dict[str, Any]):
    """按字段量纲解析一个配置段并构造 dataclass"""
    if raw is None:
        raw = {}
    if not isinstance(raw, dict):
        raise ConfigError("配置段必须是映射", field=section)
    known = {f.name: f for f in fields(cls)}
    kwargs = {}
    for key, value in raw.items():
        if key not in known:
            raise ConfigError("未知配置项", field=f"{section}.{key}")
        f = known[key]
        try:
            if 'dimension' in f.metadata:
                kwargs[key] = parse_quantity(value, f.metadata['dimension'])
            elif f.type in (int, 'int'):
                if isinstance(value, bool) or not isinstance(value, int):
                    raise ConfigError("必须为整数", field=f"{section}.{key}")
                kwargs[key] = value
            elif f.type in (str, 'str'):
                kwargs[key] = str(value)
            else:
                kwargs[key] = parse_quantity(value, 'dimensionless')
        except UnitError as e:
            raise ConfigError(str(e), field=f"{section}.{key}")
    return cls(**kwargs)


def _parse_schedule(value, dimension: str, where: str) -> SpeedSchedule:
    if isinstance(value, (list, tuple)):
        if len(value) != 2:
            raise ConfigError("斜坡速度需要 [起点, 终点] 两个值", field=where)
        return SpeedSchedule(parse_quantity(value[0], dimension), parse_quantity(value[1], dimension))
    return SpeedSchedule.constant(parse_quantity(value, dimension))


def _build_mission(raw: Dict[str, Any], vehicle: VehicleConfig) -> MissionSpec:
    """构造任务规格：基线表 + 覆盖项

    segments 下可按段名覆盖 vertical_speed / horizontal_speed / end_altitude。
    """
    if raw is None:
        raw = {}
    if not isinstance(raw, dict):
        raise ConfigError("配置段必须是映射", field='mission')
    scalars = {}
    for key, value in raw.items():
        if key == 'segments':
            continue
        if key not in _MISSION_SCALARS:
            raise ConfigError("未知配置项", field=f"mission.{key}")
        try:
            scalars[key] = parse_quantity(value, _MISSION_SCALARS[key])
        except UnitError as e:
            raise ConfigError(str(e), field=f"mission.{key}")

    cruise_altitude = scalars.pop('cruise_altitude', to_si(1500, 'ft'))
    segments = list(baseline_segments(vehicle.v_stall, cruise_altitude))
    overrides = raw.get('segments') or {}
    if not isinstance(overrides, dict):
        raise ConfigError("必须是以段名为键的映射", field='mission.segments')
    for name, over in overrides.items():
        try:
            kind = SegmentKind(name)
        except ValueError:
            raise ConfigError("未知任务段", field=f"mission.segments.{name}")
        idx = list(SegmentKind).index(kind)
        seg = segments[idx]
        vs, hs, alt = seg.vertical_speed, seg.horizontal_speed, seg.end_altitude
        for key, value in (over or {}).items():
            where = f"mission.segments.{name}.{key}"
            try:
                if key == 'vertical_speed':
                    vs = _parse_schedule(value, 'vertical_speed', where)
                elif key == 'horizontal_speed':
                    hs = _parse_schedule(value, 'speed', where)
                elif key == 'end_altitude':
                    alt = parse_quantity(value, 'altitude')
                else:
                    raise ConfigError("未知配置项", field=where)
            except UnitError as e:
                raise ConfigError(str(e), field=where)
        segments[idx] = SegmentSpec(kind, vs, hs, alt)
    return MissionSpec(tuple(segments), cruise_altitude=cruise_altitude, **scalars)


def _read_yaml(path: Union[str, Path]) -> Dict[str, Any]:
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"配置文件不存在: {path}")
    text = path.read_text(encoding='utf-8')
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as e:
        mark = getattr(e, 'problem_mark', None)
        line = mark.line + 1 if mark is not None else None
        raise ConfigError(f"配置文件解析失败: {getattr(e, 'problem', e)}", line=line)
    if data is None:
        return {}
    if not isinstance(data, dict):
        raise ConfigError("配置文件顶层必须是映射")
    for key in data:
        if key not in SECTIONS:
            raise ConfigError(f"未知配置段，可选 {SECTIONS}", field=str(key))
    return data


def build_run_config(data: Dict[str, Any] = None) -> RunConfig:
    """由已解析的配置字典构造 RunConfig，缺省字段取默认值"""
    data = data or {}
    sim = _build(SimConfig, 'sim', data.get('sim'))
    vehicle = _build(VehicleConfig, 'vehicle', data.get('vehicle'))
    mission = _build_mission(data.get('mission'), vehicle)
    bounds = _build(DilationBounds, 'bounds', data.get('bounds'))
    bounds.check_against(mission)
    evaluation = _build(EvaluationConfig, 'evaluation', data.get('evaluation'))
    return RunConfig(sim, vehicle, mission, bounds, evaluation)


def load_run_config(path: Union[str, Path] = None) -> RunConfig:
    """加载完整运行配置

    Args:
        path: YAML 配置文件路径，为 None 时全部取默认值

    Returns:
        RunConfig

    Raises:
        ConfigError: 解析失败 (带行号) 或字段不满足约束 (带字段名)
    """
    data = _read_yaml(path) if path is not None else {}
    run_config = build_run_config(data)
    logger.info(f"配置加载完成: {path or '默认配置'}")
    return run_config


def load_config(path: Union[str, Path]) -> Tuple[SimConfig, VehicleConfig, MissionSpec, DilationBounds]:
    """加载配置文件，返回 (SimConfig, VehicleConfig, MissionSpec, DilationBounds)"""
    return load_run_config(path).as_tuple()


def config_hash(run_config: RunConfig, seed: int = None) -> str:
    """规范化配置 (键排序、SI 数值) 加随机种子的 SHA-256"""
    payload = {'config': run_config.canonical(), 'seed': seed}
    text = json.dumps(payload, sort_keys=True, separators=(',', ':'))
    return hashlib.sha256(text.encode('utf-8')).hexdigest()
