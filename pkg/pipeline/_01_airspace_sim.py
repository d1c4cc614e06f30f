"""阶段1: UTM 二维巡航仿真

自由空域结构 + 自由准入 + MVP 冲突解脱，离散时间推进。
"""
import logging
from pathlib import Path
from dataclasses import dataclass, field
from typing import Dict, List, Tuple, Union

import numpy as np

from core.agent import Agent, Phase
from core.trajectory import TrajectoryPoint, Trajectory2D
from core.demand import DemandModel, FlightRequest
from core.resolution import ConflictResolution, get_resolution
from core.exceptions import SimulationError, ConfigError, UsageError
from strategies.mvp import cpa
from utils.utils import read_json, write_json

logger = logging.getLogger(__name__)


def access_control(candidate: Agent, active: List[Agent], cfg) -> bool:
    """自由准入：起飞点附近无飞机且前瞻窗口内无间隔冲突时放行

    Args:
        candidate: 待起飞的 Agent
        active: 空中 Agent
        cfg: SimConfig

    Returns:
        True 表示放行
    """
    origin = np.asarray(candidate.origin, dtype=float)
    v0 = candidate.preferred_velocity(cfg.max_speed)
    start = TrajectoryPoint(origin[0], origin[1], v0[0], v0[1], 0.0)
    for other in active:
        if np.hypot(*(other.position - origin)) < cfg.min_separation:
            return False
        pred = cpa(start, other.state, other.id)
        if pred.t_cpa <= cfg.lookahead and pred.d_cpa < cfg.min_separation:
            return False
    return True


@dataclass
class ScenarioStats:
    """仿真统计"""
    ticks: int = 0
    denied_departures: int = 0
    loss_of_separation: int = 0
    min_pair_distance: float = float('inf')
    max_airborne: int = 0

    def to_dict(self) -> Dict:
        return {
            'ticks': self.ticks,
            'denied_departures': self.denied_departures,
            'loss_of_separation_pair_ticks': self.loss_of_separation,
            'min_pair_distance_m': None if np.isinf(self.min_pair_distance) else self.min_pair_distance,
            'max_airborne': self.max_airborne,
        }


@dataclass
class WorldState:
    """仿真世界状态"""
    t: float
    pending: List[Agent]
    active: List[Agent] = field(default_factory=list)
    arrived: List[Agent] = field(default_factory=list)
    stats: ScenarioStats = field(default_factory=ScenarioStats)

    @classmethod
    def from_requests(cls, requests: List[FlightRequest]) -> 'WorldState':
        agents = [Agent(r.flight_id, r.origin, r.destination, r.requested_departure) for r in requests]
        return cls(t=0.0, pending=sorted(agents, key=lambda a: a.id))

    @property
    def done(self) -> bool:
        return not self.pending and not self.active


def _neighbor_lists(agents: List[Agent], radius: float) -> List[List[Agent]]:
    if not agents:
        return []
    pos = np.array([a.position for a in agents])
    dist = np.hypot(pos[:, None, 0] - pos[None, :, 0], pos[:, None, 1] - pos[None, :, 1])
    within = (dist <= radius) & ~np.eye(len(agents), dtype=bool)
    return [[agents[j] for j in np.flatnonzero(row)] for row in within]


def _boundary_guard(pos: np.ndarray, v: np.ndarray, half: float) -> np.ndarray:
    """作业区外的飞机不再继续向外飞"""
    v = v.copy()
    for k in range(2):
        if abs(pos[k]) > half and pos[k] * v[k] > 0:
            v[k] = 0.0
    return v


def _depart(agent: Agent, t: float, cfg):
    v0 = agent.preferred_velocity(cfg.max_speed)
    agent.state = TrajectoryPoint(agent.origin[0], agent.origin[1], float(v0[0]), float(v0[1]), t)
    agent.phase = Phase.AIRBORNE
    agent.history.append(agent.state)


def step(world: WorldState, cfg, resolution: ConflictResolution) -> WorldState:
    """推进一个时间步

    顺序：基于同一快照解算全部空中飞机的速度 -> 积分位置并记录轨迹点 ->
    判断到达 -> 对到期的待起飞飞机按编号做准入。
    """
    t_next = world.t + cfg.tick
    half = 0.5 * cfg.area_side

    neighbors = _neighbor_lists(world.active, cfg.sensing_radius)
    commands = [_boundary_guard(a.position, resolution.resolve(a, nbrs), half)
                for a, nbrs in zip(world.active, neighbors)]

    still_active = []
    for agent, v in zip(world.active, commands):
        pos = agent.position + v * cfg.tick
        agent.state = TrajectoryPoint(float(pos[0]), float(pos[1]), float(v[0]), float(v[1]), t_next)
        agent.history.append(agent.state)
        if agent.distance_to_destination() <= cfg.arrival_threshold:
            agent.phase = Phase.ARRIVED
            world.arrived.append(agent)
        else:
            still_active.append(agent)
    world.active = still_active

    if len(world.active) > 1:
        pos = np.array([a.position for a in world.active])
        diff = pos[:, None, :] - pos[None, :, :]
        dist = np.hypot(diff[..., 0], diff[..., 1])[np.triu_indices(len(pos), k=1)]
        world.stats.loss_of_separation += int(np.sum(dist < cfg.min_separation))
        world.stats.min_pair_distance = min(world.stats.min_pair_distance, float(dist.min()))

    waiting = []
    for agent in world.pending:
        if agent.requested_departure > t_next:
            waiting.append(agent)
        elif access_control(agent, world.active, cfg):
            _depart(agent, t_next, cfg)
            world.active.append(agent)
        else:
            world.stats.denied_departures += 1
            waiting.append(agent)
    world.pending = waiting
    world.active.sort(key=lambda a: a.id)

    world.t = t_next
    world.stats.ticks += 1
    world.stats.max_airborne = max(world.stats.max_airborne, len(world.active))
    return world


class AirspaceSimulator:
    """UTM 仿真器"""

    def __init__(self, cfg, resolution: ConflictResolution = None):
        """
        Args:
            cfg: SimConfig
            resolution: 冲突解脱方法，默认按 cfg.resolution_method 查找
        """
        self.logger = logging.getLogger(__name__)
        self.cfg = cfg
        self.resolution = resolution or get_resolution(cfg.resolution_method, cfg)
        self.stats = ScenarioStats()

    def run(self, requests: List[FlightRequest]) -> List[Trajectory2D]:
        """运行到全部航班到达

        Raises:
            SimulationError: 仿真时间超过 horizon
            UsageError: 没有航班
            ConfigError: 起降点在作业区外
        """
        if not requests:
            raise UsageError("至少需要一个航班")
        half = 0.5 * self.cfg.area_side
        for r in requests:
            for x, y in (r.origin, r.destination):
                if abs(x) > half or abs(y) > half:
                    raise ConfigError(f"航班 {r.flight_id} 起降点在作业区外: ({x:.1f}, {y:.1f})",
                                      field='sim.area_side')

        world = WorldState.from_requests(requests)
        # t=0 时到期的申请直接走准入
        for agent in list(world.pending):
            if agent.requested_departure <= world.t and access_control(agent, world.active, self.cfg):
                _depart(agent, world.t, self.cfg)
                world.active.append(agent)
                world.pending.remove(agent)

        report_every = max(1, int(600 / self.cfg.tick))
        while not world.done:
            if world.t >= self.cfg.horizon:
                raise SimulationError(f"仿真时间超过上限 {self.cfg.horizon:.0f}s，"
                                      f"仍有 {len(world.pending)} 架待起飞、{len(world.active)} 架在空中")
            step(world, self.cfg, self.resolution)
            if world.stats.ticks % report_every == 0:
                self.logger.info(f"t={world.t:.0f}s 空中 {len(world.active)} 架，"
                                 f"已到达 {len(world.arrived)}，待起飞 {len(world.pending)}")

        self.stats = world.stats
        self.logger.info(f"仿真结束 t={world.t:.0f}s，完成 {len(world.arrived)} 个航班，"
                         f"拒绝起飞 {world.stats.denied_departures} 次，"
                         f"间隔丧失 {world.stats.loss_of_separation} 对·步")
        return [a.to_trajectory() for a in sorted(world.arrived, key=lambda a: a.id)]


def run_scenario(demand: DemandModel, cfg, resolution: ConflictResolution = None) -> List[Trajectory2D]:
    """按需求模型生成 n_flights 个航班并仿真

    Returns:
        按 flight_id 排序的完整轨迹

    Raises:
        UsageError: n_flights 小于 1
    """
    if cfg.n_flights < 1:
        raise UsageError("n_flights 至少为 1")
    requests = demand.generate(cfg.n_flights)
    return AirspaceSimulator(cfg, resolution).run(requests)


def flight_file(flight_id: int, suffix: str) -> str:
    return f"flight_{flight_id:04d}.{suffix}"


def write_trajectories(trajectories: List[Trajectory2D], out_dir: Union[str, Path],
                       meta: Dict) -> Path:
    """写出每个航班的轨迹 CSV 和 scenario.json

    Args:
        trajectories: 轨迹列表
        out_dir: trajectories 目录
        meta: 写入 scenario.json 的附加字段 (种子、配置哈希、统计)

    Returns:
        scenario.json 路径
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    flights = []
    for traj in trajectories:
        name = flight_file(traj.flight_id, 'csv')
        traj.write_csv(out_dir / name)
        flights.append({
            'flight_id': traj.flight_id,
            'file': name,
            'origin_m': list(traj.origin),
            'destination_m': list(traj.destination),
            'departure_time_s': traj.departure_time,
            'arrival_time_s': traj.arrival_time,
            'n_points': len(traj),
        })
    scenario = dict(meta)
    scenario['flights'] = flights
    path = out_dir / 'scenario.json'
    write_json(path, scenario)
    logger.info(f"写出 {len(flights)} 条轨迹到 {out_dir}")
    return path


def read_trajectories(scenario_path: Union[str, Path]) -> Tuple[Dict, List[Trajectory2D]]:
    """读取 scenario.json 及其列出的轨迹 CSV

    Raises:
        ArtifactError: 文件缺失或损坏
    """
    scenario_path = Path(scenario_path)
    scenario = read_json(scenario_path)

    trajectories = []
    for entry in scenario.get('flights', []):
        traj = Trajectory2D.read_csv(scenario_path.parent / entry['file'], int(entry['flight_id']),
                                     tuple(entry['origin_m']), tuple(entry['destination_m']))
        trajectories.append(traj)
    return scenario, trajectories
