"""阶段2: 任务剖面扩展

把每条二维巡航轨迹包上八个非巡航段，巡航段抬升到巡航高度，
并在 [μ-Δ, μ+Δ] 内随机化各段速度。
"""
import logging
from pathlib import Path
from typing import Dict, List, Tuple, Union

import numpy as np

from core.trajectory import Trajectory2D
from core.mission import (MissionSpec, DilationBounds, SegmentKind, SegmentSpec, SpeedSchedule,
                          MissionSegment, MissionProfile, Waypoint, LEVEL_KINDS, DESCENT_KINDS)
from core.exceptions import DilationError, ArtifactError
from utils.utils import read_json, write_json

logger = logging.getLogger(__name__)

K = SegmentKind
SEGMENT_INDEX: Dict[SegmentKind, int] = {kind: i for i, kind in enumerate(SegmentKind)}


def _draw(rng: np.random.Generator, mu: float, delta: float) -> float:
    if mu == 0:
        return 0.0
    return float(rng.uniform(mu - delta, mu + delta))


def _realize_schedule(rng: np.random.Generator, sched: SpeedSchedule, delta: float) -> SpeedSchedule:
    if not sched.is_ramp:
        return SpeedSchedule.constant(_draw(rng, sched.start, delta))
    return SpeedSchedule(_draw(rng, sched.start, delta), _draw(rng, sched.end, delta))


def realize_spec(spec: MissionSpec, bounds: DilationBounds, flight_id: int) -> Tuple[SegmentSpec, ...]:
    """按航班随机化任务规格

    随机数流由 (rng_seed, flight_id) 决定，零值保持为零，高度不变。
    """
    rng = np.random.default_rng([bounds.rng_seed, flight_id])
    realized = []
    for seg in spec.segments:
        vs = _realize_schedule(rng, seg.vertical_speed, bounds.delta_vertical)
        hs = _realize_schedule(rng, seg.horizontal_speed, bounds.delta_horizontal)
        realized.append(SegmentSpec(seg.kind, vs, hs, seg.end_altitude))
    return tuple(realized)


def _vertical_knots(seg: SegmentSpec, start_alt: float, terminal_duration: float):
    """返回 (时长, 带符号垂直速度结点)

    线性斜坡积分：Δh = (a+b)/2·T。平飞段的垂直速度不执行。
    """
    if seg.kind in LEVEL_KINDS:
        return terminal_duration, [(0.0, 0.0), (terminal_duration, 0.0)]
    dh = abs(seg.end_altitude - start_alt)
    a, b = seg.vertical_speed.start, seg.vertical_speed.end
    duration = dh / a if a == b else 2.0 * dh / (a + b)
    sign = -1.0 if seg.kind in DESCENT_KINDS else 1.0
    return duration, [(0.0, sign * a), (duration, sign * b)]


def dilate(traj: Trajectory2D, spec: MissionSpec, bounds: DilationBounds, vehicle) -> MissionProfile:
    """把二维轨迹扩展为九段任务剖面

    每个接缝只有一个速度：前一段的随机化终点速度，后一段随机化起点速度只记录在
    realized_spec 中。例外是巡航两端，加速爬升终点和减速下降起点取轨迹首末航路点速度。
    离场程序在 procedure_entry_time 内进入自己的程序速度；进场程序在整段内线性过渡。

    Args:
        traj: 二维巡航轨迹
        spec: 任务规格
        bounds: 随机化区间
        vehicle: VehicleConfig，用于 1.2·v_stall 与设计速度上限

    Returns:
        MissionProfile

    Raises:
        DilationError: 轨迹少于两个航路点或结果不满足连续性
    """
    if len(traj) < 2:
        raise DilationError("轨迹至少需要两个航路点", traj.flight_id)
    realized = realize_spec(spec, bounds, traj.flight_id)
    v_wb = vehicle.v_wingborne
    cruise_alt = spec.cruise_altitude

    first, last = traj.points[0], traj.points[-1]
    v_cruise_in, v_cruise_out = first.speed, last.speed
    speeds = {seg.kind: seg.horizontal_speed for seg in realized}
    # 过渡段在翼载速度完成，超过 v_wb 的抽样截到 v_wb
    v_transition = min(speeds[K.TransitionClimb].end, v_wb)
    v_departure = speeds[K.DepartureTerminalProcedure].start
    # 进近一侧的抽样不超过设计速度
    v_decel = min(speeds[K.DecelDescend].end, vehicle.design_speed)
    v_arrival = min(speeds[K.ArrivalTerminalProcedure].start, vehicle.design_speed)

    segments: List[MissionSegment] = []
    clock, altitude = 0.0, 0.0
    for seg in realized:
        if seg.kind == K.Cruise:
            duration = last.t - first.t
            vertical = [(0.0, 0.0), (duration, 0.0)]
            horizontal = [(p.t - first.t, p.speed) for p in traj.points]
            waypoints = [Waypoint(p.x, p.y, cruise_alt, p.vx, p.vy, p.t) for p in traj.points]
        else:
            duration, vertical = _vertical_knots(seg, altitude, spec.terminal_duration)
            waypoints = []
            if seg.kind in (K.HoverClimb, K.HoverDescend):
                horizontal = [(0.0, 0.0), (duration, 0.0)]
            elif seg.kind == K.TransitionClimb:
                horizontal = [(0.0, 0.0), (duration, v_transition)]
            elif seg.kind == K.DepartureTerminalProcedure:
                entry = min(spec.procedure_entry_time, duration)
                horizontal = [(0.0, v_transition), (entry, v_departure), (duration, v_departure)]
            elif seg.kind == K.AccelClimb:
                horizontal = [(0.0, v_departure), (duration, v_cruise_in)]
            elif seg.kind == K.DecelDescend:
                horizontal = [(0.0, v_cruise_out), (duration, v_decel)]
            elif seg.kind == K.ArrivalTerminalProcedure:
                horizontal = [(0.0, v_decel), (duration, v_arrival)]
            else:
                horizontal = [(0.0, v_arrival), (duration, 0.0)]

        segments.append(MissionSegment(
            kind=seg.kind,
            start_time=clock,
            duration=duration,
            start_altitude=altitude,
            end_altitude=seg.end_altitude,
            horizontal=horizontal,
            vertical=vertical,
            spec=seg,
            waypoints=waypoints,
        ))
        clock += duration
        altitude = seg.end_altitude

    profile = MissionProfile(traj.flight_id, segments)
    profile.check_invariants()
    return profile


def dilate_all(trajectories: List[Trajectory2D], spec: MissionSpec, bounds: DilationBounds,
               vehicle) -> List[MissionProfile]:
    """逐条扩展，保持输入顺序

    Raises:
        DilationError: 任一轨迹失败，带航班编号
    """
    if not trajectories:
        raise DilationError("没有可扩展的轨迹")
    profiles = []
    for traj in trajectories:
        try:
            profiles.append(dilate(traj, spec, bounds, vehicle))
        except DilationError:
            raise
        except Exception as e:
            logger.error(f"航班 {traj.flight_id} 扩展失败: {e}")
            raise DilationError(str(e), traj.flight_id) from e
    logger.info(f"完成 {len(profiles)} 个任务剖面")
    return profiles


def write_missions(profiles: List[MissionProfile], out_dir: Union[str, Path], meta: Dict) -> Path:
    """每个航班一份 JSON，外加 index.json"""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    entries = []
    for profile in profiles:
        name = f"flight_{profile.flight_id:04d}.json"
        write_json(out_dir / name, profile.to_dict(), indent=1)
        entries.append({'flight_id': profile.flight_id, 'file': name,
                        'duration_s': profile.duration, 'range_m': profile.cruise_range})
    index = dict(meta)
    index['missions'] = entries
    path = out_dir / 'index.json'
    write_json(path, index)
    return path


def read_missions(index_path: Union[str, Path]) -> Tuple[Dict, List[MissionProfile]]:
    """读取 index.json 及其列出的任务剖面"""
    index_path = Path(index_path)
    index = read_json(index_path)
    profiles = []
    for entry in index.get('missions', []):
        path = index_path.parent / entry['file']
        try:
            profiles.append(MissionProfile.from_dict(read_json(path)))
        except (KeyError, TypeError, ValueError) as e:
            raise ArtifactError(f"任务剖面字段缺失或非法: {e}", path=path)
    return index, profiles
