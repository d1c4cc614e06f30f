"""阶段3: 任务可行性与性能评估

逐段按固定步长采样任务剖面，计算需用功率并推进电池状态，
遇到第一个不可行的采样点即停止该任务的评估。
"""
import logging
from enum import Enum
from functools import partial
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

import numpy as np
import pandas as pd

from core.config import EvaluationConfig
from core.exceptions import UsageError
from core.mission import MissionProfile, MissionSegment, SegmentKind, SEGMENT_ORDER
from vehicle.powertrain import power_arrays, achievable_accel
from vehicle.battery import BatteryState, discharge, state_after

logger = logging.getLogger(__name__)

SAMPLE_COLUMNS = ['t_s', 'throttle_lift', 'throttle_fwd', 'energy_J', 'voltage_V', 'c_rate_per_h', 'segment']
# 只用于绘图的附加列，不写入采样 CSV
PROFILE_COLUMNS = ['airspeed_mps', 'altitude_m']

_TOL = 1e-9


class FailureReason(Enum):
    THROTTLE_EXCEEDED = 'throttle_exceeded'
    SPEED_UNACHIEVABLE = 'speed_unachievable'
    BATTERY_DEPLETED = 'battery_depleted'
    C_RATE_EXCEEDED = 'c_rate_exceeded'
    VOLTAGE_FLOOR = 'voltage_floor'


@dataclass
class SegmentResult:
    """单个任务段的评估结果"""
    kind: SegmentKind
    feasible: bool
    failure_reason: Optional[FailureReason]
    samples: pd.DataFrame

    def means(self) -> Dict[str, float]:
        cols = ['throttle_lift', 'throttle_fwd', 'c_rate_per_h', 'voltage_V']
        return {c: float(self.samples[c].mean()) for c in cols}

    def to_dict(self) -> Dict:
        data = {
            'kind': self.kind.value,
            'feasible': self.feasible,
            'failure_reason': self.failure_reason.value if self.failure_reason else None,
            'n_samples': len(self.samples),
        }
        data.update({f"mean_{k}": v for k, v in self.means().items()})
        return data


@dataclass
class MissionResult:
    """单个任务的评估结果"""
    flight_id: int
    feasible: bool
    first_failed_segment: Optional[SegmentKind]
    failure_reason: Optional[FailureReason]
    range: float
    total_energy_used: float
    final_voltage: float
    segment_results: List[SegmentResult] = field(default_factory=list)

    @property
    def samples(self) -> pd.DataFrame:
        return pd.concat([r.samples for r in self.segment_results], ignore_index=True)

    def to_dict(self) -> Dict:
        return {
            'flight_id': self.flight_id,
            'feasible': self.feasible,
            'first_failed_segment': self.first_failed_segment.value if self.first_failed_segment else None,
            'failure_reason': self.failure_reason.value if self.failure_reason else None,
            'range_m': self.range,
            'total_energy_used_J': self.total_energy_used,
            'final_voltage_V': self.final_voltage,
            'segments': [r.to_dict() for r in self.segment_results],
        }


def _sample_times(duration: float, step: float) -> Tuple[np.ndarray, np.ndarray]:
    """[0, T) 内的采样时刻与各步步长，最后一步截短，至少一个采样"""
    n = max(1, int(np.ceil(duration / step - 1e-9)))
    tau = np.arange(n) * step
    return tau, np.minimum(step, duration - tau)


def _cruise_turn_accel(seg: MissionSegment, tau: np.ndarray) -> np.ndarray:
    """巡航段航路点之间的速度矢量变化率 |Δv|/Δt"""
    wps = seg.waypoints
    if len(wps) < 2:
        return np.zeros_like(tau)
    t = np.array([w.t for w in wps])
    v = np.array([[w.vx, w.vy] for w in wps])
    mag = np.hypot(*np.diff(v, axis=0).T) / np.diff(t)
    idx = np.clip(np.searchsorted(t, t[0] + tau, side='right') - 1, 0, len(mag) - 1)
    return mag[idx]


def evaluate_segment(seg: MissionSegment, battery: BatteryState, vehicle,
                     evaluation: EvaluationConfig = None) -> Tuple[SegmentResult, BatteryState]:
    """评估单个任务段

    Args:
        seg: 扩展后的任务段
        battery: 进入该段时的电池状态
        vehicle: VehicleConfig
        evaluation: 评估参数

    Returns:
        (SegmentResult, 离开该段时的电池状态)
    """
    ev = evaluation or EvaluationConfig()
    mass = vehicle.max_takeoff_mass
    tau, steps = _sample_times(seg.duration, ev.sample_step)

    v = seg.horizontal_speed_at(tau)
    vs = seg.vertical_speed_at(tau)
    alt = np.maximum(seg.altitude_at(tau), 0.0)
    accel = seg.horizontal_accel_at(tau)
    lift, forward = power_arrays(v, vs, alt, mass, vehicle, accel)
    thr_lift = lift / vehicle.max_lift_power
    thr_fwd = forward / vehicle.max_cruise_power

    if battery.empty or battery.energy_remaining <= 0:
        tau, thr_lift, thr_fwd, v, alt = tau[:1], thr_lift[:1], thr_fwd[:1], v[:1], alt[:1]
        energy = np.array([battery.energy_remaining])
        voltage = np.array([battery.voltage_under_load])
        c_rate = np.array([battery.c_rate])
        empty = np.array([True])
        reason, stop = FailureReason.BATTERY_DEPLETED, 0
    else:
        energy, voltage, c_rate, empty = discharge(battery, lift + forward, steps, vehicle)

        accel_bad = (accel > achievable_accel(v, mass, vehicle, ev.accel_cap) + _TOL) | (-accel > ev.accel_cap + _TOL)
        if seg.kind == SegmentKind.Cruise:
            accel_bad |= _cruise_turn_accel(seg, tau) > ev.accel_cap + _TOL
        reserve = ev.reserve_fraction * battery.capacity
        checks = [
            (v > vehicle.design_speed + _TOL, FailureReason.SPEED_UNACHIEVABLE),
            (accel_bad, FailureReason.SPEED_UNACHIEVABLE),
            ((thr_lift > 1 + _TOL) | (thr_fwd > 1 + _TOL), FailureReason.THROTTLE_EXCEEDED),
            (c_rate > vehicle.max_c_rate_per_hour + _TOL, FailureReason.C_RATE_EXCEEDED),
            (voltage < vehicle.min_voltage - _TOL, FailureReason.VOLTAGE_FLOOR),
            (empty | ((energy < reserve) if reserve > 0 else False), FailureReason.BATTERY_DEPLETED),
        ]
        failed = np.zeros(len(tau), dtype=bool)
        for mask, _ in checks:
            failed |= mask
        reason, stop = None, len(tau) - 1
        if failed.any():
            stop = int(np.argmax(failed))
            reason = next(r for mask, r in checks if mask[stop])

    n = stop + 1
    samples = pd.DataFrame({
        't_s': seg.start_time + tau[:n],
        'throttle_lift': thr_lift[:n],
        'throttle_fwd': thr_fwd[:n],
        'energy_J': energy[:n],
        'voltage_V': voltage[:n],
        'c_rate_per_h': c_rate[:n],
        'segment': seg.kind.value,
        'airspeed_mps': v[:n],
        'altitude_m': alt[:n],
    })
    result = SegmentResult(seg.kind, reason is None, reason, samples)
    new_state = state_after(battery, energy[stop], voltage[stop], c_rate[stop], empty[stop])
    return result, new_state


def evaluate_mission(profile: MissionProfile, vehicle, evaluation: EvaluationConfig = None) -> MissionResult:
    """满电起飞，按段顺序评估，遇到第一个不可行段即停止"""
    battery = BatteryState.full(vehicle)
    results = []
    for seg in profile.segments:
        res, battery = evaluate_segment(seg, battery, vehicle, evaluation)
        results.append(res)
        if not res.feasible:
            break
    failed = results[-1] if not results[-1].feasible else None
    return MissionResult(
        flight_id=profile.flight_id,
        feasible=failed is None,
        first_failed_segment=failed.kind if failed else None,
        failure_reason=failed.failure_reason if failed else None,
        range=profile.cruise_range,
        total_energy_used=battery.capacity - battery.energy_remaining,
        final_voltage=battery.voltage_under_load,
        segment_results=results,
    )


@dataclass
class FleetReport:
    """全部任务的汇总"""
    n_total: int
    n_feasible: int
    n_infeasible: int
    failures_by_segment: Dict[str, int]
    failures_by_reason: Dict[str, int]
    energy_vs_range: List[Tuple[float, float]]
    per_segment_mean_c_rate: Dict[str, float]
    per_segment_mean_throttle: Dict[str, Dict[str, float]]
    per_segment_mean_voltage: Dict[str, float]
    missions: List[MissionResult] = field(default_factory=list, repr=False)

    @classmethod
    def from_results(cls, results: List[MissionResult]) -> 'FleetReport':
        results = sorted(results, key=lambda r: r.flight_id)
        feasible = [r for r in results if r.feasible]
        infeasible = [r for r in results if not r.feasible]

        failures_by_segment = {}
        for kind in SEGMENT_ORDER:
            count = sum(1 for r in infeasible if r.first_failed_segment == kind)
            if count:
                failures_by_segment[kind.value] = count
        failures_by_reason = {}
        for reason in FailureReason:
            count = sum(1 for r in infeasible if r.failure_reason == reason)
            if count:
                failures_by_reason[reason.value] = count

        energy_vs_range = sorted((r.range, r.total_energy_used) for r in feasible)

        # 先求每个任务的段均值，再在可行任务间平均
        rows = [dict(flight_id=r.flight_id, segment=s.kind.value, **s.means())
                for r in feasible for s in r.segment_results]
        c_rate, throttle, voltage = {}, {}, {}
        if rows:
            means = pd.DataFrame(rows).groupby('segment').mean(numeric_only=True)
            for kind in SEGMENT_ORDER:
                if kind.value not in means.index:
                    continue
                row = means.loc[kind.value]
                c_rate[kind.value] = float(row['c_rate_per_h'])
                throttle[kind.value] = {'lift': float(row['throttle_lift']),
                                        'forward': float(row['throttle_fwd'])}
                voltage[kind.value] = float(row['voltage_V'])

        return cls(
            n_total=len(results),
            n_feasible=len(feasible),
            n_infeasible=len(infeasible),
            failures_by_segment=failures_by_segment,
            failures_by_reason=failures_by_reason,
            energy_vs_range=[list(p) for p in energy_vs_range],
            per_segment_mean_c_rate=c_rate,
            per_segment_mean_throttle=throttle,
            per_segment_mean_voltage=voltage,
            missions=results,
        )

    def to_dict(self) -> Dict:
        return {
            'n_total': self.n_total,
            'n_feasible': self.n_feasible,
            'n_infeasible': self.n_infeasible,
            'failures_by_segment': self.failures_by_segment,
            'failures_by_reason': self.failures_by_reason,
            'energy_vs_range': self.energy_vs_range,
            'per_segment_mean_c_rate': self.per_segment_mean_c_rate,
            'per_segment_mean_throttle': self.per_segment_mean_throttle,
            'per_segment_mean_voltage': self.per_segment_mean_voltage,
        }

    @classmethod
    def from_dict(cls, data: Dict) -> 'FleetReport':
        return cls(**{k: data[k] for k in (
            'n_total', 'n_feasible', 'n_infeasible', 'failures_by_segment', 'failures_by_reason',
            'energy_vs_range', 'per_segment_mean_c_rate', 'per_segment_mean_throttle',
            'per_segment_mean_voltage')})


def evaluate_fleet(profiles: List[MissionProfile], vehicle, evaluation: EvaluationConfig = None,
                   jobs: int = 1) -> FleetReport:
    """评估全部任务

    Args:
        profiles: 任务剖面列表
        vehicle: VehicleConfig
        evaluation: 评估参数
        jobs: 并行进程数，结果与串行一致

    Returns:
        FleetReport，missions 按 flight_id 排序
    """
    if not profiles:
        raise UsageError("没有可评估的任务剖面")
    worker = partial(evaluate_mission, vehicle=vehicle, evaluation=evaluation)
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            chunk = max(1, len(profiles) // (jobs * 4))
            results = list(pool.map(worker, profiles, chunksize=chunk))
    else:
        results = [worker(p) for p in profiles]

    report = FleetReport.from_results(results)
    logger.info(f"评估完成: 共 {report.n_total}，可行 {report.n_feasible}，不可行 {report.n_infeasible}")
    return report
