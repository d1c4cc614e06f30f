"""升力+巡航构型 eVTOL 的需用功率模型

升力旋翼按动量理论计算诱导功率，只承担机翼没有承担的那部分重量；
前飞电机克服阻力与加速所需推力。爬升功率在未完全由机翼承载时归升力旋翼，
完全由机翼承载后归前飞电机。
"""
from dataclasses import dataclass
from typing import Union

import numpy as np
from ambiance import Atmosphere

from core.units import G0

ArrayLike = Union[float, np.ndarray]


def isa_density(altitude: ArrayLike) -> ArrayLike:
    """ISA 标准大气密度 (kg/m³)"""
    alt = np.asarray(altitude, dtype=float)
    rho = Atmosphere(np.atleast_1d(np.clip(alt, 0.0, None))).density
    return float(rho[0]) if alt.ndim == 0 else np.asarray(rho, dtype=float).reshape(alt.shape)


@dataclass(frozen=True)
class FlightCondition:
    """某一时刻的飞行状态"""
    horizontal_speed: float
    vertical_speed: float
    altitude: float
    mass: float
    horizontal_accel: float = 0.0

    def __post_init__(self):
        if self.mass < 0:
            raise ValueError("质量不能为负")
        if self.altitude < 0:
            raise ValueError("高度不能为负")


@dataclass(frozen=True)
class PowerBreakdown:
    """升力旋翼组与前飞电机组的功率和油门"""
    lift_rotor_power: float
    forward_motor_power: float
    lift_throttle: float
    forward_throttle: float

    @property
    def total_power(self) -> float:
        return self.lift_rotor_power + self.forward_motor_power


def wing_lift_fraction(v: ArrayLike, vehicle) -> ArrayLike:
    """机翼承担的重量比例 f = min(1, (v / 1.2·v_stall)²)"""
    f = np.minimum(1.0, (np.asarray(v, dtype=float) / vehicle.v_wingborne) ** 2)
    return float(f) if np.ndim(f) == 0 else f


def power_arrays(v, vs, altitude, mass, vehicle, accel=0.0):
    """向量化的功率计算

    Args:
        v: 水平速度 (m/s)
        vs: 垂直速度 (m/s)，下降为负
        altitude: 高度 (m)
        mass: 质量 (kg)
        vehicle: VehicleConfig
        accel: 水平加速度 (m/s²)

    Returns:
        (升力旋翼功率, 前飞电机功率)，单位 W
    """
    v = np.asarray(v, dtype=float)
    vs = np.asarray(vs, dtype=float)
    accel = np.asarray(accel, dtype=float)
    weight = mass * G0
    eta = vehicle.powertrain_efficiency

    f = np.minimum(1.0, (v / vehicle.v_wingborne) ** 2)
    rho = isa_density(altitude)
    rotor_thrust = (1.0 - f) * weight
    induced = rotor_thrust ** 1.5 / np.sqrt(2.0 * rho * vehicle.rotor_disk_area) / vehicle.figure_of_merit
    climb = weight * np.maximum(0.0, vs)
    wingborne = f >= 1.0

    lift = (induced + np.where(wingborne, 0.0, climb)) / eta
    drag = weight * f / vehicle.lift_to_drag
    forward = ((drag + mass * np.maximum(0.0, accel)) * v + np.where(wingborne, climb, 0.0)) / eta
    return lift, forward


def power_required(cond: FlightCondition, vehicle) -> PowerBreakdown:
    """单点需用功率

    Args:
        cond: 飞行状态
        vehicle: VehicleConfig

    Returns:
        PowerBreakdown；油门 = 组功率 / 组最大功率，可大于 1
    """
    lift, forward = power_arrays(cond.horizontal_speed, cond.vertical_speed, cond.altitude,
                                 cond.mass, vehicle, cond.horizontal_accel)
    lift, forward = float(lift), float(forward)
    return PowerBreakdown(
        lift_rotor_power=lift,
        forward_motor_power=forward,
        lift_throttle=lift / vehicle.max_lift_power,
        forward_throttle=forward / vehicle.max_cruise_power,
    )


def achievable_accel(v: ArrayLike, mass: float, vehicle, accel_cap: float) -> ArrayLike:
    """可达水平加速度：min(加速度上限, (前飞电机最大功率·η / v − 阻力) / m)"""
    v = np.asarray(v, dtype=float)
    drag = mass * G0 * np.minimum(1.0, (v / vehicle.v_wingborne) ** 2) / vehicle.lift_to_drag
    with np.errstate(divide='ignore'):
        thrust = np.where(v > 0, vehicle.max_cruise_power * vehicle.powertrain_efficiency / np.maximum(v, 1e-12),
                          np.inf)
    return np.minimum(accel_cap, (thrust - drag) / mass)
