"""电池放电模型

开路电压随 SOC 线性变化：满电为 battery_max_voltage，放空为 min_voltage。
负载电压 = 开路电压 − I·R，I = P / 开路电压。C 倍率单位为 1/h。
上报的负载电压取放电以来的最低值，功率下降时不回升。
"""
from dataclasses import dataclass, replace
from typing import Tuple

import numpy as np


@dataclass(frozen=True)
class BatteryState:
    """电池状态"""
    energy_remaining: float
    capacity: float
    voltage_under_load: float
    c_rate: float
    soc: float
    empty: bool = False

    @classmethod
    def full(cls, vehicle) -> 'BatteryState':
        return cls(
            energy_remaining=vehicle.battery_capacity,
            capacity=vehicle.battery_capacity,
            voltage_under_load=vehicle.battery_max_voltage,
            c_rate=0.0,
            soc=1.0,
        )


def open_circuit_voltage(soc, vehicle):
    return vehicle.min_voltage + (vehicle.battery_max_voltage - vehicle.min_voltage) * np.asarray(soc)


def battery_step(state: BatteryState, power: float, dt: float, vehicle) -> BatteryState:
    """以恒定功率放电 dt 秒

    Args:
        state: 当前状态
        power: 放电功率 (W)，不小于 0
        dt: 时长 (s)
        vehicle: VehicleConfig

    Returns:
        新状态；能量不足时截断为 0 并置 empty
    """
    if power == 0:
        return state
    current = power / float(open_circuit_voltage(state.soc, vehicle))
    drawn = power * dt
    empty = drawn >= state.energy_remaining
    energy = 0.0 if empty else state.energy_remaining - drawn
    soc = energy / state.capacity
    voltage = float(open_circuit_voltage(soc, vehicle)) - current * vehicle.internal_resistance
    voltage = min(voltage, state.voltage_under_load)
    return replace(
        state,
        energy_remaining=energy,
        voltage_under_load=voltage,
        c_rate=current / vehicle.capacity_ah,
        soc=soc,
        empty=empty or state.empty,
    )


def discharge(state: BatteryState, power: np.ndarray, dt: np.ndarray, vehicle) -> Tuple[np.ndarray, ...]:
    """按功率序列连续放电，结果与逐步调用 battery_step 一致

    Returns:
        (每步之后的剩余能量, 负载电压, C 倍率, 是否放空)
    """
    power = np.asarray(power, dtype=float)
    drawn = np.cumsum(power * np.asarray(dt, dtype=float))
    before = state.energy_remaining - np.concatenate([[0.0], drawn[:-1]])
    after = state.energy_remaining - drawn
    empty = after <= 0
    after = np.maximum(after, 0.0)
    before = np.maximum(before, 0.0)

    current = power / open_circuit_voltage(before / state.capacity, vehicle)
    loaded = open_circuit_voltage(after / state.capacity, vehicle) - current * vehicle.internal_resistance
    # 零功率步保持前一步的电压与 C 倍率
    idle = power == 0
    loaded = np.where(idle, np.inf, loaded)
    voltage = np.minimum.accumulate(np.concatenate([[state.voltage_under_load], loaded]))[1:]
    if idle.any():
        c_rate = _ffill(np.where(idle, np.nan, current / vehicle.capacity_ah), state.c_rate)
    else:
        c_rate = current / vehicle.capacity_ah
    return after, voltage, c_rate, empty | state.empty


def _ffill(values: np.ndarray, initial: float) -> np.ndarray:
    idx = np.where(np.isnan(values), 0, np.arange(1, len(values) + 1))
    np.maximum.accumulate(idx, out=idx)
    padded = np.concatenate([[initial], values])
    return padded[idx]


def state_after(state: BatteryState, energy: float, voltage: float, c_rate: float, empty: bool) -> BatteryState:
    return replace(state, energy_remaining=float(energy), voltage_under_load=float(voltage),
                   c_rate=float(c_rate), soc=float(energy) / state.capacity, empty=bool(empty))

