"""物理量与单位换算

内部计算一律使用国际单位制 (SI)，英制单位只出现在配置解析和结果输出的边界上。
换算由 pint 完成；这里只登记项目用到的单位标签和量纲。
"""
from dataclasses import dataclass
from typing import Dict, Tuple, Union

from pint import UnitRegistry, DimensionalityError

from core.exceptions import UnitError

ureg = UnitRegistry()
Q_ = ureg.Quantity

FT = Q_(1, 'foot').to('meter').magnitude
LB = Q_(1, 'pound').to('kilogram').magnitude
MILE = Q_(1, 'mile').to('meter').magnitude
HOUR = Q_(1, 'hour').to('second').magnitude
MINUTE = Q_(1, 'minute').to('second').magnitude
G0 = Q_(1, 'standard_gravity').to('meter / second ** 2').magnitude

# 单位标签 -> (量纲, pint 单位表达式)
# pint 里 'nm' 是纳米、'g' 是克、'kt' 是千吨，所以标签不直接交给 pint 解析
UNITS: Dict[str, Tuple[str, str]] = {
    # length
    'm': ('length', 'meter'),
    'km': ('length', 'kilometer'),
    'ft': ('length', 'foot'),
    'mi': ('length', 'mile'),
    'nm': ('length', 'nautical_mile'),
    # speed
    'm/s': ('speed', 'meter / second'),
    'km/h': ('speed', 'kilometer / hour'),
    'mph': ('speed', 'mile / hour'),
    'kt': ('speed', 'knot'),
    'ft/s': ('speed', 'foot / second'),
    # vertical speed
    'ft/min': ('vertical_speed', 'foot / minute'),
    'fpm': ('vertical_speed', 'foot / minute'),
    # mass
    'kg': ('mass', 'kilogram'),
    'lbs': ('mass', 'pound'),
    'lb': ('mass', 'pound'),
    # force
    'N': ('force', 'newton'),
    'kN': ('force', 'kilonewton'),
    'lbf': ('force', 'pound_force'),
    # power
    'W': ('power', 'watt'),
    'kW': ('power', 'kilowatt'),
    'hp': ('power', 'horsepower'),
    # energy
    'J': ('energy', 'joule'),
    'kJ': ('energy', 'kilojoule'),
    'MJ': ('energy', 'megajoule'),
    'Wh': ('energy', 'watt_hour'),
    'kWh': ('energy', 'kilowatt_hour'),
    # voltage / current
    'V': ('voltage', 'volt'),
    'A': ('current', 'ampere'),
    # time
    's': ('time', 'second'),
    'min': ('time', 'minute'),
    'h': ('time', 'hour'),
    # area
    'm2': ('area', 'meter ** 2'),
    'm^2': ('area', 'meter ** 2'),
    'ft2': ('area', 'foot ** 2'),
    'ft^2': ('area', 'foot ** 2'),
    # altitude above ground level
    'm AGL': ('altitude', 'meter'),
    'ft AGL': ('altitude', 'foot'),
    # 配置字段需要的附加量纲
    'm/s2': ('acceleration', 'meter / second ** 2'),
    'm/s^2': ('acceleration', 'meter / second ** 2'),
    'g': ('acceleration', 'standard_gravity'),
    'J/kg': ('specific_energy', 'joule / kilogram'),
    'Wh/kg': ('specific_energy', 'watt_hour / kilogram'),
    '1/s': ('rate', '1 / second'),
    '1/h': ('rate', '1 / hour'),
    'ohm': ('resistance', 'ohm'),
    '-': ('dimensionless', 'dimensionless'),
}

# 量纲 -> SI 单位标签
SI_UNIT = {
    'length': 'm',
    'speed': 'm/s',
    'vertical_speed': 'm/s',
    'mass': 'kg',
    'force': 'N',
    'power': 'W',
    'energy': 'J',
    'voltage': 'V',
    'current': 'A',
    'time': 's',
    'area': 'm2',
    'altitude': 'm AGL',
    'acceleration': 'm/s2',
    'specific_energy': 'J/kg',
    'rate': '1/s',
    'resistance': 'ohm',
    'dimensionless': '-',
}


def _lookup(unit: str) -> Tuple[str, str]:
    try:
        return UNITS[unit]
    except KeyError:
        raise UnitError(f"未知单位: {unit!r}")


def dimension_of(unit: str) -> str:
    """返回单位所属量纲"""
    return _lookup(unit)[0]


def _pint_convert(value: float, from_expr: str, to_expr: str, what: str) -> float:
    try:
        return float(Q_(value, from_expr).to(to_expr).magnitude)
    except DimensionalityError:
        raise UnitError(f"量纲不一致: {what}")


def convert(value: float, from_unit: str, to_unit: str) -> float:
    """在同一量纲的两个单位之间换算

    Args:
        value: 数值
        from_unit: 原单位标签，例如 'mph'
        to_unit: 目标单位标签，例如 'm/s'

    Returns:
        换算后的数值

    Raises:
        UnitError: 单位未知或量纲不一致
    """
    from_dim, from_expr = _lookup(from_unit)
    to_dim, to_expr = _lookup(to_unit)
    if from_expr == to_expr:
        return float(value)
    return _pint_convert(value, from_expr, to_expr, f"{from_unit} ({from_dim}) -> {to_unit} ({to_dim})")


def to_si(value: float, unit: str) -> float:
    """换算到 SI"""
    dimension, _ = _lookup(unit)
    return convert(value, unit, SI_UNIT[dimension])


def from_si(value: float, unit: str) -> float:
    """由 SI 换算到指定单位"""
    dimension, _ = _lookup(unit)
    return convert(value, SI_UNIT[dimension], unit)


@dataclass(frozen=True)
class Quantity:
    """带量纲的标量，value 始终为 SI 数值"""
    value: float
    dimension: str

    def __post_init__(self):
        if self.dimension not in SI_UNIT:
            raise UnitError(f"不支持的量纲: {self.dimension}")

    @classmethod
    def of(cls, value: float, unit: str) -> 'Quantity':
        dimension, _ = _lookup(unit)
        return cls(to_si(value, unit), dimension)

    def to(self, unit: str) -> float:
        return convert(self.value, SI_UNIT[self.dimension], unit)

    def __str__(self):
        return f"{self.value:g} {SI_UNIT[self.dimension]}"


def parse_quantity(raw: Union[str, int, float], dimension: str) -> float:
    """把配置里的数值解析为 SI 数值

    裸数字视为已经是 SI；字符串写成 "<数值> <单位标签>"，例如 "1500 ft"、"100.662 mph"。

    Args:
        raw: 配置中的原始值
        dimension: 字段期望的量纲

    Returns:
        SI 数值

    Raises:
        UnitError: 无法解析或量纲不匹配
    """
    if isinstance(raw, bool):
        raise UnitError(f"期望数值，得到布尔值 {raw!r}")
    if isinstance(raw, (int, float)):
        return float(raw)
    if not isinstance(raw, str):
        raise UnitError(f"无法解析的数值: {raw!r}")

    number, _, unit = raw.strip().partition(' ')
    try:
        value = float(number)
    except ValueError:
        raise UnitError(f"无法解析的数值: {raw!r}")
    unit = unit.strip()
    if not unit:
        return value

    unit_dim, expr = _lookup(unit)
    target = UNITS[SI_UNIT[dimension]][1]
    return _pint_convert(value, expr, target, f"{raw!r} 的量纲为 {unit_dim}，字段要求 {dimension}")
