"""二维巡航轨迹

每个航班一份 CSV，表头为 x_m,y_m,vx_mps,vy_mps,t_s。
"""
import re
import logging
from pathlib import Path
from dataclasses import dataclass, field
from typing import List, Tuple, Union

import numpy as np
import pandas as pd

from core.exceptions import ArtifactError

logger = logging.getLogger(__name__)

TRAJECTORY_COLUMNS = ['x_m', 'y_m', 'vx_mps', 'vy_mps', 't_s']


@dataclass(frozen=True)
class TrajectoryPoint:
    """轨迹点：位置、速度与时间戳"""
    x: float
    y: float
    vx: float
    vy: float
    t: float

    @property
    def position(self) -> np.ndarray:
        return np.array([self.x, self.y])

    @property
    def velocity(self) -> np.ndarray:
        return np.array([self.vx, self.vy])

    @property
    def speed(self) -> float:
        return float(np.hypot(self.vx, self.vy))


@dataclass(frozen=True)
class ConflictPrediction:
    """两机最近接近点预测"""
    intruder_id: int
    t_cpa: float
    d_cpa: float


@dataclass
class Trajectory2D:
    """单个航班的二维轨迹"""
    flight_id: int
    origin: Tuple[float, float]
    destination: Tuple[float, float]
    points: List[TrajectoryPoint] = field(default_factory=list)

    def __len__(self):
        return len(self.points)

    @property
    def departure_time(self) -> float:
        return self.points[0].t

    @property
    def arrival_time(self) -> float:
        return self.points[-1].t

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame([(p.x, p.y, p.vx, p.vy, p.t) for p in self.points],
                            columns=TRAJECTORY_COLUMNS)

    @classmethod
    def from_frame(cls, flight_id: int, df: pd.DataFrame,
                   origin: Tuple[float, float] = None,
                   destination: Tuple[float, float] = None) -> 'Trajectory2D':
        points = [TrajectoryPoint(*row) for row in
                  df[TRAJECTORY_COLUMNS].itertuples(index=False, name=None)]
        if origin is None and points:
            origin = (points[0].x, points[0].y)
        if destination is None and points:
            destination = (points[-1].x, points[-1].y)
        return cls(flight_id, origin, destination, points)

    def write_csv(self, path: Union[str, Path]):
        self.to_frame().to_csv(path, index=False)

    @classmethod
    def read_csv(cls, path: Union[str, Path], flight_id: int,
                 origin: Tuple[float, float] = None,
                 destination: Tuple[float, float] = None) -> 'Trajectory2D':
        """读取轨迹 CSV

        Raises:
            ArtifactError: 文件缺失或内容损坏，信息中带文件名和行号
        """
        return cls.from_frame(flight_id, read_trajectory_frame(path), origin, destination)


def read_trajectory_frame(path: Union[str, Path]) -> pd.DataFrame:
    """读取并校验轨迹 CSV，行号按文件行计 (表头为第 1 行)"""
    path = Path(path)
    if not path.is_file():
        raise ArtifactError("轨迹文件不存在", path=path)
    try:
        df = pd.read_csv(path, dtype=str, keep_default_na=False)
    except pd.errors.EmptyDataError:
        raise ArtifactError("轨迹文件为空", path=path, line=1)
    except pd.errors.ParserError as e:
        match = re.search(r'line (\d+)', str(e))
        raise ArtifactError(f"CSV 格式错误: {e}", path=path,
                            line=int(match.group(1)) if match else None)

    if list(df.columns) != TRAJECTORY_COLUMNS:
        raise ArtifactError(f"表头应为 {','.join(TRAJECTORY_COLUMNS)}", path=path, line=1)
    if df.empty:
        raise ArtifactError("轨迹没有数据行", path=path, line=2)

    numeric = df.apply(pd.to_numeric, errors='coerce')
    bad = numeric.isna().any(axis=1) | ~np.isfinite(numeric.fillna(0.0)).all(axis=1)
    if bad.any():
        row = int(np.flatnonzero(bad.to_numpy())[0])
        raise ArtifactError(f"无法解析的数值: {','.join(df.iloc[row])}", path=path, line=row + 2)

    # 逐值按字符串精确解析，保证写入/读取后位级一致
    numeric = pd.read_csv(path, float_precision='round_trip').astype(float)
    t = numeric['t_s'].to_numpy()
    non_increasing = np.flatnonzero(np.diff(t) <= 0)
    if len(non_increasing):
        row = int(non_increasing[0]) + 1
        raise ArtifactError("时间戳必须严格递增", path=path, line=row + 2)
    return numeric
