"""阶段4: 结果整理

生成绘图用的数据表、文字汇总以及可选的 PNG 图。
"""
import logging
from pathlib import Path
from typing import Dict, List, Union

import numpy as np
import pandas as pd
from sklearn.linear_model import LinearRegression
from sklearn.metrics import r2_score

from core.mission import SEGMENT_ORDER
from pipeline._03_evaluator import FleetReport, MissionResult, PROFILE_COLUMNS

logger = logging.getLogger(__name__)

FIGURE_TABLES = ('mission_profiles', 'energy_vs_range', 'voltage_vs_range', 'segment_c_rate', 'segment_throttle')


class Reporter:
    """结果整理"""

    def __init__(self, profile_step: float = 5.0):
        """
        Args:
            profile_step: 任务剖面表的抽样间隔 (s)
        """
        self.logger = logging.getLogger(__name__)
        self.profile_step = profile_step

    def mission_table(self, missions: List[MissionResult]) -> pd.DataFrame:
        """每个任务一行：航程、能耗、末端电压与失败信息"""
        rows = [{
            'flight_id': m.flight_id,
            'feasible': m.feasible,
            'first_failed_segment': m.first_failed_segment.value if m.first_failed_segment else '',
            'failure_reason': m.failure_reason.value if m.failure_reason else '',
            'range_km': m.range / 1000.0,
            'energy_kWh': m.total_energy_used / 3.6e6,
            'final_voltage_V': m.final_voltage,
        } for m in missions]
        return pd.DataFrame(rows)

    @staticmethod
    def mission_table_from_records(records: List[Dict]) -> pd.DataFrame:
        """由 missions.json 的记录重建任务表"""
        if not records:
            return pd.DataFrame(columns=['flight_id', 'feasible', 'range_km', 'energy_kWh', 'final_voltage_V'])
        df = pd.DataFrame(records)
        return pd.DataFrame({
            'flight_id': df['flight_id'],
            'feasible': df['feasible'].astype(bool),
            'range_km': df['range_m'] / 1000.0,
            'energy_kWh': df['total_energy_used_J'] / 3.6e6,
            'final_voltage_V': df['final_voltage_V'],
        })

    def _profile_table(self, missions: List[MissionResult]) -> pd.DataFrame:
        frames = []
        for m in missions:
            df = m.samples[['t_s', 'segment'] + PROFILE_COLUMNS]
            # 按抽样间隔取点，并保留每段首尾
            keep = np.isclose(np.mod(df['t_s'], self.profile_step), 0.0)
            keep |= df['segment'] != df['segment'].shift(1)
            keep |= df['segment'] != df['segment'].shift(-1)
            df = df[keep].copy()
            df.insert(0, 'flight_id', m.flight_id)
            df.insert(1, 'feasible', m.feasible)
            frames.append(df)
        return pd.concat(frames, ignore_index=True)

    def figure_tables(self, report: FleetReport) -> Dict[str, pd.DataFrame]:
        """绘图数据：任务剖面、能耗/电压随航程、各段 C 倍率与油门"""
        missions = self.mission_table(report.missions)
        order = [k.value for k in SEGMENT_ORDER]
        c_rate = pd.DataFrame(
            [(k, report.per_segment_mean_c_rate[k]) for k in order if k in report.per_segment_mean_c_rate],
            columns=['segment', 'mean_c_rate_per_h'])
        throttle = pd.DataFrame(
            [(k, v['lift'], v['forward']) for k in order
             for v in [report.per_segment_mean_throttle.get(k)] if v is not None],
            columns=['segment', 'throttle_lift', 'throttle_fwd'])
        return {
            'mission_profiles': self._profile_table(report.missions),
            'energy_vs_range': missions[['flight_id', 'feasible', 'range_km', 'energy_kWh']],
            'voltage_vs_range': missions[['flight_id', 'feasible', 'range_km', 'final_voltage_V']],
            'segment_c_rate': c_rate,
            'segment_throttle': throttle,
        }

    def write_figure_tables(self, tables: Dict[str, pd.DataFrame], out_dir: Union[str, Path]) -> List[Path]:
        out_dir = Path(out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        paths = []
        for name, df in tables.items():
            path = out_dir / f"{name}.csv"
            df.to_csv(path, index=False)
            paths.append(path)
        self.logger.info(f"写出 {len(paths)} 张绘图数据表到 {out_dir}")
        return paths

    @staticmethod
    def energy_per_km(missions: pd.DataFrame) -> Dict[str, float]:
        """可行任务的单位航程能耗，以及能耗对航程的线性回归"""
        feasible = missions[missions['feasible'] & (missions['range_km'] > 0)]
        if feasible.empty:
            return {}
        per_km = feasible['energy_kWh'] / feasible['range_km']
        stats = {
            'n': int(len(feasible)),
            'mean_kWh_per_km': float(per_km.mean()),
            'std_kWh_per_km': float(per_km.std(ddof=0)),
            'min_kWh_per_km': float(per_km.min()),
            'max_kWh_per_km': float(per_km.max()),
        }
        if len(feasible) >= 2:
            x = feasible[['range_km']].to_numpy()
            y = feasible['energy_kWh'].to_numpy()
            model = LinearRegression().fit(x, y)
            stats.update({
                'slope_kWh_per_km': float(model.coef_[0]),
                'intercept_kWh': float(model.intercept_),
                'r2': float(r2_score(y, model.predict(x))),
            })
        return stats

    def summary(self, report: Dict, missions: pd.DataFrame) -> str:
        """可读汇总：可行/不可行数量、按段失败分布、单位航程能耗"""
        lines = [
            "=" * 50,
            "任务可行性汇总",
            "=" * 50,
            f"total: {report['n_total']}",
            f"feasible: {report['n_feasible']}",
            f"infeasible: {report['n_infeasible']}",
        ]
        for kind, count in report['failures_by_segment'].items():
            lines.append(f"  {kind}: {count}")
        if report['failures_by_reason']:
            lines.append("失败原因:")
            for reason, count in report['failures_by_reason'].items():
                lines.append(f"  {reason}: {count}")

        stats = self.energy_per_km(missions) if not missions.empty else {}
        if stats:
            lines.append("单位航程能耗 (可行任务):")
            lines.append(f"  mean: {stats['mean_kWh_per_km']:.4f} kWh/km "
                         f"(std {stats['std_kWh_per_km']:.4f}, n={stats['n']})")
            if 'slope_kWh_per_km' in stats:
                lines.append(f"  fit: energy = {stats['slope_kWh_per_km']:.4f} kWh/km x range "
                             f"+ {stats['intercept_kWh']:.3f} kWh (R2={stats['r2']:.4f})")
        return "\n".join(lines)

    def plot(self, fig_dir: Union[str, Path]) -> List[Path]:
        """根据绘图数据表渲染 PNG"""
        import matplotlib
        matplotlib.use('Agg')
        import matplotlib.pyplot as plt
        import seaborn as sns

        fig_dir = Path(fig_dir)
        tables = {name: pd.read_csv(fig_dir / f"{name}.csv") for name in FIGURE_TABLES
                  if (fig_dir / f"{name}.csv").is_file()}
        paths = []

        def _save(name):
            path = fig_dir / f"{name}.png"
            plt.tight_layout()
            plt.savefig(path, dpi=150)
            plt.close()
            paths.append(path)

        if 'mission_profiles' in tables:
            df = tables['mission_profiles']
            for feasible, label in ((True, 'feasible'), (False, 'infeasible')):
                sub = df[df['feasible'] == feasible]
                if sub.empty:
                    continue
                one = sub[sub['flight_id'] == sub['flight_id'].iloc[0]]
                fig, axes = plt.subplots(2, 1, figsize=(10, 6), sharex=True)
                sns.lineplot(data=one, x='t_s', y='altitude_m', hue='segment', ax=axes[0], legend=False)
                sns.lineplot(data=one, x='t_s', y='airspeed_mps', hue='segment', ax=axes[1])
                axes[0].set_title(f"flight {int(one['flight_id'].iloc[0])} ({label})")
                axes[1].set_xlabel('t (s)')
                _save(f"mission_profile_{label}")

        for name, y, ylabel in (('energy_vs_range', 'energy_kWh', 'energy (kWh)'),
                                ('voltage_vs_range', 'final_voltage_V', 'final voltage (V)')):
            if name in tables:
                df = tables[name]
                plt.figure(figsize=(8, 5))
                sns.scatterplot(data=df, x='range_km', y=y, hue='feasible')
                plt.xlabel('range (km)')
                plt.ylabel(ylabel)
                _save(name)

        if 'segment_c_rate' in tables and not tables['segment_c_rate'].empty:
            plt.figure(figsize=(10, 5))
            sns.barplot(data=tables['segment_c_rate'], x='segment', y='mean_c_rate_per_h', color='steelblue')
            plt.xticks(rotation=45, ha='right')
            _save('segment_c_rate')

        if 'segment_throttle' in tables and not tables['segment_throttle'].empty:
            long = tables['segment_throttle'].melt(id_vars='segment', var_name='group', value_name='throttle')
            plt.figure(figsize=(10, 5))
            sns.barplot(data=long, x='segment', y='throttle', hue='group')
            plt.xticks(rotation=45, ha='right')
            _save('segment_throttle')

        self.logger.info(f"生成 {len(paths)} 张图")
        return paths
