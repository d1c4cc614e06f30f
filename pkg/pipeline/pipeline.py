import json
import time
import logging
from pathlib import Path
from dataclasses import dataclass, field, asdict
from typing import Dict, Optional, Union

from config.settings import RUN_LAYOUT
from core.config import RunConfig, load_run_config, config_hash
from core.exceptions import ArtifactError, StageMissingError
from feed.demand_feed import PoissonDemand
from pipeline._01_airspace_sim import AirspaceSimulator, write_trajectories, read_trajectories, flight_file
from pipeline._02_dilation import dilate_all, write_missions, read_missions
from pipeline._03_evaluator import evaluate_fleet, SAMPLE_COLUMNS
from pipeline._04_report import Reporter
from utils.utils import read_json, write_json

STAGES = ('simulate', 'dilate', 'evaluate')


@dataclass
class RunManifest:
    """运行清单：记录配置哈希、随机种子以及各阶段产物"""
    run_id: str
    config_hash: str
    seed: int
    stage_outputs: Dict[str, str] = field(default_factory=dict)
    timing: Dict[str, float] = field(default_factory=dict)

    def save(self, run_dir: Path):
        write_json(run_dir / RUN_LAYOUT['manifest'], asdict(self))

    @classmethod
    def load(cls, run_dir: Path) -> 'RunManifest':
        path = run_dir / RUN_LAYOUT['manifest']
        if not path.is_file():
            raise StageMissingError("运行清单不存在，请先运行 simulate", path=path)
        data = read_json(path)
        try:
            return cls(**data)
        except TypeError as e:
            raise ArtifactError(f"运行清单字段非法: {e}", path=path)

    def require(self, stage: str, run_dir: Path):
        """确认前置阶段已完成且产物存在"""
        if stage not in self.stage_outputs:
            raise StageMissingError(f"缺少 {stage} 阶段产物，请先运行 {stage}", path=run_dir)
        path = run_dir / self.stage_outputs[stage]
        if not path.exists():
            raise StageMissingError(f"{stage} 阶段产物缺失，请重新运行 {stage}", path=path)


class IntegratedPipeline:
    """UTM 仿真 -> 任务剖面扩展 -> 性能评估 -> 汇总"""

    def __init__(self, run_dir: Union[str, Path]):
        """
        Args:
            run_dir: 运行目录，所有阶段的产物都写在这里
        """
        self.logger = logging.getLogger(__name__)
        self.run_dir = Path(run_dir)
        self.reporter = Reporter()

    def _path(self, key: str) -> Path:
        return self.run_dir / RUN_LAYOUT[key]

    def _banner(self, title: str):
        print("\n" + "=" * 50)
        print(title)
        print("=" * 50)

    def _save_config(self, run_config: RunConfig, seed: int) -> str:
        digest = config_hash(run_config, seed)
        write_json(self._path('config'), run_config.canonical())
        return digest

    def load_config(self, manifest: RunManifest) -> RunConfig:
        """从运行目录恢复配置并校验哈希"""
        path = self._path('config')
        if not path.is_file():
            raise StageMissingError("配置快照不存在，请先运行 simulate", path=path)
        try:
            run_config = RunConfig.from_canonical(read_json(path))
        except (KeyError, TypeError) as e:
            raise ArtifactError(f"配置快照字段非法: {e}", path=path)
        digest = config_hash(run_config, manifest.seed)
        if digest != manifest.config_hash:
            raise ArtifactError(f"配置哈希不一致: 清单 {manifest.config_hash[:12]}，重算 {digest[:12]}", path=path)
        return run_config

    def cmd_simulate(self, config_path: Optional[Union[str, Path]] = None, seed: int = None,
                     n_flights: int = None) -> RunManifest:
        """阶段1: 生成二维轨迹

        Args:
            config_path: YAML 配置文件，为 None 时取默认配置
            seed: 覆盖 sim.rng_seed
            n_flights: 覆盖 sim.n_flights

        Returns:
            写入磁盘的运行清单
        """
        try:
            self._banner("阶段1: UTM 二维仿真")
            run_config = load_run_config(config_path).with_overrides(seed=seed, n_flights=n_flights)
            seed = run_config.sim.rng_seed
            self.run_dir.mkdir(parents=True, exist_ok=True)
            digest = self._save_config(run_config, seed)

            start = time.perf_counter()
            demand = PoissonDemand.from_config(run_config.sim, seed)
            simulator = AirspaceSimulator(run_config.sim)
            trajectories = simulator.run(demand.generate(run_config.sim.n_flights))
            meta = {'seed': seed, 'config_hash': digest, 'stats': simulator.stats.to_dict()}
            write_trajectories(trajectories, self._path('trajectories'), meta)

            manifest = RunManifest(run_id=self.run_dir.name, config_hash=digest, seed=seed)
            manifest.stage_outputs['simulate'] = RUN_LAYOUT['scenario']
            manifest.timing['simulate'] = time.perf_counter() - start
            manifest.save(self.run_dir)
            self.logger.info(f"阶段1 完成: {len(trajectories)} 条轨迹，配置哈希 {digest[:12]}")
            return manifest
        except Exception as e:
            self.logger.error(f"仿真阶段出错: {str(e)}")
            raise

    def cmd_dilate(self, delta_vertical: float = None, delta_horizontal: float = None) -> RunManifest:
        """阶段2: 把轨迹扩展为任务剖面

        Args:
            delta_vertical: 覆盖 bounds.delta_vertical (m/s)
            delta_horizontal: 覆盖 bounds.delta_horizontal (m/s)
        """
        try:
            self._banner("阶段2: 任务剖面扩展")
            manifest = RunManifest.load(self.run_dir)
            manifest.require('simulate', self.run_dir)
            run_config = self.load_config(manifest)
            if delta_vertical is not None or delta_horizontal is not None:
                run_config = run_config.with_overrides(delta_vertical=delta_vertical,
                                                       delta_horizontal=delta_horizontal)
                manifest.config_hash = self._save_config(run_config, manifest.seed)

            start = time.perf_counter()
            _, trajectories = read_trajectories(self._path('scenario'))
            sim, vehicle, spec, bounds = run_config.as_tuple()
            profiles = dilate_all(trajectories, spec, bounds, vehicle)
            write_missions(profiles, self._path('missions'),
                           {'seed': manifest.seed, 'config_hash': manifest.config_hash})

            manifest.stage_outputs['dilate'] = RUN_LAYOUT['mission_index']
            for later in ('evaluate',):
                manifest.stage_outputs.pop(later, None)
            manifest.timing['dilate'] = time.perf_counter() - start
            manifest.save(self.run_dir)
            self.logger.info(f"阶段2 完成: {len(profiles)} 个任务剖面")
            return manifest
        except Exception as e:
            self.logger.error(f"扩展阶段出错: {str(e)}")
            raise

    def cmd_evaluate(self, jobs: int = 1) -> RunManifest:
        """阶段3: 可行性评估，写出报告、逐任务采样与绘图数据"""
        try:
            self._banner("阶段3: 性能评估")
            manifest = RunManifest.load(self.run_dir)
            manifest.require('dilate', self.run_dir)
            run_config = self.load_config(manifest)

            start = time.perf_counter()
            _, profiles = read_missions(self._path('mission_index'))
            report = evaluate_fleet(profiles, run_config.vehicle, run_config.evaluation, jobs=jobs)

            write_json(self._path('report'), report.to_dict())
            write_json(self._path('mission_results'), [m.to_dict() for m in report.missions])
            samples_dir = self._path('samples')
            samples_dir.mkdir(parents=True, exist_ok=True)
            for m in report.missions:
                m.samples[SAMPLE_COLUMNS].to_csv(samples_dir / flight_file(m.flight_id, 'csv'), index=False)
            self.reporter.write_figure_tables(self.reporter.figure_tables(report), self._path('figures'))

            manifest.stage_outputs['evaluate'] = RUN_LAYOUT['report']
            manifest.timing['evaluate'] = time.perf_counter() - start
            manifest.save(self.run_dir)
            print(f"feasible: {report.n_feasible}  infeasible: {report.n_infeasible}  total: {report.n_total}")
            return manifest
        except Exception as e:
            self.logger.error(f"评估阶段出错: {str(e)}")
            raise

    def cmd_report(self, plot: bool = False) -> str:
        """打印可读汇总，可选渲染 PNG"""
        if not self.run_dir.is_dir():
            raise ArtifactError("运行目录不存在", path=self.run_dir)
        manifest = RunManifest.load(self.run_dir)
        manifest.require('evaluate', self.run_dir)
        report = read_json(self._path('report'))
        records = read_json(self._path('mission_results'))
        text = self.reporter.summary(report, self.reporter.mission_table_from_records(records))
        print(text)
        if plot:
            self.reporter.plot(self._path('figures'))
        return text

    def run(self, config_path=None, seed: int = None, n_flights: int = None, jobs: int = 1,
            delta_vertical: float = None, delta_horizontal: float = None, plot: bool = False) -> str:
        """依次运行全部阶段"""
        self.cmd_simulate(config_path, seed=seed, n_flights=n_flights)
        self.cmd_dilate(delta_vertical=delta_vertical, delta_horizontal=delta_horizontal)
        self.cmd_evaluate(jobs=jobs)
        return self.cmd_report(plot=plot)
