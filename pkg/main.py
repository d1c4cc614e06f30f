import sys
import logging
import argparse
from pathlib import Path

from config.settings import setup_logging, PIPELINE_PARAMS
from core.units import parse_quantity
from core.exceptions import UamSimError, UnitError
from pipeline.pipeline import IntegratedPipeline
from utils.utils import default_output_root, handle_error


class _Parser(argparse.ArgumentParser):
    """参数错误统一以退出码 1 结束"""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _positive_int(text: str) -> int:
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"需要整数: {text!r}")
    if value < 1:
        raise argparse.ArgumentTypeError(f"必须不小于 1: {value}")
    return value


def _speed(dimension: str):
    def parse(text: str) -> float:
        try:
            return parse_quantity(text, dimension)
        except UnitError as e:
            raise argparse.ArgumentTypeError(str(e))
    return parse


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog='uamsim', description='UAM 空域仿真与 eVTOL 任务可行性评估')
    parser.add_argument('-v', '--verbose', action='store_true', help='输出 DEBUG 日志')
    sub = parser.add_subparsers(dest='command', required=True, parser_class=_Parser)

    def out_arg(p):
        p.add_argument('--out', type=Path, default=None,
                       help='运行目录，默认 $UAMSIM_OUTPUT_ROOT/default')

    def sim_args(p):
        p.add_argument('--config', type=Path, default=None, help='YAML 配置文件')
        p.add_argument('--seed', type=int, default=None, help='覆盖 sim.rng_seed')
        p.add_argument('--flights', type=_positive_int, default=None, help='覆盖 sim.n_flights')

    def dilate_args(p):
        p.add_argument('--delta-v', type=_speed('vertical_speed'), default=None,
                       help='垂直速度随机化半宽，例如 "100 ft/min"')
        p.add_argument('--delta-h', type=_speed('speed'), default=None,
                       help='水平速度随机化半宽，例如 "15 mph"')

    p = sub.add_parser('simulate', help='阶段1: UTM 二维仿真')
    out_arg(p)
    sim_args(p)

    p = sub.add_parser('dilate', help='阶段2: 任务剖面扩展')
    out_arg(p)
    dilate_args(p)

    p = sub.add_parser('evaluate', help='阶段3: 性能评估')
    out_arg(p)
    p.add_argument('--jobs', type=_positive_int, default=PIPELINE_PARAMS['jobs'], help='并行进程数')

    p = sub.add_parser('report', help='打印汇总')
    out_arg(p)
    p.add_argument('--plot', action='store_true', help='渲染 PNG 图')

    p = sub.add_parser('run', help='依次运行全部阶段')
    out_arg(p)
    sim_args(p)
    dilate_args(p)
    p.add_argument('--jobs', type=_positive_int, default=PIPELINE_PARAMS['jobs'], help='并行进程数')
    p.add_argument('--plot', action='store_true', help='渲染 PNG 图')
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    run_dir = args.out if args.out is not None else default_output_root() / 'default'
    setup_logging(logging.DEBUG if args.verbose else logging.INFO,
                  log_file=str(run_dir.parent / PIPELINE_PARAMS['log_file']))
    logger = logging.getLogger('uamsim')

    pipeline = IntegratedPipeline(run_dir)
    try:
        if args.command == 'simulate':
            pipeline.cmd_simulate(args.config, seed=args.seed, n_flights=args.flights)
        elif args.command == 'dilate':
            pipeline.cmd_dilate(delta_vertical=args.delta_v, delta_horizontal=args.delta_h)
        elif args.command == 'evaluate':
            pipeline.cmd_evaluate(jobs=args.jobs)
        elif args.command == 'report':
            pipeline.cmd_report(plot=args.plot)
        else:
            pipeline.run(args.config, seed=args.seed, n_flights=args.flights, jobs=args.jobs,
                         delta_vertical=args.delta_v, delta_horizontal=args.delta_h, plot=args.plot)
    except UamSimError as e:
        handle_error(e, logger)
        print(f"错误: {e}", file=sys.stderr)
        return e.exit_code
    except OSError as e:
        handle_error(e, logger)
        print(f"错误: {e}", file=sys.stderr)
        return 2
    return 0


if __name__ == '__main__':
    sys.exit(main())
