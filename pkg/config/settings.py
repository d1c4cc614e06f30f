"""全局配置"""
import os
import logging

# 默认输出根目录，可用环境变量覆盖
OUTPUT_ROOT_ENV = 'UAMSIM_OUTPUT_ROOT'
DEFAULT_OUTPUT_ROOT = 'runs'

LOG_FORMAT = '%(asctime)s - %(name)s - %(levelname)s - %(message)s'

# 流水线默认参数
PIPELINE_PARAMS = {
    'jobs': 1,
    'log_file': 'uamsim.log',
}

# 运行目录布局
RUN_LAYOUT = {
    'manifest': 'manifest.json',
    'config': 'config.json',
    'trajectories': 'trajectories',
    'scenario': 'trajectories/scenario.json',
    'missions': 'missions',
    'mission_index': 'missions/index.json',
    'results': 'results',
    'report': 'results/report.json',
    'mission_results': 'results/missions.json',
    'samples': 'results/missions',
    'figures': 'results/figures',
}


def setup_logging(level: int = logging.INFO, log_file: str = None):
    """配置日志

    Args:
        level: 日志级别
        log_file: 日志文件路径，为 None 时只输出到控制台
    """
    handlers = [logging.StreamHandler()]  # 输出到控制台
    if log_file:
        os.makedirs(os.path.dirname(os.path.abspath(log_file)), exist_ok=True)
        handlers.append(logging.FileHandler(log_file, encoding='utf-8'))  # 输出到文件

    logging.basicConfig(
        level=level,
        format=LOG_FORMAT,
        handlers=handlers,
        force=True,
    )
