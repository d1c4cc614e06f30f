import os
import json
import logging
from pathlib import Path
from typing import Any, Union

from config.settings import OUTPUT_ROOT_ENV, DEFAULT_OUTPUT_ROOT
from core.exceptions import ArtifactError


def read_json(path: Union[str, Path]) -> Any:
    """读取 JSON 文件

    Raises:
        ArtifactError: 文件不存在或解析失败，信息中带文件名和行号
    """
    path = Path(path)
    try:
        return json.loads(path.read_text(encoding='utf-8'))
    except FileNotFoundError:
        raise ArtifactError("文件不存在", path=path)
    except json.JSONDecodeError as e:
        raise ArtifactError(f"JSON 解析失败: {e.msg}", path=path, line=e.lineno)


def write_json(path: Union[str, Path], data: Any, indent: int = 2):
    """写出 JSON，键顺序与输入一致，保证相同输入得到相同字节"""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(data, indent=indent, ensure_ascii=False) + "\n", encoding='utf-8')


def default_output_root() -> Path:
    """默认输出根目录，可用环境变量覆盖"""
    return Path(os.environ.get(OUTPUT_ROOT_ENV, DEFAULT_OUTPUT_ROOT))


def handle_error(error: Exception, logger: logging.Logger):
    """统一错误处理"""
    logger.error(f"运行出错: {str(error)}", exc_info=logger.isEnabledFor(logging.DEBUG))
