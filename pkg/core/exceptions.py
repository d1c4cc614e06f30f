"""异常定义

所有异常都带有 exit_code，main.py 据此返回进程退出码：
1 参数错误，2 文件/IO 错误，3 不变量被破坏。
"""


class UamSimError(Exception):
    """项目异常基类"""
    exit_code = 1


class UnitError(UamSimError, ValueError):
    """单位不存在或量纲不一致"""
    exit_code = 3


class ConfigError(UamSimError, ValueError):
    """配置解析失败或配置不满足约束"""
    exit_code = 3

    def __init__(self, message: str, field: str = None, line: int = None):
        self.field = field
        self.line = line
        prefix = ''
        if field:
            prefix += f"[{field}] "
        if line is not None:
            prefix += f"(第 {line} 行) "
        super().__init__(prefix + message)


class SimulationError(UamSimError, RuntimeError):
    """仿真超出时间上限等运行期错误"""
    exit_code = 3


class DilationError(UamSimError, ValueError):
    """轨迹无法扩展为完整任务剖面"""
    exit_code = 3

    def __init__(self, message: str, flight_id: int = None):
        self.flight_id = flight_id
        if flight_id is not None:
            message = f"航班 {flight_id}: {message}"
        super().__init__(message)


class ArtifactError(UamSimError):
    """阶段产物缺失或损坏"""
    exit_code = 2

    def __init__(self, message: str, path=None, line: int = None):
        self.path = path
        self.line = line
        where = ''
        if path is not None:
            where = f"{path}"
            if line is not None:
                where += f":{line}"
            where += ": "
        super().__init__(where + message)


class StageMissingError(ArtifactError):
    """前置阶段尚未运行"""
    exit_code = 2


class UsageError(UamSimError):
    """命令参数不合法，例如航班数为 0 或没有可评估的任务"""
    exit_code = 1
