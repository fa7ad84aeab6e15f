"""
异常层级

每个异常类带一个 exit_code，CLI 据此映射进程退出码。
"""

from typing import Optional

from config.constants import EXIT_CONFIG, EXIT_GENERIC, EXIT_IO, EXIT_NUMERIC


class ReleaseError(Exception):
    """所有领域异常的基类"""

    exit_code = EXIT_GENERIC


class ConfigError(ReleaseError, ValueError):
    """配置/参数非法"""

    exit_code = EXIT_CONFIG


class UnsupportedRecipeError(ConfigError):
    """高斯生成器不支持的维度组合（n_actions > n_secret）"""


class NumericError(ReleaseError, ArithmeticError):
    """非有限值、梯度异常、oracle 不一致"""

    exit_code = EXIT_NUMERIC


class ImpossibleObservationError(NumericError):
    """当前信念下观测的证据为 0"""

    def __init__(self, action: int, observation: int, message: Optional[str] = None):
        self.action = action
        self.observation = observation
        super().__init__(
            message or f"observation z={observation} has zero evidence under action a={action}"
        )


class InconsistentUpdateError(NumericError):
    """后验在先验为 0 的位置出现正概率"""


class BudgetExceededError(ReleaseError):
    """穷举 oracle 超出枚举预算"""

    exit_code = EXIT_CONFIG


class EpisodeFinishedError(ReleaseError, RuntimeError):
    """对终止状态 F 调用 step"""


class ModelFormatError(ReleaseError, ValueError):
    """模型/策略文件损坏、版本不符或违反不变量"""

    exit_code = EXIT_IO

    def __init__(self, message: str, line: Optional[int] = None, column: Optional[int] = None):
        self.line = line
        self.column = column
        if line is not None:
            message = f"{message} (line {line}, column {column})"
        super().__init__(message)
