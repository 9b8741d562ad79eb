# coding=utf-8
"""
核心模块 - 配置加载、错误类型与参数验证
"""

from viscowell.core.config import dump_config, parse_flat_config
from viscowell.core.errors import (
    ConfigurationError,
    DataFileError,
    FitError,
    GridMismatchError,
    HistoryError,
    InvalidKernelError,
    InvalidParameterError,
    KernelRangeError,
    NumericError,
    NumericInstabilityError,
    PreconditionError,
    UnsupportedOperationError,
    ViscoWellError,
)
from viscowell.core.loader import load_config, normalize_config, parse_config_text

__all__ = [
    "load_config",
    "normalize_config",
    "parse_config_text",
    "parse_flat_config",
    "dump_config",
    "ViscoWellError",
    "ConfigurationError",
    "InvalidParameterError",
    "PreconditionError",
    "InvalidKernelError",
    "KernelRangeError",
    "UnsupportedOperationError",
    "GridMismatchError",
    "HistoryError",
    "NumericError",
    "NumericInstabilityError",
    "FitError",
    "DataFileError",
]
