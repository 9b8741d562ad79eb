# coding=utf-8
"""
工具模块 - 公共工具函数
"""

from viscowell.utils.time import (
    DEFAULT_TIMEZONE,
    default_run_dir,
    format_time_folder,
    get_configured_time,
)

__all__ = [
    "DEFAULT_TIMEZONE",
    "get_configured_time",
    "format_time_folder",
    "default_run_dir",
]
