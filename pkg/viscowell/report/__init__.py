# coding=utf-8
"""
报告模块 - 控制台文本块
"""

from viscowell.report.formatter import (
    format_classification,
    format_constants,
    format_fit,
    format_simulation,
    format_sweep,
)

__all__ = [
    "format_constants",
    "format_classification",
    "format_simulation",
    "format_sweep",
    "format_fit",
]
