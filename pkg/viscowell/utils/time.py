# coding=utf-8
"""
时间工具模块 - 输出目录命名
"""

from datetime import datetime
from pathlib import Path
from typing import Optional

import pytz

# 默认时区
DEFAULT_TIMEZONE = "Asia/Shanghai"


def get_configured_time(timezone: str = DEFAULT_TIMEZONE) -> datetime:
    """
    获取配置时区的当前时间

    Args:
        timezone: 时区名称，如 'Asia/Shanghai', 'Europe/Berlin'

    Returns:
        带时区信息的当前时间
    """
    try:
        tz = pytz.timezone(timezone)
    except pytz.UnknownTimeZoneError:
        print(f"[警告] 未知时区 '{timezone}'，使用默认时区 {DEFAULT_TIMEZONE}")
        tz = pytz.timezone(DEFAULT_TIMEZONE)
    return datetime.now(tz)


def format_time_folder(now: Optional[datetime] = None, timezone: str = DEFAULT_TIMEZONE) -> str:
    """
    时间文件夹名 (HH-MM-SS)

    Windows 不支持文件名中的冒号，因此使用连字符
    """
    now = now or get_configured_time(timezone)
    return now.strftime("%H-%M-%S")


def default_run_dir(base: str = "output", timezone: str = DEFAULT_TIMEZONE,
                    now: Optional[datetime] = None) -> Path:
    """
    默认输出目录 output/<YYYY-MM-DD>/<HH-MM-SS>

    Examples:
        >>> tz = pytz.timezone("Asia/Shanghai")
        >>> str(default_run_dir(now=tz.localize(datetime(2025, 1, 2, 3, 4, 5))))
        'output/2025-01-02/03-04-05'
    """
    now = now or get_configured_time(timezone)
    return Path(base) / now.strftime("%Y-%m-%d") / format_time_folder(now)
