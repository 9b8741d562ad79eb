# coding=utf-8
"""
存储模块 - 本地 CSV / JSON 文件读写
"""

from viscowell.storage.local import LocalStorage, read_phase_csv, to_jsonable

__all__ = ["LocalStorage", "read_phase_csv", "to_jsonable"]
