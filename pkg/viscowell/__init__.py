# coding=utf-8
"""
viscowell - 奇异非局部粘弹性波动方程的模拟与势阱分析工具

使用方式:
  python -m viscowell simulate --config config/config.yaml   # 模块执行
  viscowell classify --config config/examples/unstable.yaml  # 安装后执行
"""

__version__ = "1.0.0"

from viscowell.context import AppContext

__all__ = ["AppContext", "__version__"]
