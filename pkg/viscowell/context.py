# coding=utf-8
"""
应用上下文模块

封装所有依赖配置的操作：由标准化配置构造网格、松弛核、方程参数与初值，
并缓存代价较高的势阱常数。各子命令只通过 AppContext 访问配置。
"""

import logging
from functools import cached_property
from pathlib import Path
from typing import Any, Dict, Optional, Tuple

import numpy as np

from viscowell.analysis.potential_well import (
    WellConstants,
    WellReport,
    assess_initial_data,
    compute_well_constants,
)
from viscowell.core.errors import UnsupportedOperationError
from viscowell.physics.kernels import ConstantXi, RelaxationKernel, XiFunction, create_kernel, xi_for_kernel
from viscowell.physics.models import ProblemParams
from viscowell.physics.solver import make_initial_data
from viscowell.physics.weighted_space import Grid
from viscowell.storage.local import LocalStorage
from viscowell.utils.time import default_run_dir

logger = logging.getLogger(__name__)


class AppContext:
    """
    应用上下文类

    使用示例:
        config = load_config("config/examples/stable.yaml")
        ctx = AppContext(config)

        params = ctx.params
        u0, u1 = ctx.initial_data()
        report = ctx.assess(u0, u1)
    """

    def __init__(self, config: Dict[str, Any]):
        """
        Args:
            config: load_config 返回的标准化配置字典
        """
        self.config = config
        self._constants: Optional[WellConstants] = None
        self._output_dir: Optional[Path] = None

    # === 配置访问 ===

    @property
    def timezone(self) -> str:
        return self.config["APP"].get("TIMEZONE", "Asia/Shanghai")

    @property
    def debug(self) -> bool:
        return self.config["APP"].get("DEBUG", False)

    @property
    def problem_config(self) -> Dict:
        return self.config["PROBLEM"]

    @property
    def kernel_config(self) -> Dict:
        return self.config["KERNEL"]

    @property
    def time_config(self) -> Dict:
        return self.config["TIME"]

    @property
    def init_config(self) -> Dict:
        return self.config["INIT"]

    @property
    def analysis_config(self) -> Dict:
        return self.config["ANALYSIS"]

    # === 领域对象 ===

    @cached_property
    def grid(self) -> Grid:
        return Grid(self.config["GRID"]["ELL"], self.config["GRID"]["N"])

    @cached_property
    def kernel(self) -> RelaxationKernel:
        """按 kernel.type 构造松弛核；tabulated 从 kernel.table_path 读取"""
        cfg = self.kernel_config
        kind = cfg["TYPE"]
        if kind == "tabulated":
            times, values = LocalStorage.read_kernel_table(cfg["TABLE_PATH"])
            return create_kernel(kind, times=times, values=values)
        return create_kernel(
            kind,
            g0=cfg["G0"], eta=cfg["ETA"], c0=cfg["C0"], q=cfg["Q"],
            r=cfg["R"], m=cfg["M"], scale=cfg["SCALE"],
        )

    @cached_property
    def params(self) -> ProblemParams:
        cfg = self.problem_config
        return ProblemParams(
            p=cfg["P"], a=cfg["A"], kernel=self.kernel, grid=self.grid,
            source_enabled=cfg["SOURCE_ENABLED"],
        )

    @property
    def dt(self) -> float:
        """time.dt，为 0 时取 cfl·h"""
        cfg = self.time_config
        return cfg["DT"] if cfg["DT"] > 0 else cfg["CFL"] * self.grid.h

    def initial_data(self, amplitude: Optional[float] = None) -> Tuple[np.ndarray, np.ndarray]:
        """
        构造初值 (u0, u1)

        Args:
            amplitude: 覆盖 init.amplitude（扫描时使用）
        """
        cfg = self.init_config
        custom = None
        if cfg["FAMILY"] == "custom":
            custom = LocalStorage.read_field(cfg["CUSTOM_PATH"], self.grid)
        return make_initial_data(
            self.grid,
            family=cfg["FAMILY"],
            amplitude=cfg["AMPLITUDE"] if amplitude is None else amplitude,
            velocity_scale=cfg["VELOCITY_SCALE"],
            custom=custom,
        )

    def decay_model(self) -> Tuple[Optional[float], XiFunction]:
        """
        衰减拟合使用的 (r, ξ)

        r = 1 的核返回 r=None（只报告拟合指数）；没有解析 ξ 的核退回 ξ ≡ 1。
        """
        try:
            r, xi = xi_for_kernel(self.kernel)
        except UnsupportedOperationError:
            logger.warning("核 %s 没有解析的 ξ，按 ξ ≡ 1 拟合", self.kernel.kind)
            return None, ConstantXi(1.0)
        return (r if r > 1.0 else None), xi

    # === 势阱常数 ===

    @property
    def well_constants(self) -> WellConstants:
        """(l, C_p, C_*, d1)，首次访问时计算，δ 取配置值（未配置时为 0）"""
        if self._constants is None:
            cfg = self.analysis_config
            delta = cfg["DELTA"] if cfg["DELTA"] is not None else 0.0
            self._constants = compute_well_constants(
                self.grid, self.kernel, self.problem_config["P"],
                delta=delta, starts=cfg["CSTAR_STARTS"], seed=cfg["SEED"],
            )
        return self._constants

    def use_constants(self, constants: WellConstants) -> None:
        """注入已计算的常数（并行扫描的子进程使用）"""
        self._constants = constants

    def assess(self, u0, u1) -> WellReport:
        cfg = self.analysis_config
        return assess_initial_data(
            self.grid, self.kernel, self.problem_config["P"], self.problem_config["A"],
            u0, u1, delta=cfg["DELTA"], constants=self.well_constants,
        )

    # === 输出 ===

    @property
    def output_dir(self) -> Path:
        """output.dir，为空时为 output/<日期>/<时间>（同一上下文内固定）"""
        if self._output_dir is None:
            configured = self.config["OUTPUT"].get("DIR", "")
            self._output_dir = Path(configured) if configured else default_run_dir(timezone=self.timezone)
        return self._output_dir

    def set_output_dir(self, path: str) -> None:
        self._output_dir = Path(path)

    @cached_property
    def storage(self) -> LocalStorage:
        return LocalStorage(str(self.output_dir))
