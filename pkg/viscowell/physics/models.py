# coding=utf-8
"""
数据模型

求解器、能量分析和势阱分析共享的数据结构。
"""

from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

import numpy as np

from viscowell.core.errors import InvalidParameterError
from viscowell.core.validators import require_non_negative, validate_source_exponent
from viscowell.physics.kernels import ExponentialKernel, RelaxationKernel
from viscowell.physics.weighted_space import Grid


# 终止原因
TERMINATION_COMPLETED = "completed"
TERMINATION_BLOWUP = "blowup_detected"
TERMINATION_INSTABILITY = "numeric_instability"

# 轨迹 CSV 的列顺序
CSV_COLUMNS = ["t", "E", "I", "J", "kinetic", "gcirc", "norm_H2", "norm_ux_H2", "norm_p_p"]


@dataclass(frozen=True)
class ProblemParams:
    """方程参数"""

    p: float                            # 源项指数，2 < p < 3
    a: float                            # 阻尼系数 ≥ 0
    kernel: RelaxationKernel            # 松弛核 g
    grid: Grid                          # 空间网格
    source_enabled: bool = True         # 是否包含 |u|^{p-2}u 源项

    def __post_init__(self):
        validate_source_exponent(self.p)
        require_non_negative(self.a, "a")

    def to_dict(self) -> Dict:
        return {
            "p": self.p,
            "a": self.a,
            "source_enabled": self.source_enabled,
            "kernel": self.kernel.to_dict(),
            "grid": self.grid.to_dict(),
        }


class MemoryHistory:
    """
    记忆卷积 ∫₀^t g(t-s) B u(s) ds 所需的历史

    保存时间点以及每个时间点的 Bessel 算子像。
    指数核只维护递推累加器 m，不保存像（除非 keep_images=True，用于交叉验证）；
    零核什么都不保存。缓冲区按倍增扩容，append 为均摊 O(n)。
    """

    def __init__(self, kernel: RelaxationKernel, size: int, keep_images: Optional[bool] = None,
                 capacity: int = 256):
        self.kernel = kernel
        self.size = size
        self.recursive = isinstance(kernel, ExponentialKernel)
        if keep_images is None:
            keep_images = not (kernel.is_zero or self.recursive)
        self.keep_images = keep_images
        self.count = 0
        self._times = np.empty(capacity)
        self._images = np.empty((capacity, size)) if keep_images else None
        self.memory = np.zeros(size)
        self._last_image: Optional[np.ndarray] = None

    def _grow(self) -> None:
        capacity = 2 * self._times.size
        times = np.empty(capacity)
        times[: self.count] = self._times[: self.count]
        self._times = times
        if self._images is not None:
            images = np.empty((capacity, self.size))
            images[: self.count] = self._images[: self.count]
            self._images = images

    def append(self, t: float, image: np.ndarray) -> None:
        """追加时间 t 的 Bessel 像，并更新递推累加器"""
        if self.count and not t > self._times[self.count - 1]:
            raise InvalidParameterError(
                f"历史时间必须严格递增: {t} ≤ {self._times[self.count - 1]}"
            )
        if self.count == self._times.size:
            self._grow()

        if self.recursive:
            if self._last_image is None:
                self.memory = np.zeros(self.size)
            else:
                step = t - self._times[self.count - 1]
                decay = np.exp(-self.kernel.eta * step)
                self.memory = decay * self.memory + 0.5 * step * self.kernel.g0_value * (
                    decay * self._last_image + image
                )
            self._last_image = np.array(image, dtype=float)

        self._times[self.count] = t
        if self._images is not None:
            self._images[self.count] = image
        self.count += 1

    def checkpoint(self) -> Tuple[int, np.ndarray, Optional[np.ndarray]]:
        """当前长度与递推累加器，供 rollback 使用"""
        return self.count, self.memory, self._last_image

    def rollback(self, mark: Tuple[int, np.ndarray, Optional[np.ndarray]]) -> None:
        """撤销 checkpoint 之后的 append（append 不会就地修改已保存的数组）"""
        self.count, self.memory, self._last_image = mark

    @property
    def last_time(self) -> Optional[float]:
        return float(self._times[self.count - 1]) if self.count else None

    @property
    def times(self) -> np.ndarray:
        return self._times[: self.count]

    @property
    def images(self) -> np.ndarray:
        if self._images is None:
            raise InvalidParameterError("该历史未保存 Bessel 像")
        return self._images[: self.count]


@dataclass
class SimState:
    """
    时刻 t 的状态

    step 会向 history 追加新时刻，新旧状态共享同一个 history 对象，
    因此只能从最新状态继续推进。
    """

    t: float
    u: np.ndarray
    v: np.ndarray                       # u_t
    accel: np.ndarray                   # 约束投影后的加速度（缓存，供下一步使用）
    history: MemoryHistory


@dataclass(frozen=True)
class EnergyRecord:
    """某一时刻的能量快照"""

    t: float
    E: float
    I: float
    J: float
    kinetic: float                      # ½‖u_t‖_H²
    gcirc: float                        # (g∘u_x)(t)
    norm_H2: float                      # ‖u‖_H²
    norm_ux_H2: float                   # ‖u_x‖_H²
    norm_p_p: float                     # ∫ x|u|^p
    gprime_circ: float = 0.0            # (g'∘u_x)(t)
    kernel_mass: float = 0.0            # ∫₀^t g
    constraint: float = 0.0             # |∫ x u|

    def to_row(self) -> List[float]:
        return [getattr(self, name) for name in CSV_COLUMNS]


@dataclass
class Snapshot:
    """记录时刻的场"""

    t: float
    u: np.ndarray
    v: np.ndarray
    gradient: np.ndarray                # 面梯度，长度 n


@dataclass
class Trajectory:
    """一次模拟的记录"""

    params: ProblemParams
    dt: float
    record_every: int
    records: List[EnergyRecord] = field(default_factory=list)
    snapshots: List[Snapshot] = field(default_factory=list)
    termination: str = TERMINATION_COMPLETED
    blowup_time: Optional[float] = None
    final_time: float = 0.0
    steps: int = 0

    @property
    def times(self) -> np.ndarray:
        return np.array([r.t for r in self.records])

    def column(self, name: str) -> np.ndarray:
        """按列名取记录序列（如 "E"、"norm_H2"）"""
        return np.array([getattr(r, name) for r in self.records], dtype=float)

    @property
    def max_constraint_residual(self) -> float:
        if not self.records:
            return 0.0
        return float(max(r.constraint for r in self.records))

    def summary(self) -> Dict:
        return {
            "termination": self.termination,
            "blowup_time": self.blowup_time,
            "final_time": self.final_time,
            "steps": self.steps,
            "records": len(self.records),
            "dt": self.dt,
            "record_every": self.record_every,
            "max_constraint_residual": self.max_constraint_residual,
        }
