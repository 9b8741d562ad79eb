# coding=utf-8
"""
松弛核模块

表示记忆核 g(t) 与辅助函数 ξ(t)，并检查 (G1)/(G2) 假设和核质量条件。

核的种类：
- exponential: g(t) = g0·e^{-ηt}
- polynomial:  g(t) = c0·(1+t)^{-q}
- logmixed:    g' = -ξ·g^r 的精确解，ξ(t) = 2(r-1)/(t+1)^{3-2r} + 1/(t+1)
- power_xi:    g' = -ξ·g^r 的精确解，ξ(t) = (1+t)^{-m}
- tabulated:   采样表，分段线性插值
- zero:        g ≡ 0

所有核对象构造后不可变，可以安全地在线程/进程之间共享。
"""

import logging
import math
from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from typing import List, Sequence, Tuple, Union

import numpy as np
from scipy import integrate

from viscowell.core.errors import (
    InvalidKernelError,
    InvalidParameterError,
    KernelRangeError,
    PreconditionError,
    UnsupportedOperationError,
)
from viscowell.core.validators import (
    require_open_interval,
    require_positive,
    validate_delta,
    validate_exponent_r,
    validate_source_exponent,
)

logger = logging.getLogger(__name__)

ArrayLike = Union[float, Sequence[float], np.ndarray]

# 采样网格上不等式检查的容差
ABS_TOL = 1e-10
REL_TOL = 1e-8


def _as_times(t: ArrayLike) -> np.ndarray:
    """转换为浮点数组并检查 t ≥ 0"""
    arr = np.asarray(t, dtype=float)
    if np.any(~np.isfinite(arr)) or np.any(arr < 0):
        raise InvalidParameterError(f"时间必须是有限值且 t ≥ 0 (domain error): {t}")
    return arr


def _unwrap(value: np.ndarray, like: ArrayLike) -> Union[float, np.ndarray]:
    """标量输入返回 float，数组输入返回数组"""
    if np.ndim(like) == 0:
        return float(value)
    return value


# ==================== ξ 函数 ====================


class XiFunction(ABC):
    """
    (G2) 中的正的非增函数 ξ(t)

    子类提供 ξ、ξ'、|ξ'/ξ| 的上界 L、闭式积分 ∫_{t0}^{t} ξ，
    以及 ∫₀^∞ ξ = ∞ 是否成立的解析标志。
    """

    name: str = "xi"

    @abstractmethod
    def value(self, t: np.ndarray) -> np.ndarray:
        """ξ(t)"""

    @abstractmethod
    def derivative(self, t: np.ndarray) -> np.ndarray:
        """ξ'(t)"""

    @abstractmethod
    def antiderivative(self, t: np.ndarray) -> np.ndarray:
        """某个原函数 Ξ(t)，用于闭式积分"""

    @property
    @abstractmethod
    def bound_L(self) -> float:
        """|ξ'/ξ| 的上界 L"""

    @property
    def integral_diverges(self) -> bool:
        """∫₀^∞ ξ = ∞（按解析形式判断）"""
        return True

    @abstractmethod
    def c_r_bounded(self, r: float) -> bool:
        """t/(1+∫ξ)^{1/(2(r-1))} 在 [0, ∞) 上是否有界（解析判断）"""

    def integral(self, t0: ArrayLike, t: ArrayLike) -> Union[float, np.ndarray]:
        """∫_{t0}^{t} ξ(s) ds"""
        t0_arr = np.asarray(t0, dtype=float)
        t_arr = np.asarray(t, dtype=float)
        result = self.antiderivative(t_arr) - self.antiderivative(t0_arr)
        return _unwrap(np.asarray(result, dtype=float), t)

    def to_dict(self) -> dict:
        return {"name": self.name, "L": self.bound_L}


@dataclass(frozen=True)
class ConstantXi(XiFunction):
    """ξ(t) ≡ ξ0"""

    xi0: float
    name: str = field(default="constant", init=False)

    def __post_init__(self):
        require_positive(self.xi0, "xi0")

    def value(self, t):
        return np.full_like(np.asarray(t, dtype=float), self.xi0)

    def derivative(self, t):
        return np.zeros_like(np.asarray(t, dtype=float))

    def antiderivative(self, t):
        return self.xi0 * np.asarray(t, dtype=float)

    @property
    def bound_L(self) -> float:
        return 0.0

    def c_r_bounded(self, r: float) -> bool:
        # t/(1+ξ0 t)^{1/(2(r-1))}，指数 ≥ 1 当且仅当 r ≤ 3/2
        return r <= 1.5

    def to_dict(self) -> dict:
        return {"name": self.name, "xi0": self.xi0, "L": 0.0}


@dataclass(frozen=True)
class PowerLawXi(XiFunction):
    """ξ(t) = (1+t)^{-m}，0 < m < 1"""

    m: float
    name: str = field(default="power_law", init=False)

    def __post_init__(self):
        require_open_interval(self.m, 0.0, 1.0, "m")

    def value(self, t):
        return (1.0 + np.asarray(t, dtype=float)) ** (-self.m)

    def derivative(self, t):
        return -self.m * (1.0 + np.asarray(t, dtype=float)) ** (-self.m - 1.0)

    def antiderivative(self, t):
        return (1.0 + np.asarray(t, dtype=float)) ** (1.0 - self.m) / (1.0 - self.m)

    @property
    def bound_L(self) -> float:
        # |ξ'/ξ| = m/(1+t) ≤ m
        return self.m

    def c_r_bounded(self, r: float) -> bool:
        return self.m <= 3.0 - 2.0 * r

    def to_dict(self) -> dict:
        return {"name": self.name, "m": self.m, "L": self.m}


@dataclass(frozen=True)
class LogMixedXi(XiFunction):
    """
    ξ(t) = 2(r-1)/(t+1)^{3-2r} + 1/(t+1)

    原函数 Ξ(t) = (t+1)^{2(r-1)} + ln(t+1)，|ξ'/ξ| ≤ 1/(t+1) ≤ 1。
    """

    r: float
    name: str = field(default="logmixed", init=False)

    def __post_init__(self):
        validate_exponent_r(self.r, allow_one=False)

    def value(self, t):
        s = 1.0 + np.asarray(t, dtype=float)
        return 2.0 * (self.r - 1.0) * s ** (2.0 * self.r - 3.0) + 1.0 / s

    def derivative(self, t):
        s = 1.0 + np.asarray(t, dtype=float)
        r = self.r
        return 2.0 * (r - 1.0) * (2.0 * r - 3.0) * s ** (2.0 * r - 4.0) - s ** -2.0

    def antiderivative(self, t):
        s = 1.0 + np.asarray(t, dtype=float)
        return s ** (2.0 * (self.r - 1.0)) + np.log(s)

    @property
    def bound_L(self) -> float:
        return 1.0

    def c_r_bounded(self, r: float) -> bool:
        # (1+∫ξ)^{1/(2(r-1))} ≍ t
        return True

    def to_dict(self) -> dict:
        return {"name": self.name, "r": self.r, "L": 1.0}


# ==================== 松弛核 ====================


class RelaxationKernel(ABC):
    """
    松弛核 g(t) 的抽象基类

    value / derivative 接受数组并逐点求值；mass 返回 ∫₀^horizon g。
    tail_exponent 为 g 的代数衰减指数（指数衰减或有限支撑时为 ∞），
    用于判断 ∫ g^{2-r} 的有限性。
    """

    kind: str = "kernel"

    @abstractmethod
    def value(self, t: np.ndarray) -> np.ndarray:
        """g(t)"""

    @abstractmethod
    def derivative(self, t: np.ndarray) -> np.ndarray:
        """g'(t)"""

    @abstractmethod
    def mass(self, horizon: float) -> float:
        """∫₀^horizon g(s) ds，horizon 可以是 math.inf"""

    @property
    def is_zero(self) -> bool:
        return False

    @property
    def is_analytic(self) -> bool:
        return True

    @property
    def tail_exponent(self) -> float:
        return math.inf

    @property
    def t_max(self) -> float:
        """可求值的最大时间（解析核为 ∞）"""
        return math.inf

    @property
    def g0(self) -> float:
        return float(self.value(np.zeros(1))[0])

    def total_mass(self) -> float:
        """∫₀^∞ g（表格核取采样范围内的质量）"""
        return self.mass(math.inf)

    def to_dict(self) -> dict:
        return {"type": self.kind}


@dataclass(frozen=True)
class ExponentialKernel(RelaxationKernel):
    """g(t) = g0·e^{-ηt}"""

    g0_value: float
    eta: float
    kind: str = field(default="exponential", init=False)

    def __post_init__(self):
        require_positive(self.g0_value, "g0")
        require_positive(self.eta, "eta")

    def value(self, t):
        return self.g0_value * np.exp(-self.eta * np.asarray(t, dtype=float))

    def derivative(self, t):
        return -self.eta * self.value(t)

    def mass(self, horizon: float) -> float:
        if math.isinf(horizon):
            return self.g0_value / self.eta
        return self.g0_value / self.eta * -math.expm1(-self.eta * horizon)

    def to_dict(self) -> dict:
        return {"type": self.kind, "g0": self.g0_value, "eta": self.eta}


@dataclass(frozen=True)
class PolynomialKernel(RelaxationKernel):
    """g(t) = c0·(1+t)^{-q}"""

    c0: float
    q: float
    kind: str = field(default="polynomial", init=False)

    def __post_init__(self):
        require_positive(self.c0, "c0")
        require_positive(self.q, "q")

    def value(self, t):
        return self.c0 * (1.0 + np.asarray(t, dtype=float)) ** (-self.q)

    def derivative(self, t):
        return -self.q * self.c0 * (1.0 + np.asarray(t, dtype=float)) ** (-self.q - 1.0)

    def mass(self, horizon: float) -> float:
        if math.isinf(horizon):
            if self.q <= 1.0:
                raise InvalidKernelError(f"q={self.q} ≤ 1 时 ∫₀^∞ g 发散")
            return self.c0 / (self.q - 1.0)
        if self.q == 1.0:
            return self.c0 * math.log1p(horizon)
        return self.c0 / (self.q - 1.0) * (1.0 - (1.0 + horizon) ** (1.0 - self.q))

    @property
    def tail_exponent(self) -> float:
        return self.q

    def to_dict(self) -> dict:
        return {"type": self.kind, "c0": self.c0, "q": self.q}


class _GeneratedKernel(RelaxationKernel):
    """
    由 g' = -ξ·g^r、g(0) = scale 生成的核

    r > 1: g(t) = [scale^{1-r} + (r-1)·∫₀^t ξ]^{-1/(r-1)}
    r = 1: g(t) = scale·e^{-∫₀^t ξ}
    """

    r: float
    scale: float

    @property
    @abstractmethod
    def xi(self) -> XiFunction:
        """生成核的 ξ"""

    def value(self, t):
        t_arr = np.asarray(t, dtype=float)
        big_xi = self.xi.integral(0.0, t_arr)
        if self.r == 1.0:
            return self.scale * np.exp(-np.asarray(big_xi))
        base = self.scale ** (1.0 - self.r) + (self.r - 1.0) * np.asarray(big_xi)
        return base ** (-1.0 / (self.r - 1.0))

    def derivative(self, t):
        t_arr = np.asarray(t, dtype=float)
        return -self.xi.value(t_arr) * self.value(t_arr) ** self.r

    def mass(self, horizon: float) -> float:
        if math.isinf(horizon) and self.tail_exponent <= 1.0:
            raise InvalidKernelError(
                f"尾部指数 {self.tail_exponent:.4g} ≤ 1，∫₀^∞ g 发散"
            )
        value, _ = integrate.quad(
            lambda s: float(self.value(np.asarray(s))), 0.0, horizon, limit=200
        )
        return value


@dataclass(frozen=True)
class PowerXiKernel(_GeneratedKernel):
    """ξ(t) = (1+t)^{-m} 生成的核，r=4/3、m=0.2 时 g ≍ (1+t)^{-2.4}"""

    r: float
    m: float
    scale: float
    kind: str = field(default="power_xi", init=False)

    def __post_init__(self):
        validate_exponent_r(self.r, allow_one=True)
        require_open_interval(self.m, 0.0, 1.0, "m")
        require_positive(self.scale, "scale")

    @property
    def xi(self) -> XiFunction:
        return PowerLawXi(self.m)

    @property
    def tail_exponent(self) -> float:
        if self.r == 1.0:
            return math.inf
        return (1.0 - self.m) / (self.r - 1.0)

    def to_dict(self) -> dict:
        return {"type": self.kind, "r": self.r, "m": self.m, "scale": self.scale}


@dataclass(frozen=True)
class LogMixedKernel(_GeneratedKernel):
    """对数混合衰减核，大时间行为 ∝ [(t+1)^{2(r-1)} + ln(t+1)]^{-1/(r-1)}"""

    r: float
    scale: float
    kind: str = field(default="logmixed", init=False)

    def __post_init__(self):
        validate_exponent_r(self.r, allow_one=False)
        require_positive(self.scale, "scale")

    @property
    def xi(self) -> XiFunction:
        return LogMixedXi(self.r)

    @property
    def tail_exponent(self) -> float:
        return 2.0

    def to_dict(self) -> dict:
        return {"type": self.kind, "r": self.r, "scale": self.scale}


@dataclass(frozen=True, eq=False)
class TabulatedKernel(RelaxationKernel):
    """
    采样表核

    times 从 0 开始严格递增，values 非负；求值用分段线性插值，
    导数取所在区间的前向差分（最后一个采样点取最后一段的斜率）。
    """

    times: np.ndarray
    values: np.ndarray
    kind: str = field(default="tabulated", init=False)

    def __post_init__(self):
        times = np.asarray(self.times, dtype=float)
        values = np.asarray(self.values, dtype=float)
        if times.ndim != 1 or times.shape != values.shape or times.size < 2:
            raise InvalidParameterError("表格核需要至少两个 (time, value) 采样点")
        if times[0] != 0.0:
            raise InvalidParameterError(f"表格核的采样时间必须从 0 开始，实际为 {times[0]}")
        if np.any(np.diff(times) <= 0):
            raise InvalidParameterError("表格核的采样时间必须严格递增")
        if np.any(values < 0) or not np.all(np.isfinite(values)):
            raise InvalidParameterError("表格核的采样值必须是非负有限值")
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "values", values)

    @property
    def is_analytic(self) -> bool:
        return False

    @property
    def t_max(self) -> float:
        return float(self.times[-1])

    def _check_range(self, t: np.ndarray) -> None:
        if np.any(t > self.t_max):
            raise KernelRangeError(float(np.max(t)), self.t_max)

    def value(self, t):
        t_arr = np.asarray(t, dtype=float)
        self._check_range(t_arr)
        return np.interp(t_arr, self.times, self.values)

    def derivative(self, t):
        t_arr = np.asarray(t, dtype=float)
        self._check_range(t_arr)
        slopes = np.diff(self.values) / np.diff(self.times)
        index = np.searchsorted(self.times, t_arr, side="right") - 1
        index = np.clip(index, 0, slopes.size - 1)
        return slopes[index]

    def mass(self, horizon: float) -> float:
        if math.isinf(horizon):
            raise UnsupportedOperationError("表格核不支持无穷时间上限的质量计算")
        if horizon < 0:
            raise InvalidParameterError(f"horizon={horizon} 必须 ≥ 0")
        self._check_range(np.asarray(horizon))
        inside = self.times < horizon
        grid_t = np.append(self.times[inside], horizon)
        return float(integrate.trapezoid(np.interp(grid_t, self.times, self.values), grid_t))

    def total_mass(self) -> float:
        return self.mass(self.t_max)

    def to_dict(self) -> dict:
        return {"type": self.kind, "samples": int(self.times.size), "t_max": self.t_max}


@dataclass(frozen=True)
class ZeroKernel(RelaxationKernel):
    """g ≡ 0（无记忆项）"""

    kind: str = field(default="zero", init=False)

    @property
    def is_zero(self) -> bool:
        return True

    def value(self, t):
        return np.zeros_like(np.asarray(t, dtype=float))

    def derivative(self, t):
        return np.zeros_like(np.asarray(t, dtype=float))

    def mass(self, horizon: float) -> float:
        return 0.0


def create_kernel(kind: str, **params) -> RelaxationKernel:
    """
    按类型名创建松弛核

    Args:
        kind: exponential / polynomial / logmixed / power_xi / tabulated / zero
        **params: 对应参数（g0, eta, c0, q, r, m, scale, times, values）

    Returns:
        RelaxationKernel 实例

    Raises:
        InvalidParameterError: 未知类型或参数越界
    """
    kind = kind.lower()
    if kind == "exponential":
        return ExponentialKernel(params["g0"], params["eta"])
    if kind == "polynomial":
        return PolynomialKernel(params["c0"], params["q"])
    if kind == "logmixed":
        return LogMixedKernel(params["r"], params["scale"])
    if kind == "power_xi":
        return PowerXiKernel(params["r"], params["m"], params["scale"])
    if kind == "tabulated":
        return TabulatedKernel(np.asarray(params["times"]), np.asarray(params["values"]))
    if kind == "zero":
        return ZeroKernel()
    raise InvalidParameterError(f"未知的核类型: {kind}")


# ==================== 对外操作 ====================


def eval_kernel(k: RelaxationKernel, t: ArrayLike) -> Union[float, np.ndarray]:
    """
    计算 g(t)

    Raises:
        InvalidParameterError: t < 0
        KernelRangeError: 超出表格核采样范围

    Examples:
        >>> eval_kernel(ExponentialKernel(0.4, 1.0), 0.0)
        0.4
    """
    t_arr = _as_times(t)
    return _unwrap(np.asarray(k.value(t_arr), dtype=float), t)


def eval_kernel_derivative(k: RelaxationKernel, t: ArrayLike) -> Union[float, np.ndarray]:
    """计算 g'(t)，错误同 eval_kernel"""
    t_arr = _as_times(t)
    return _unwrap(np.asarray(k.derivative(t_arr), dtype=float), t)


def kernel_mass(k: RelaxationKernel, horizon: float = math.inf) -> float:
    """
    计算 ∫₀^horizon g(s) ds

    Raises:
        UnsupportedOperationError: 表格核 + 无穷上限
        InvalidKernelError: 积分发散
    """
    if horizon < 0:
        raise InvalidParameterError(f"horizon={horizon} 必须 ≥ 0")
    return float(k.mass(horizon))


def kernel_complement(k: RelaxationKernel) -> float:
    """
    剩余刚度 l = 1 - ∫₀^∞ g

    表格核用采样范围内的质量（假定表格覆盖核的支撑）。
    """
    if not k.is_analytic:
        logger.warning("表格核的 l 按采样范围 [0, %.4g] 内的质量计算", k.total_mass())
    return 1.0 - k.total_mass()


def xi_for_kernel(k: RelaxationKernel) -> Tuple[float, XiFunction]:
    """
    返回使 g' = -ξ·g^r 成为恒等式的标准 (r, ξ)

    Returns:
        (r, ξ)

    Raises:
        UnsupportedOperationError: 表格核或零核
        InvalidKernelError: 多项式核 q ≤ 2（r ≥ 3/2）

    Examples:
        >>> xi_for_kernel(ExponentialKernel(0.4, 1.0))[0]
        1.0
    """
    if isinstance(k, ExponentialKernel):
        return 1.0, ConstantXi(k.eta)
    if isinstance(k, PolynomialKernel):
        if k.q <= 2.0:
            raise InvalidKernelError(
                f"q={k.q} 给出 r=(q+1)/q ≥ 3/2，不满足 (G2) 的 1 ≤ r < 3/2"
            )
        return (k.q + 1.0) / k.q, ConstantXi(k.q * k.c0 ** (-1.0 / k.q))
    if isinstance(k, _GeneratedKernel):
        return k.r, k.xi
    raise UnsupportedOperationError(f"{k.kind} 核没有解析的 (r, ξ)")


# ==================== 假设检查 ====================


@dataclass
class G1Report:
    """(G1) 检查结果"""

    passed: bool
    g0_positive: bool
    monotone: bool
    l: float                                            # 1 - ∫₀^∞ g
    violations: List[Tuple[float, str]] = field(default_factory=list)  # (t, 原因)

    def to_dict(self) -> dict:
        return {
            "passed": self.passed,
            "g0_positive": self.g0_positive,
            "monotone": self.monotone,
            "l": self.l,
            "violations": [{"t": t, "reason": reason} for t, reason in self.violations],
        }


@dataclass
class G2Report:
    """(G2) 检查结果"""

    r: float
    passed: bool
    inequality_ok: bool                 # g' + ξ g^r ≤ tol
    xi_nonincreasing: bool              # ξ' ≤ 0
    xi_ratio_ok: bool                   # |ξ'/ξ| ≤ L
    xi_integral_diverges: bool          # ∫₀^∞ ξ = ∞（解析）
    mass_power_finite: bool             # ∫ g^{2-r} < ∞（解析）
    c_r_bounded: bool                   # t/(1+∫ξ)^{1/(2(r-1))} 有界（解析）
    c_r_grid_max: float                 # 上式在网格上的最大值，r=1 时为 0
    max_residual: float                 # max(g' + ξ g^r)
    max_violation: float                # 超出容差的最大量，通过时为 0

    def to_dict(self) -> dict:
        return dict(self.__dict__)


def _tolerance(scale: np.ndarray) -> np.ndarray:
    return ABS_TOL + REL_TOL * np.abs(scale)


def verify_G1(k: RelaxationKernel, grid: ArrayLike) -> G1Report:
    """
    检查 (G1): g(0) > 0、g 在网格上不增、l = 1 - ∫g > 0

    不抛异常，失败信息记录在报告中。
    """
    times = np.sort(_as_times(np.atleast_1d(grid)))
    if times.size == 0:
        raise PreconditionError("verify_G1 需要非空的时间网格")

    violations: List[Tuple[float, str]] = []
    g0 = float(k.value(np.zeros(1))[0])
    g0_positive = g0 > 0
    if not g0_positive:
        violations.append((0.0, f"g(0)={g0} 不为正"))

    values = np.asarray(k.value(times), dtype=float)
    negative = np.nonzero(values < 0)[0]
    for i in negative:
        violations.append((float(times[i]), f"g={values[i]:.6g} < 0"))

    increase = np.diff(values) - _tolerance(values[:-1])
    bad = np.nonzero(increase > 0)[0]
    monotone = bad.size == 0 and negative.size == 0
    for i in bad:
        violations.append((float(times[i + 1]), f"g 从 {values[i]:.6g} 增加到 {values[i + 1]:.6g}"))

    try:
        l_value = 1.0 - k.total_mass()
    except InvalidKernelError:
        l_value = -math.inf
    if not l_value > 0:
        violations.append((math.inf, f"l={l_value:.6g} 不为正"))

    return G1Report(
        passed=g0_positive and monotone and l_value > 0,
        g0_positive=g0_positive,
        monotone=monotone,
        l=l_value,
        violations=violations,
    )


def verify_G2(k: RelaxationKernel, r: float, xi: XiFunction, grid: ArrayLike) -> G2Report:
    """
    检查 (G2): g' ≤ -ξ g^r，ξ' ≤ 0，|ξ'/ξ| ≤ L，∫ g^{2-r} < ∞，
    以及 r > 1 时 t/(1+∫₀^t ξ)^{1/(2(r-1))} 的有界性

    Raises:
        PreconditionError: r 不在 [1, 3/2)
    """
    if not (1.0 <= r < 1.5):
        raise PreconditionError(f"r={r} 不在 [1, 3/2) 内")

    times = np.sort(_as_times(np.atleast_1d(grid)))
    g = np.asarray(k.value(times), dtype=float)
    dg = np.asarray(k.derivative(times), dtype=float)
    xi_values = np.asarray(xi.value(times), dtype=float)
    xi_prime = np.asarray(xi.derivative(times), dtype=float)

    forcing = xi_values * np.maximum(g, 0.0) ** r
    residual = dg + forcing
    slack = residual - _tolerance(np.abs(dg) + forcing)
    max_violation = float(max(0.0, np.max(slack)))
    inequality_ok = max_violation == 0.0

    xi_nonincreasing = bool(np.all(xi_prime <= _tolerance(xi_prime)))
    ratio = np.abs(xi_prime) / xi_values
    xi_ratio_ok = bool(np.all(xi_values > 0) and np.all(ratio <= xi.bound_L + _tolerance(ratio)))

    tail = k.tail_exponent
    mass_power_finite = math.isinf(tail) or tail * (2.0 - r) > 1.0

    if r > 1.0:
        c_r_bounded = xi.c_r_bounded(r)
        growth = times / (1.0 + np.asarray(xi.integral(0.0, times))) ** (1.0 / (2.0 * (r - 1.0)))
        c_r_grid_max = float(np.max(growth))
    else:
        c_r_bounded = True
        c_r_grid_max = 0.0

    passed = (
        inequality_ok and xi_nonincreasing and xi_ratio_ok
        and xi.integral_diverges and mass_power_finite and c_r_bounded
    )
    return G2Report(
        r=r,
        passed=passed,
        inequality_ok=inequality_ok,
        xi_nonincreasing=xi_nonincreasing,
        xi_ratio_ok=xi_ratio_ok,
        xi_integral_diverges=xi.integral_diverges,
        mass_power_finite=mass_power_finite,
        c_r_bounded=c_r_bounded,
        c_r_grid_max=c_r_grid_max,
        max_residual=float(np.max(residual)),
        max_violation=max_violation,
    )


def mass_condition_threshold(p: float, delta: float) -> float:
    """
    核质量条件的右端 (p-2)/(p-2 + 1/[(1-δ̂)²p + 2δ̂(1-δ̂)])，δ̂ = max{0, δ}

    Examples:
        >>> round(mass_condition_threshold(2.5, 0.5), 6)
        0.36
    """
    validate_source_exponent(p)
    validate_delta(delta)
    delta_hat = max(0.0, delta)
    denom = (1.0 - delta_hat) ** 2 * p + 2.0 * delta_hat * (1.0 - delta_hat)
    return (p - 2.0) / (p - 2.0 + 1.0 / denom)


def check_mass_condition(k: RelaxationKernel, p: float, delta: float) -> bool:
    """
    检查 ∫₀^∞ g ≤ mass_condition_threshold(p, δ)

    Raises:
        InvalidParameterError: p 或 δ 越界
        InvalidKernelError: 质量发散
    """
    threshold = mass_condition_threshold(p, delta)
    return k.total_mass() <= threshold
