# coding=utf-8
"""
加权空间模块

(0, ℓ) 上权函数为 x 的 L^p_x 范数、内积、导数、Bessel 算子，
以及 Poincaré 常数 C_p 与嵌入常数 C_* 的数值变分估计。

离散约定（均匀节点 x_i = i·h，i = 0..n）：
- 节点权重采用对偶单元矩：w_0 = h²/8，w_i = x_i·h，w_n = ℓh/2 - h²/8，Σw = ℓ²/2
- 梯度取单元中点（面）值，∫ x u_x v_x 用面中点公式（dirichlet_form）
- bessel_operator 是 -½·dirichlet_form 关于 w 加权内积的梯度，能量恒等式在半离散层面精确成立
"""

import logging
import math
from dataclasses import dataclass
from functools import cached_property
from typing import Optional, Tuple

import numpy as np
from scipy import linalg, optimize

from viscowell.core.errors import GridMismatchError, InvalidParameterError, NumericError
from viscowell.core.validators import validate_source_exponent

logger = logging.getLogger(__name__)

DEFAULT_CSTAR_STARTS = 16
DEFAULT_SEED = 20240601
CSTAR_MODES = 8


@dataclass(frozen=True)
class Grid:
    """
    (0, ℓ) 上的均匀网格

    求积权重为对偶单元规则：w0 = h²/8，wi = xi·h，wn = ℓh/2 - h²/8。
    内部与梯形规则相同，两端取半单元上 x 的精确矩，Σw = ℓ²/2。
    梯形规则给出 w0 = 0，原点的值不进入约束 ∫x u = 0，
    均匀乘子投影在 x = 0 处无法闭合。

    Attributes:
        ell: 区间长度 ℓ > 0
        n: 单元数（节点数 n+1），n ≥ 8
    """

    ell: float
    n: int

    def __post_init__(self):
        if not self.ell > 0:
            raise InvalidParameterError(f"ell={self.ell} 必须大于 0")
        if int(self.n) != self.n or self.n < 8:
            raise InvalidParameterError(f"n={self.n} 必须是 ≥ 8 的整数")
        object.__setattr__(self, "n", int(self.n))
        object.__setattr__(self, "ell", float(self.ell))

    @property
    def h(self) -> float:
        return self.ell / self.n

    @property
    def size(self) -> int:
        """节点个数 n+1"""
        return self.n + 1

    @cached_property
    def nodes(self) -> np.ndarray:
        x = np.arange(self.n + 1, dtype=float) * self.h
        x[-1] = self.ell
        x.setflags(write=False)
        return x

    @cached_property
    def faces(self) -> np.ndarray:
        """单元中点 x_{i+1/2}"""
        f = (np.arange(self.n, dtype=float) + 0.5) * self.h
        f.setflags(write=False)
        return f

    @cached_property
    def weights(self) -> np.ndarray:
        """∫₀^ℓ x·f dx 的节点求积权重"""
        h = self.h
        w = self.nodes * h
        w[0] = h * h / 8.0
        w[-1] = self.ell * h / 2.0 - h * h / 8.0
        w.setflags(write=False)
        return w

    @cached_property
    def free_correction(self) -> np.ndarray:
        """约束乘子的方向：非 Dirichlet 节点为 1，x=ℓ 处为 0"""
        c = np.ones(self.n + 1)
        c[-1] = 0.0
        c.setflags(write=False)
        return c

    def to_dict(self) -> dict:
        return {"ell": self.ell, "n": self.n, "h": self.h}


def check_field(grid: Grid, u) -> np.ndarray:
    """转换为浮点数组并检查长度与网格一致"""
    arr = np.asarray(u, dtype=float)
    if arr.ndim != 1 or arr.size != grid.size:
        raise GridMismatchError(grid.size, arr.size if arr.ndim == 1 else -1)
    return arr


def weighted_integral(grid: Grid, f) -> float:
    """∫₀^ℓ x·f dx"""
    return float(grid.weights @ check_field(grid, f))


def weighted_norm_p(grid: Grid, u, p: float) -> float:
    """
    加权范数 ‖u‖_p = (∫₀^ℓ x|u|^p dx)^{1/p}

    Examples:
        u ≡ 1，ℓ = 1，p = 2 → √(1/2)
    """
    if not p >= 1:
        raise InvalidParameterError(f"p={p} 必须 ≥ 1")
    u = check_field(grid, u)
    return float(grid.weights @ np.abs(u) ** p) ** (1.0 / p)


def weighted_power(grid: Grid, u, p: float) -> float:
    """∫₀^ℓ x|u|^p dx"""
    u = check_field(grid, u)
    return float(grid.weights @ np.abs(u) ** p)


def weighted_inner(grid: Grid, u, v) -> float:
    """H 内积 ∫₀^ℓ x·u·v dx"""
    return float(grid.weights @ (check_field(grid, u) * check_field(grid, v)))


def face_gradients(grid: Grid, u) -> np.ndarray:
    """单元中点处的梯度 (u_{i+1} - u_i)/h，长度 n"""
    return np.diff(check_field(grid, u)) / grid.h


def dirichlet_form(grid: Grid, u, v=None) -> float:
    """
    ∫₀^ℓ x·u_x·v_x dx 的面中点公式；v 省略时为 ‖u_x‖_H²

    对分段线性插值函数是精确的。
    """
    gu = face_gradients(grid, u)
    gv = gu if v is None else face_gradients(grid, v)
    return float(np.sum(grid.faces * gu * gv) * grid.h)


def derivative(grid: Grid, u) -> np.ndarray:
    """
    节点导数：内部中心差分，端点二阶单侧差分

    对仿射场精确，内部节点二阶精度。
    """
    u = check_field(grid, u)
    return np.gradient(u, grid.h, edge_order=2)


def bessel_operator(grid: Grid, u) -> np.ndarray:
    """
    Bessel 算子 (1/x)(x u_x)_x 的守恒通量离散

    内部节点: [x_{i+1/2}(u_{i+1}-u_i) - x_{i-1/2}(u_i-u_{i-1})]/(x_i h²)
    x = 0: 半单元通量除以其 x 矩，4(u_1-u_0)/h²，对 x² 精确
    x = ℓ: 0（Dirichlet 节点不参与更新）
    """
    u = check_field(grid, u)
    h = grid.h
    flux = grid.faces * np.diff(u) / h
    out = np.empty_like(u)
    out[1:-1] = (flux[1:] - flux[:-1]) / (grid.nodes[1:-1] * h)
    out[0] = 4.0 * (u[1] - u[0]) / (h * h)
    out[-1] = 0.0
    return out


def project_mean_zero(grid: Grid, u, correction=None) -> np.ndarray:
    """
    减去修正场的倍数，使 ∫₀^ℓ x·u dx = 0

    Args:
        grid: 网格
        u: 场
        correction: 修正场 φ（须在 x=ℓ 处为 0），默认 φ(x) = ℓ - x

    Returns:
        u - c·φ，c = ∫x u / ∫x φ；已满足约束的场原样返回（副本）
    """
    u = check_field(grid, u)
    phi = grid.ell - grid.nodes if correction is None else check_field(grid, correction)
    mean = float(grid.weights @ u)
    scale = float(grid.weights @ np.abs(u))
    if mean == 0.0 or abs(mean) <= 1e-16 * scale:
        return u.copy()
    return u - (mean / float(grid.weights @ phi)) * phi


def constraint_residual(grid: Grid, u) -> float:
    """|∫₀^ℓ x·u dx|"""
    return abs(weighted_integral(grid, u))


# ==================== Poincaré 常数 ====================


def _stiffness_bands(grid: Grid) -> Tuple[np.ndarray, np.ndarray]:
    """
    dirichlet_form 在自由节点 0..n-1 上的三对角刚度矩阵（u_n = 0）

    Returns:
        (主对角, 上对角)
    """
    h = grid.h
    faces = grid.faces
    diag = np.empty(grid.n)
    diag[0] = faces[0] / h
    diag[1:] = (faces[:-1] + faces[1:]) / h
    upper = -faces[:-1] / h
    return diag, upper


def _stiffness_apply(grid: Grid, z: np.ndarray) -> np.ndarray:
    """K·z（z 为自由节点上的向量）"""
    diag, upper = _stiffness_bands(grid)
    out = diag * z
    out[:-1] += upper * z[1:]
    out[1:] += upper * z[:-1]
    return out


def poincare_ground_state(grid: Grid, max_iter: int = 500, tol: float = 1e-13) -> Tuple[float, np.ndarray]:
    """
    离散 Poincaré 常数 sup{‖v‖_H² / ‖v_x‖_H²: v ∈ V₀} 及其极值场

    对缩放矩阵 S = M^{-1/2} K M^{-1/2} 做逆迭代，M = diag(w)；
    带状求解使用 scipy.linalg.solveh_banded。

    Returns:
        (C_p, 极值场)，极值场在 x=ℓ 处为 0，且 ‖v‖_H = 1、v(0) > 0

    Raises:
        NumericError: 迭代不收敛
    """
    diag, upper = _stiffness_bands(grid)
    mass_sqrt = np.sqrt(grid.weights[:-1])
    s_diag = diag / mass_sqrt ** 2
    s_upper = upper / (mass_sqrt[:-1] * mass_sqrt[1:])
    bands = np.zeros((2, grid.n))
    bands[0, 1:] = s_upper
    bands[1, :] = s_diag

    y = mass_sqrt * (grid.ell - grid.nodes[:-1])
    y /= np.linalg.norm(y)
    eigenvalue = math.inf
    for iteration in range(1, max_iter + 1):
        z = linalg.solveh_banded(bands, y)
        z /= np.linalg.norm(z)
        sz = s_diag * z
        sz[:-1] += s_upper * z[1:]
        sz[1:] += s_upper * z[:-1]
        new_value = float(z @ sz)
        residual = float(np.linalg.norm(sz - new_value * z))
        y = z
        converged = abs(new_value - eigenvalue) <= tol * new_value and residual <= 1e-8 * new_value
        eigenvalue = new_value
        if converged:
            logger.debug("逆迭代在第 %d 步收敛，λ_min=%.12g", iteration, eigenvalue)
            break
    else:
        raise NumericError(f"Poincaré 常数的逆迭代在 {max_iter} 步内未收敛")

    v = np.zeros(grid.size)
    v[:-1] = y / mass_sqrt
    v /= math.sqrt(weighted_inner(grid, v, v))
    if v[0] < 0:
        v = -v
    return 1.0 / eigenvalue, v


def estimate_Cp(grid: Grid) -> float:
    """
    估计 Poincaré 常数 C_p，网格加密时收敛到 ℓ²/j₀₁²

    Raises:
        NumericError: 迭代不收敛
    """
    cp, _ = poincare_ground_state(grid)
    logger.info("C_p 估计值 %.8g (ℓ=%g, n=%d)", cp, grid.ell, grid.n)
    return cp


# ==================== 嵌入常数 ====================


def embedding_ratio(grid: Grid, v, p: float) -> float:
    """
    ∫ x|v|^p / ‖v_x‖_H^p

    Raises:
        InvalidParameterError: v 的梯度为 0
    """
    energy = dirichlet_form(grid, v)
    if not energy > 0:
        raise InvalidParameterError("嵌入比值要求 v_x 不恒为 0")
    return weighted_power(grid, v, p) / energy ** (p / 2.0)


def _log_ratio_objective(grid: Grid, p: float):
    """返回 -log(嵌入比值) 及其梯度，变量为自由节点值"""
    w = grid.weights[:-1]

    def objective(z: np.ndarray) -> Tuple[float, np.ndarray]:
        abs_z = np.abs(z)
        power = float(w @ abs_z ** p)
        kz = _stiffness_apply(grid, z)
        energy = float(z @ kz)
        if not (power > 0 and energy > 0):
            return math.inf, np.zeros_like(z)
        value = -(math.log(power) - 0.5 * p * math.log(energy))
        grad = -(p * w * abs_z ** (p - 1.0) * np.sign(z) / power - p * kz / energy)
        return value, grad

    return objective


def _cstar_starts(grid: Grid, count: int, seed: int):
    """多起点：Poincaré 基态、ℓ - x、前若干个 cos((k+½)πx/ℓ) 模态的随机组合"""
    x = grid.nodes[:-1]
    _, ground = poincare_ground_state(grid)
    starts = [ground[:-1], grid.ell - x]
    modes = np.array([np.cos((k + 0.5) * math.pi * x / grid.ell) for k in range(CSTAR_MODES)])
    rng = np.random.default_rng(seed)
    while len(starts) < count:
        coefficients = rng.normal(size=CSTAR_MODES) / (1.0 + np.arange(CSTAR_MODES))
        starts.append(coefficients @ modes)
    return starts[:count]


def embedding_extremal(
    grid: Grid,
    p: float,
    starts: int = DEFAULT_CSTAR_STARTS,
    seed: int = DEFAULT_SEED,
    max_iter: int = 2000,
) -> Tuple[float, np.ndarray]:
    """
    数值估计嵌入常数 C_* = sup{∫x|v|^p / ‖v_x‖_H^p : v ∈ V₀ \\ {0}}

    对比值取对数后用 L-BFGS-B 做多起点上升（目标对尺度不变），
    返回所有起点与结果中的最大比值，因此不小于任一起点的比值。

    Args:
        grid: 网格
        p: 指数，2 < p < 4
        starts: 起点个数
        seed: 随机起点的种子
        max_iter: 每个起点的最大迭代次数

    Returns:
        (C_*, 极值场)，极值场在 x=ℓ 处为 0，‖v_x‖_H = 1

    Raises:
        InvalidParameterError: p 越界
        NumericError: 所有起点都失败
    """
    validate_source_exponent(p, upper=4.0)
    objective = _log_ratio_objective(grid, p)

    best_value = -math.inf
    best_field: Optional[np.ndarray] = None
    for index, z0 in enumerate(_cstar_starts(grid, starts, seed)):
        z0 = z0 / math.sqrt(float(z0 @ _stiffness_apply(grid, z0)))
        candidates = [z0]
        start_value, _ = objective(z0)
        if not math.isfinite(start_value):
            continue
        result = optimize.minimize(
            objective, z0, jac=True, method="L-BFGS-B",
            options={"maxiter": max_iter, "ftol": 1e-15, "gtol": 1e-10},
        )
        if not result.success:
            logger.warning("C_* 第 %d 个起点未收敛: %s", index, result.message)
        if np.all(np.isfinite(result.x)) and math.isfinite(result.fun):
            candidates.append(result.x)
        for z in candidates:
            value, _ = objective(z)
            if math.isfinite(value) and -value > best_value:
                best_value = -value
                best_field = z

    if best_field is None:
        raise NumericError("C_* 多起点上升全部失败")

    v = np.zeros(grid.size)
    v[:-1] = best_field
    v /= math.sqrt(dirichlet_form(grid, v))
    if weighted_integral(grid, v) < 0:
        v = -v
    return math.exp(best_value), v


def estimate_Cstar(grid: Grid, p: float, starts: int = DEFAULT_CSTAR_STARTS, seed: int = DEFAULT_SEED) -> float:
    """
    估计嵌入常数 C_*，见 embedding_extremal

    离散上确界随网格加密以 O(h²) 收敛，不保证单调
    （n = 256 到 512 时相对下降约 1e-5，在离散化误差之内）。
    """
    cstar, _ = embedding_extremal(grid, p, starts=starts, seed=seed)
    logger.info("C_* 估计值 %.8g (ℓ=%g, n=%d, p=%g)", cstar, grid.ell, grid.n, p)
    return cstar
