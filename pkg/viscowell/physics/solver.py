# coding=utf-8
"""
时间推进模块

半离散方程
    u_tt = B u - ∫₀^t g(t-s) B u(s) ds - a u_t + |u|^{p-2}u
的显式二阶推进，B 为 Bessel 算子。x = ℓ 处 u = 0，
非局部约束 ∫ x u dx = 0 以均匀拉格朗日乘子施加在所有非 Dirichlet 节点上
（每个加速度都做 project_mean_zero 投影，乘子不做功）。

推进格式为速度 Verlet（踢-漂-踢），阻尼半隐式处理：
    v½ = (v + dt/2·F) / (1 + a·dt/2)
    u' = u + dt·v½
    v' = (1 - a·dt/2)·v½ + dt/2·F'
"""

import logging
import math
from dataclasses import dataclass
from typing import List, Optional

import numpy as np

from viscowell.core.errors import (
    HistoryError,
    InvalidParameterError,
    KernelRangeError,
    NumericInstabilityError,
    PreconditionError,
)
from viscowell.core.loader import MAX_CFL
from viscowell.physics.energetics import record_from_history
from viscowell.physics.kernels import RelaxationKernel
from viscowell.physics.models import (
    MemoryHistory,
    ProblemParams,
    SimState,
    Snapshot,
    TERMINATION_BLOWUP,
    TERMINATION_INSTABILITY,
    Trajectory,
)
from viscowell.physics.weighted_space import (
    Grid,
    bessel_operator,
    check_field,
    constraint_residual,
    face_gradients,
    project_mean_zero,
    weighted_inner,
)

logger = logging.getLogger(__name__)

DEFAULT_CFL = 0.5
DEFAULT_THRESHOLD_RATIO = 1e8
CERTIFY_TOLERANCE = 0.05
HISTORY_TOL = 1e-9


# ==================== 初值 ====================


def make_initial_data(grid: Grid, family: str = "quadratic", amplitude: float = 1.0,
                      velocity_scale: float = 0.0, custom: Optional[np.ndarray] = None):
    """
    构造初值 (u0, u1)

    quadratic: u0 = A·(ℓ-x)(x-ℓ/2)，u1 = μ·u0
    smooth:    u0 = A·(ℓ²-x²)(x²-ℓ²/3)，u1 = μ·u0（关于 x 为偶函数，x=0 处斜率为 0）
    custom:    u0 = A·custom（x=ℓ 处置 0），u1 = μ·u0

    各族都经 project_mean_zero 投影，离散约束精确到舍入误差。
    quadratic 在 x=0 处斜率为 3ℓ/2，B u0 在原点处为 O(1/h)，
    时间步长的二阶收敛要在 dt ≤ h/8 左右才显现；收敛阶研究使用 smooth。

    Raises:
        InvalidParameterError: 未知 family 或 custom 缺失
    """
    x = grid.nodes
    if family == "quadratic":
        shape = (grid.ell - x) * (x - grid.ell / 2.0)
    elif family == "smooth":
        shape = (grid.ell ** 2 - x ** 2) * (x ** 2 - grid.ell ** 2 / 3.0)
    elif family == "custom":
        if custom is None:
            raise InvalidParameterError("family=custom 需要提供自定义场")
        shape = check_field(grid, custom).copy()
        if shape[-1] != 0.0:
            logger.warning("自定义初值在 x=ℓ 处为 %.3g，已置为 0", shape[-1])
            shape[-1] = 0.0
    else:
        raise InvalidParameterError(f"未知的初值族: {family}")

    u0 = project_mean_zero(grid, amplitude * shape)
    u1 = velocity_scale * u0
    return u0, u1


# ==================== 记忆项 ====================


def direct_memory(times: np.ndarray, images: np.ndarray, kernel: RelaxationKernel, t: float) -> np.ndarray:
    """
    记忆项的直接梯形求积 Σ_j ω_j g(t - s_j) B_j（非均匀时间节点）

    Args:
        times: 历史时间 s_0 < ... < s_k
        images: 对应的 Bessel 像，形状 (k+1, n+1)
        kernel: 松弛核
        t: 当前时刻
    """
    times = np.asarray(times, dtype=float)
    images = np.asarray(images, dtype=float)
    if times.size < 2:
        return np.zeros(images.shape[1])
    steps = np.diff(times)
    weights = np.zeros(times.size)
    weights[:-1] += 0.5 * steps
    weights[1:] += 0.5 * steps
    lags = np.maximum(t - times, 0.0)
    return (weights * kernel.value(lags)) @ images


def memory_term(state: SimState, kernel: RelaxationKernel, t: float, dt: Optional[float] = None) -> np.ndarray:
    """
    记忆项 ∫₀^t g(t-s) B u(s) ds

    指数核使用递推累加器（与直接求积代数等价），其他核直接求积，零核为 0。

    Raises:
        HistoryError: 历史不覆盖 [0, t] 或相邻时间间隔超过 dt
    """
    size = state.u.size
    if kernel.is_zero:
        return np.zeros(size)

    history = state.history
    times = history.times
    scale = max(1.0, abs(t))
    if times.size == 0 or abs(times[0]) > HISTORY_TOL * scale:
        raise HistoryError("记忆项历史不从 t=0 开始")
    if abs(times[-1] - t) > HISTORY_TOL * scale:
        raise HistoryError(f"记忆项历史末端 {times[-1]} 与 t={t} 不一致")
    if dt is not None and times.size > 1 and np.any(np.diff(times) > abs(dt) * (1.0 + 1e-8)):
        raise HistoryError(f"记忆项历史存在大于 dt={dt} 的间隔")

    if history.recursive:
        return history.memory.copy()
    return direct_memory(times, history.images, kernel, t)


# ==================== 单步推进 ====================


def _acceleration(params: ProblemParams, u: np.ndarray, image: np.ndarray, memory: np.ndarray) -> np.ndarray:
    """F = B u - 记忆项 + 源项，投影到约束切空间"""
    force = image - memory
    if params.source_enabled:
        force = force + np.abs(u) ** (params.p - 2.0) * u
    force[-1] = 0.0
    return project_mean_zero(params.grid, force, params.grid.free_correction)


def _check_dt(params: ProblemParams, dt: float) -> None:
    if dt == 0 or not math.isfinite(dt):
        raise InvalidParameterError(f"dt={dt} 必须是非零有限值")
    if dt < 0 and not params.kernel.is_zero:
        raise InvalidParameterError("只有零核允许反向积分 (dt < 0)")
    if abs(dt) > MAX_CFL * params.grid.h * (1.0 + 1e-12):
        raise InvalidParameterError(
            f"|dt|={abs(dt):.6g} 超过稳定性上限 {MAX_CFL}·h = {MAX_CFL * params.grid.h:.6g}"
        )


def initial_state(params: ProblemParams, u0, u1) -> SimState:
    """
    由初值构造 t = 0 的状态

    Raises:
        GridMismatchError: 长度不匹配
        InvalidParameterError: 初值不满足 u(ℓ) = 0 或加权均值为 0
    """
    grid = params.grid
    u0 = check_field(grid, u0).copy()
    u1 = check_field(grid, u1).copy()
    for name, field_values in (("u0", u0), ("u1", u1)):
        if field_values[-1] != 0.0:
            raise InvalidParameterError(f"{name} 在 x=ℓ 处必须为 0")
        norm = math.sqrt(max(weighted_inner(grid, field_values, field_values), 0.0))
        if constraint_residual(grid, field_values) > 1e-10 * (1.0 + norm) * grid.ell:
            raise InvalidParameterError(
                f"{name} 不满足 ∫x·{name} dx = 0",
                suggestion="请先用 make_initial_data 或 project_mean_zero 处理初值",
            )

    history = MemoryHistory(params.kernel, grid.size)
    image = bessel_operator(grid, u0)
    if not params.kernel.is_zero:
        history.append(0.0, image)
    accel = _acceleration(params, u0, image, np.zeros(grid.size))
    return SimState(t=0.0, u=u0, v=u1, accel=accel, history=history)


def step(state: SimState, params: ProblemParams, dt: float) -> SimState:
    """
    推进一步

    history 只在新状态通过有限性检查后保留新时刻；失败时回滚。

    Raises:
        InvalidParameterError: dt 不满足稳定性条件
        HistoryError: state 不是 history 的最新状态
        NumericInstabilityError: 出现 NaN/Inf
    """
    _check_dt(params, dt)
    grid = params.grid
    a = params.a
    t_new = state.t + dt
    history = state.history
    if not params.kernel.is_zero:
        last = history.last_time
        if last is None or abs(last - state.t) > HISTORY_TOL * max(1.0, abs(state.t)):
            raise HistoryError(f"只能从最新状态推进: state.t={state.t}，历史末端为 {last}")

    with np.errstate(over="ignore", invalid="ignore"):
        half = (state.v + 0.5 * dt * state.accel) / (1.0 + 0.5 * a * dt)
        u_new = state.u + dt * half
        u_new[-1] = 0.0
        u_new = project_mean_zero(grid, u_new, grid.free_correction)
        image = bessel_operator(grid, u_new)
        if not (np.all(np.isfinite(u_new)) and np.all(np.isfinite(image))):
            raise NumericInstabilityError(t_new)

        mark = history.checkpoint()
        if params.kernel.is_zero:
            memory = np.zeros(grid.size)
        else:
            history.append(t_new, image)
            memory = memory_term(state, params.kernel, t_new)
        accel = _acceleration(params, u_new, image, memory)

        v_new = (1.0 - 0.5 * a * dt) * half + 0.5 * dt * accel
        v_new[-1] = 0.0
        v_new = project_mean_zero(grid, v_new, grid.free_correction)

    if not (np.all(np.isfinite(v_new)) and np.all(np.isfinite(accel))):
        history.rollback(mark)
        raise NumericInstabilityError(t_new)
    return SimState(t=t_new, u=u_new, v=v_new, accel=accel, history=history)


# ==================== 整段模拟 ====================


class _Recorder:
    """按记录分辨率保存快照并生成 EnergyRecord"""

    def __init__(self, trajectory: Trajectory):
        self.trajectory = trajectory
        self.params = trajectory.params
        self.times: List[float] = []
        self.gradients: List[np.ndarray] = []

    def record(self, state: SimState) -> None:
        grad = face_gradients(self.params.grid, state.u)
        self.times.append(state.t)
        self.gradients.append(grad)
        record = record_from_history(state, self.params, self.times, self.gradients)
        self.trajectory.records.append(record)
        self.trajectory.snapshots.append(
            Snapshot(t=state.t, u=state.u.copy(), v=state.v.copy(), gradient=grad)
        )


def run(params: ProblemParams, u0, u1, T: float, dt: float, record_every: int = 8,
        threshold_ratio: float = DEFAULT_THRESHOLD_RATIO) -> Trajectory:
    """
    从 (u0, u1) 积分到 min(T, 爆破, 数值失稳)

    每 record_every 步以及终止时刻生成一个 EnergyRecord。
    ‖u‖_H² 首次达到 threshold_ratio·‖u0‖_H² 时以 blowup_detected 终止
    （u0 ≡ 0 时以运行中第一个非零 ‖u‖_H² 为参照）。

    Raises:
        InvalidParameterError: T、dt 或 record_every 不合法
        KernelRangeError: 表格核不覆盖 [0, ceil(T/dt)·dt]
    """
    if not T > 0:
        raise InvalidParameterError(f"T={T} 必须大于 0")
    if not dt > 0:
        raise InvalidParameterError(f"dt={dt} 必须大于 0")
    if record_every < 1:
        raise InvalidParameterError(f"record_every={record_every} 必须 ≥ 1")
    if not threshold_ratio > 1:
        raise PreconditionError(f"threshold_ratio={threshold_ratio} 必须大于 1")
    _check_dt(params, dt)

    grid = params.grid
    n_steps = max(1, int(math.ceil(T / dt - 1e-9)))
    if n_steps * dt > params.kernel.t_max * (1.0 + 1e-12):
        raise KernelRangeError(n_steps * dt, params.kernel.t_max)
    trajectory = Trajectory(params=params, dt=dt, record_every=record_every)
    recorder = _Recorder(trajectory)

    state = initial_state(params, u0, u1)
    recorder.record(state)
    reference = weighted_inner(grid, state.u, state.u)

    logger.info(
        "开始模拟: n=%d, dt=%.4g, T=%.4g, 共 %d 步, 核=%s",
        grid.n, dt, T, n_steps, params.kernel.kind,
    )

    for index in range(1, n_steps + 1):
        try:
            state = step(state, params, dt)
        except NumericInstabilityError as e:
            logger.warning("数值失稳: %s", e.message)
            trajectory.termination = TERMINATION_INSTABILITY
            break

        trajectory.steps = index
        norm = weighted_inner(grid, state.u, state.u)
        if reference == 0.0 and norm > 0.0:
            reference = norm
        crossed = reference > 0.0 and (not math.isfinite(norm) or norm >= threshold_ratio * reference)

        if crossed or index % record_every == 0 or index == n_steps:
            recorder.record(state)
        if crossed:
            trajectory.termination = TERMINATION_BLOWUP
            trajectory.blowup_time = state.t
            break

    trajectory.final_time = state.t
    logger.info(
        "模拟结束: %s, t=%.6g, 记录 %d 个",
        trajectory.termination, trajectory.final_time, len(trajectory.records),
    )
    return trajectory


def detect_blowup(trajectory: Trajectory, threshold_ratio: float = DEFAULT_THRESHOLD_RATIO) -> Optional[float]:
    """
    返回 ‖u‖_H² 首次达到 threshold_ratio·‖u0‖_H² 的记录时刻（非有限值视为越过），否则 None

    Raises:
        PreconditionError: threshold_ratio ≤ 1
    """
    if not threshold_ratio > 1:
        raise PreconditionError(f"threshold_ratio={threshold_ratio} 必须大于 1")
    reference = 0.0
    for record in trajectory.records:
        norm = record.norm_H2
        if not math.isfinite(norm):
            return record.t
        if reference == 0.0:
            reference = norm
            continue
        if norm >= threshold_ratio * reference:
            return record.t
    return None


@dataclass
class BlowupCheck:
    """dt 减半复核结果"""

    certified: bool
    coarse_time: Optional[float]
    refined_time: Optional[float]
    relative_change: Optional[float]

    def to_dict(self) -> dict:
        return dict(self.__dict__)


def certify_blowup(params: ProblemParams, u0, u1, T: float, dt: float, record_every: int = 8,
                   threshold_ratio: float = DEFAULT_THRESHOLD_RATIO,
                   detected_time: Optional[float] = None) -> BlowupCheck:
    """
    以 dt/2 重算，爆破时刻的相对变化小于 5% 才认证

    Args:
        detected_time: 粗网格检测到的爆破时刻；为 None 时先做一次粗网格运行
    """
    if detected_time is None:
        coarse = run(params, u0, u1, T, dt, record_every, threshold_ratio)
        detected_time = coarse.blowup_time if coarse.termination == TERMINATION_BLOWUP else None
    if detected_time is None:
        return BlowupCheck(False, None, None, None)

    refined = run(params, u0, u1, T, 0.5 * dt, 2 * record_every, threshold_ratio)
    if refined.termination != TERMINATION_BLOWUP or refined.blowup_time is None:
        logger.warning("dt/2 复核未检测到爆破（终止原因 %s）", refined.termination)
        return BlowupCheck(False, detected_time, None, None)

    change = abs(refined.blowup_time - detected_time) / detected_time
    certified = change < CERTIFY_TOLERANCE
    logger.info(
        "爆破复核: dt 时刻 %.6g, dt/2 时刻 %.6g, 相对变化 %.3g, 认证=%s",
        detected_time, refined.blowup_time, change, certified,
    )
    return BlowupCheck(certified, detected_time, refined.blowup_time, change)
