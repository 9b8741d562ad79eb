# coding=utf-8
"""
能量泛函模块

计算 I、J、E 与记忆项半范数 (g∘u_x)，并沿轨迹检验能量耗散恒等式
E'(t) = ½(g'∘u_x)(t) - ½g(t)‖u_x‖_H² - a‖u_t‖_H²。

(g∘u_x) 在记录分辨率上计算：对 s 用梯形公式，对 x 用面中点公式。
"""

import logging
from dataclasses import dataclass, field
from typing import List, Optional, Sequence

import numpy as np
from scipy import integrate

from viscowell.core.errors import HistoryError, PreconditionError
from viscowell.physics.kernels import RelaxationKernel, kernel_mass
from viscowell.physics.models import EnergyRecord, ProblemParams, SimState, Trajectory
from viscowell.physics.weighted_space import (
    Grid,
    constraint_residual,
    dirichlet_form,
    weighted_inner,
    weighted_power,
)

logger = logging.getLogger(__name__)

HISTORY_TOL = 1e-9


def _history_sums(grid: Grid, times: Sequence[float], gradients, t: float):
    """
    S_k = ∫ x|u_x(t) - u_x(s_k)|² dx，t 取历史最后一个时刻

    Raises:
        HistoryError: 历史为空、不从 0 开始或末端不等于 t
    """
    times = np.asarray(times, dtype=float)
    if times.size == 0:
        raise HistoryError("梯度历史为空")
    scale = max(1.0, abs(t))
    if abs(times[0]) > HISTORY_TOL * scale:
        raise HistoryError(f"梯度历史应从 t=0 开始，实际为 {times[0]}")
    if abs(times[-1] - t) > HISTORY_TOL * scale:
        raise HistoryError(f"梯度历史末端 {times[-1]} 与 t={t} 不一致")
    if np.any(np.diff(times) <= 0):
        raise HistoryError("梯度历史的时间必须严格递增")

    grads = np.asarray(gradients, dtype=float)
    diff = grads[-1][None, :] - grads
    sums = (diff * diff) @ grid.faces * grid.h
    return times, sums


def g_circ(grid: Grid, times: Sequence[float], gradients, kernel: RelaxationKernel, t: float) -> float:
    """
    (g∘u_x)(t) = ∫₀^ℓ∫₀^t x g(t-s)|u_x(t) - u_x(s)|² ds dx

    Args:
        grid: 网格
        times: 快照时间 s_0 = 0 < ... < s_m = t
        gradients: 对应的面梯度（每行长度 n）
        kernel: 松弛核
        t: 当前时刻

    Returns:
        非负值；t = 0 时为 0

    Raises:
        HistoryError: 历史不覆盖 [0, t]
    """
    if kernel.is_zero:
        return 0.0
    times, sums = _history_sums(grid, times, gradients, t)
    if times.size < 2:
        return 0.0
    lags = np.maximum(t - times, 0.0)
    value = integrate.trapezoid(kernel.value(lags) * sums, times)
    return float(max(value, 0.0))


def gprime_circ(grid: Grid, times: Sequence[float], gradients, kernel: RelaxationKernel, t: float) -> float:
    """(g'∘u_x)(t)，与 g_circ 相同的求积，核换成 g'（结果 ≤ 0）"""
    if kernel.is_zero:
        return 0.0
    times, sums = _history_sums(grid, times, gradients, t)
    if times.size < 2:
        return 0.0
    lags = np.maximum(t - times, 0.0)
    value = integrate.trapezoid(kernel.derivative(lags) * sums, times)
    return float(min(value, 0.0))


def resolve_gcirc(state: SimState, params: ProblemParams, gcirc: Optional[float]) -> float:
    """
    t > 0 且核非零时 (g∘u_x) 必须显式给出（状态只保存 Bessel 像，无法重建梯度历史）

    Raises:
        PreconditionError: t > 0 时缺少 gcirc
    """
    if gcirc is not None:
        return gcirc
    if state.t > 0 and not params.kernel.is_zero:
        raise PreconditionError(
            f"t={state.t:.6g} > 0 时必须提供 (g∘u_x)",
            suggestion="请用 g_circ 由梯度历史计算，或使用 record_from_history",
        )
    return 0.0


def stiffness_term(state: SimState, params: ProblemParams, gcirc: Optional[float] = None) -> float:
    """(1 - ∫₀^t g)‖u_x‖_H² + (g∘u_x)"""
    gcirc = resolve_gcirc(state, params, gcirc)
    mass = kernel_mass(params.kernel, state.t) if state.t > 0 else 0.0
    return (1.0 - mass) * dirichlet_form(params.grid, state.u) + gcirc


def _source_part(state: SimState, params: ProblemParams) -> float:
    if not params.source_enabled:
        return 0.0
    return weighted_power(params.grid, state.u, params.p)


def functional_I(state: SimState, params: ProblemParams, gcirc: Optional[float] = None) -> float:
    """I = (1 - ∫₀^t g)‖u_x‖_H² + (g∘u_x) - ∫ x|u|^p"""
    return stiffness_term(state, params, gcirc) - _source_part(state, params)


def functional_J(state: SimState, params: ProblemParams, gcirc: Optional[float] = None) -> float:
    """J = ½(1 - ∫₀^t g)‖u_x‖_H² + ½(g∘u_x) - (1/p)∫ x|u|^p"""
    return 0.5 * stiffness_term(state, params, gcirc) - _source_part(state, params) / params.p


def functional_E(state: SimState, params: ProblemParams, gcirc: Optional[float] = None) -> float:
    """E = J + ½‖u_t‖_H²"""
    kinetic = 0.5 * weighted_inner(params.grid, state.v, state.v)
    return functional_J(state, params, gcirc) + kinetic


def make_record(state: SimState, params: ProblemParams, gcirc: Optional[float] = None,
                gprime: float = 0.0) -> EnergyRecord:
    """
    由状态与记忆项半范数构造 EnergyRecord，I、J、E 分别由 functional_I/J/E 给出

    Raises:
        PreconditionError: t > 0、核非零且缺少 gcirc
    """
    grid = params.grid
    gcirc = resolve_gcirc(state, params, gcirc)
    kinetic = 0.5 * weighted_inner(grid, state.v, state.v)
    return EnergyRecord(
        t=state.t,
        E=functional_E(state, params, gcirc),
        I=functional_I(state, params, gcirc),
        J=functional_J(state, params, gcirc),
        kinetic=kinetic,
        gcirc=gcirc,
        norm_H2=weighted_inner(grid, state.u, state.u),
        norm_ux_H2=dirichlet_form(grid, state.u),
        norm_p_p=weighted_power(grid, state.u, params.p),
        gprime_circ=gprime,
        kernel_mass=kernel_mass(params.kernel, state.t) if state.t > 0 else 0.0,
        constraint=constraint_residual(grid, state.u),
    )


def record_from_history(state: SimState, params: ProblemParams, times: Sequence[float],
                        gradients) -> EnergyRecord:
    """用记录分辨率的梯度历史（末项为当前时刻）计算 gcirc 后构造记录"""
    kernel = params.kernel
    gc = g_circ(params.grid, times, gradients, kernel, state.t)
    gpc = gprime_circ(params.grid, times, gradients, kernel, state.t)
    return make_record(state, params, gc, gpc)


@dataclass
class IdentityReport:
    """能量恒等式检验结果"""

    max_residual: float
    times: List[float] = field(default_factory=list)
    residuals: List[float] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {"max_residual": self.max_residual, "records_checked": len(self.residuals)}


def energy_identity_residual(trajectory: Trajectory, kernel: RelaxationKernel, a: float) -> IdentityReport:
    """
    比较中心差分的 E' 与 ½(g'∘u_x) - ½g(t)‖u_x‖² - a‖u_t‖²

    只在内部记录上比较（两端没有中心差分）。

    Raises:
        PreconditionError: 记录少于 3 个
    """
    records = trajectory.records
    if len(records) < 3:
        raise PreconditionError(f"能量恒等式检验至少需要 3 个记录，实际 {len(records)} 个")

    t = trajectory.times
    energy = trajectory.column("E")
    slope = np.gradient(energy, t)
    rhs = (
        0.5 * trajectory.column("gprime_circ")
        - 0.5 * kernel.value(t) * trajectory.column("norm_ux_H2")
        - a * 2.0 * trajectory.column("kinetic")
    )
    residuals = np.abs(slope - rhs)[1:-1]
    report = IdentityReport(
        max_residual=float(np.max(residuals)),
        times=t[1:-1].tolist(),
        residuals=residuals.tolist(),
    )
    logger.info("能量恒等式最大残差 %.3e（%d 个内部记录）", report.max_residual, residuals.size)
    return report
