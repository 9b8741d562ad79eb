# coding=utf-8
"""
物理模块 - 松弛核、加权空间、能量泛函与时间推进

模块结构：
- kernels: 松弛核 g、辅助函数 ξ 及 (G1)/(G2) 检查
- weighted_space: 网格、加权范数、Bessel 算子、C_p 与 C_* 估计
- models: 共享数据结构
- energetics: I、J、E 与 (g∘u_x)
- solver: 显式时间推进与爆破检测
"""

from viscowell.physics.kernels import (
    ConstantXi,
    ExponentialKernel,
    LogMixedKernel,
    LogMixedXi,
    PolynomialKernel,
    PowerLawXi,
    PowerXiKernel,
    RelaxationKernel,
    TabulatedKernel,
    XiFunction,
    ZeroKernel,
    check_mass_condition,
    create_kernel,
    eval_kernel,
    eval_kernel_derivative,
    kernel_mass,
    verify_G1,
    verify_G2,
    xi_for_kernel,
)
from viscowell.physics.models import EnergyRecord, ProblemParams, SimState, Trajectory
from viscowell.physics.weighted_space import (
    Grid,
    bessel_operator,
    estimate_Cp,
    estimate_Cstar,
    project_mean_zero,
    weighted_inner,
    weighted_norm_p,
)
from viscowell.physics.energetics import (
    energy_identity_residual,
    functional_E,
    functional_I,
    functional_J,
    g_circ,
)
from viscowell.physics.solver import certify_blowup, detect_blowup, initial_state, run, step

__all__ = [
    # 松弛核
    "RelaxationKernel",
    "ExponentialKernel",
    "PolynomialKernel",
    "LogMixedKernel",
    "PowerXiKernel",
    "TabulatedKernel",
    "ZeroKernel",
    "XiFunction",
    "ConstantXi",
    "PowerLawXi",
    "LogMixedXi",
    "create_kernel",
    "eval_kernel",
    "eval_kernel_derivative",
    "kernel_mass",
    "xi_for_kernel",
    "verify_G1",
    "verify_G2",
    "check_mass_condition",
    # 加权空间
    "Grid",
    "weighted_norm_p",
    "weighted_inner",
    "bessel_operator",
    "project_mean_zero",
    "estimate_Cp",
    "estimate_Cstar",
    # 数据模型
    "ProblemParams",
    "SimState",
    "EnergyRecord",
    "Trajectory",
    # 能量
    "functional_I",
    "functional_J",
    "functional_E",
    "g_circ",
    "energy_identity_residual",
    # 时间推进
    "initial_state",
    "step",
    "run",
    "detect_blowup",
    "certify_blowup",
]
