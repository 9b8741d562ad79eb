# coding=utf-8
"""
势阱分析模块

- 势阱深度 d1 与常数 (l, C_p, C_*)
- Nehari 流形相关量：λ̄₂、I(λ̄₂u)、山路水平 d2 = sup_λ J(λu)
- 初值分类（稳定集 / 不稳定集 / 不确定）
- 爆破时间上界证书与凸性诊断 L·L'' - (p+2)/4·L'²
- 沿轨迹的不等式链检查
"""

import logging
from dataclasses import dataclass, field, replace
from typing import Dict, List, Optional

import numpy as np
from scipy import integrate

from viscowell.core.errors import InvalidParameterError, NumericError, PreconditionError
from viscowell.core.validators import require_positive, validate_delta, validate_source_exponent
from viscowell.physics.energetics import stiffness_term
from viscowell.physics.kernels import (
    RelaxationKernel,
    check_mass_condition,
    kernel_complement,
    mass_condition_threshold,
)
from viscowell.physics.models import ProblemParams, SimState, Trajectory
from viscowell.physics.weighted_space import (
    DEFAULT_CSTAR_STARTS,
    DEFAULT_SEED,
    Grid,
    dirichlet_form,
    estimate_Cp,
    estimate_Cstar,
    weighted_inner,
    weighted_power,
)

logger = logging.getLogger(__name__)

STABLE = "Stable"
UNSTABLE_BLOWUP = "UnstableBlowup"
INDETERMINATE = "Indeterminate"
# 零初值（E0 = I0 = 0），平凡的整体解
TRIVIAL = "Trivial"

BRANCH_NONPOSITIVE = "delta<=0"
BRANCH_POSITIVE = "0<delta<1"

# T0、T 取严格不等式阈值的 1.01 倍
THRESHOLD_MARGIN = 1.01
# δ 默认值相对 E(0)/d1 的抬升比例
DELTA_LIFT = 1e-3
CHAIN_TOL = 1e-8
GLOBAL_BOUND_TOL = 1e-6


@dataclass
class WellConstants:
    """势阱常数"""

    l: float                            # 1 - ∫₀^∞ g
    C_p: float                          # Poincaré 常数
    C_star: float                       # 嵌入常数
    p: float
    d1: float                           # 势阱深度
    delta: float                        # 能量比例 δ < 1
    delta_hat: float                    # max{0, δ}

    def to_dict(self) -> Dict:
        return dict(self.__dict__)


@dataclass
class Classification:
    """初值分类"""

    tag: str                            # Stable / UnstableBlowup / Indeterminate / Trivial
    E0: float
    I0: float
    d1: float
    delta: float
    mass_ok: bool

    def to_dict(self) -> Dict:
        return dict(self.__dict__)


@dataclass
class BlowupCertificate:
    """爆破时间上界证书"""

    b: float
    T0: float
    T: float
    L0: float
    Lprime0: float
    Tstar_bound: float
    branch: str                         # delta<=0 或 0<delta<1
    A0: float                           # ∫ x u0²
    A1: float                           # ∫ x u1²
    a: float
    p: float

    def to_dict(self) -> Dict:
        return dict(self.__dict__)


@dataclass
class WellReport:
    """初值评估报告（classify 子命令输出）"""

    constants: WellConstants
    classification: Classification
    mass_threshold: float
    certificate: Optional[BlowupCertificate] = None

    def to_dict(self) -> Dict:
        return {
            "E0": self.classification.E0,
            "I0": self.classification.I0,
            "d1": self.constants.d1,
            "delta": self.constants.delta,
            "mass_ok": self.classification.mass_ok,
            "mass_threshold": self.mass_threshold,
            "classification": self.classification.tag,
            "constants": self.constants.to_dict(),
            "certificate": self.certificate.to_dict() if self.certificate else None,
        }


# ==================== 常数 ====================


def well_depth(l: float, C_star: float, p: float) -> float:
    """
    d1 = (p-2)/(2p)·(l / C_*^{2/p})^{p/(p-2)}

    Examples:
        >>> round(well_depth(1.0, 1.0, 2.5), 12)
        0.1
    """
    if not (0.0 < l <= 1.0):
        raise InvalidParameterError(f"l={l} 不在 (0, 1] 内")
    require_positive(C_star, "C_star")
    validate_source_exponent(p)
    return (p - 2.0) / (2.0 * p) * (l / C_star ** (2.0 / p)) ** (p / (p - 2.0))


def default_delta(E0: float, d1: float) -> float:
    """
    δ 的默认值

    E0 ≤ 0 时 δ = 0；否则取略大于 E0/d1 的值 E0/d1 + 10⁻³(1 - E0/d1)，
    E0 ≥ d1 时没有可用的 δ < 1，返回 1 - 10⁻³。
    """
    if E0 <= 0:
        return 0.0
    ratio = E0 / d1
    if ratio >= 1.0:
        return 1.0 - DELTA_LIFT
    return ratio + DELTA_LIFT * (1.0 - ratio)


def compute_well_constants(
    grid: Grid,
    kernel: RelaxationKernel,
    p: float,
    delta: Optional[float] = None,
    E0: Optional[float] = None,
    starts: int = DEFAULT_CSTAR_STARTS,
    seed: int = DEFAULT_SEED,
) -> WellConstants:
    """
    计算 (l, C_p, C_*, d1, δ)

    Args:
        delta: 用户指定的 δ；None 时按 default_delta(E0, d1) 选取（E0 也为 None 时取 0）

    Raises:
        InvalidParameterError: l ≤ 0 或参数越界
    """
    l_value = kernel_complement(kernel)
    if not l_value > 0:
        raise InvalidParameterError(
            f"l = 1 - ∫g = {l_value:.6g} ≤ 0，不满足 (G1)",
            suggestion="请减小核的质量",
        )
    cp = estimate_Cp(grid)
    cstar = estimate_Cstar(grid, p, starts=starts, seed=seed)
    d1 = well_depth(min(l_value, 1.0), cstar, p)
    if delta is None:
        delta = default_delta(E0, d1) if E0 is not None else 0.0
    validate_delta(delta)
    logger.info("势阱常数: l=%.6g, C_p=%.6g, C_*=%.6g, d1=%.6g, δ=%.6g", l_value, cp, cstar, d1, delta)
    return WellConstants(
        l=l_value, C_p=cp, C_star=cstar, p=p, d1=d1, delta=delta, delta_hat=max(0.0, delta)
    )


# ==================== Nehari 流形 ====================


def _scale_terms(state: SimState, params: ProblemParams, gcirc: Optional[float]):
    """A = (1-∫₀^t g)‖u_x‖² + gcirc（2 次齐次），B = ∫ x|u|^p（p 次齐次）"""
    power = weighted_power(params.grid, state.u, params.p)
    if not power > 0:
        raise InvalidParameterError("u = 0 时 λ̄₂ 无定义")
    return stiffness_term(state, params, gcirc), power


def lambda_bar2(state: SimState, params: ProblemParams, gcirc: Optional[float] = None) -> float:
    """
    λ̄₂ = [((1-∫g)‖u_x‖² + gcirc) / ∫x|u|^p]^{1/(p-2)}，λ̄₂·u 落在 Nehari 流形上

    Raises:
        InvalidParameterError: u = 0
        PreconditionError: t > 0、核非零且缺少 gcirc
    """
    quadratic, power = _scale_terms(state, params, gcirc)
    return (quadratic / power) ** (1.0 / (params.p - 2.0))


def nehari_residual(state: SimState, params: ProblemParams, gcirc: Optional[float] = None) -> float:
    """I(λ̄₂u)，gcirc 按 λ² 缩放；理论值为 0"""
    quadratic, power = _scale_terms(state, params, gcirc)
    lam = (quadratic / power) ** (1.0 / (params.p - 2.0))
    return lam ** 2 * quadratic - lam ** params.p * power


def mountain_pass_level(state: SimState, params: ProblemParams, gcirc: Optional[float] = None) -> float:
    """d2 = sup_λ J(λu) = (p-2)/(2p)·A^{p/(p-2)} / B^{2/(p-2)}"""
    quadratic, power = _scale_terms(state, params, gcirc)
    p = params.p
    return (p - 2.0) / (2.0 * p) * quadratic ** (p / (p - 2.0)) / power ** (2.0 / (p - 2.0))


# ==================== 分类与证书 ====================


def classify(E0: float, I0: float, constants: WellConstants, mass_ok: bool) -> Classification:
    """
    Stable:          E0 < d1 且 I0 > 0
    UnstableBlowup:  E0 < δ·d1 且 I0 < 0 且核质量条件成立
    Trivial:         E0 = I0 = 0（零初值）
    其余:            Indeterminate
    """
    d1 = constants.d1
    if E0 == 0.0 and I0 == 0.0:
        tag = TRIVIAL
    elif E0 < d1 and I0 > 0:
        tag = STABLE
    elif E0 < constants.delta * d1 and I0 < 0 and mass_ok:
        tag = UNSTABLE_BLOWUP
    else:
        tag = INDETERMINATE
    return Classification(tag=tag, E0=E0, I0=I0, d1=d1, delta=constants.delta, mass_ok=mass_ok)


def initial_functionals(grid: Grid, u0, u1, p: float):
    """t = 0 时的 (E0, I0)（g∘u_x = 0，∫₀^0 g = 0）"""
    norm_ux = dirichlet_form(grid, u0)
    power = weighted_power(grid, u0, p)
    kinetic = 0.5 * weighted_inner(grid, u1, u1)
    E0 = 0.5 * norm_ux - power / p + kinetic
    I0 = norm_ux - power
    return E0, I0


def tstar_bound(L0: float, Lprime0: float, p: float) -> float:
    """
    T* ≤ 4L(0) / ((p-2)L'(0))

    Examples:
        >>> round(tstar_bound(1.1, 2.0, 2.5), 12)
        4.4
    """
    if not Lprime0 > 0:
        raise NumericError(f"L'(0)={Lprime0} ≤ 0，无法给出爆破时间上界")
    return 4.0 * L0 / ((p - 2.0) * Lprime0)


def blowup_bound(grid: Grid, u0, u1, E0: float, constants: WellConstants, a: float,
                 mass_ok: bool) -> BlowupCertificate:
    """
    构造爆破时间上界证书

    b: δ ≤ 0 时 b = -2E0；0 < δ < 1 时 b = 2(δd1 - E0)
    T0 = 1.01·[(p-2+4a)A0 + (p-2)A1] / (2(p-2)b)
    T  = 1.01·4(A0 + bT0²) / (2(p-2)bT0 - (p-2+4a)A0 - (p-2)A1)
    L(0) = A0 + aT·A0 + bT0²，L'(0) = 2∫xu0u1 + 2bT0

    由 2∫xu0u1 ≥ -(A0 + A1) 得 (p-2)L'(0) ≥ 2(p-2)bT0 - (p-2+4a)A0 - (p-2)A1 + 4aA0，
    因此 T 总是严格大于 Tstar_bound。

    Raises:
        PreconditionError: 初值不属于不稳定集（含零初值）
        NumericError: L'(0) ≤ 0
    """
    p = constants.p
    A0 = weighted_inner(grid, u0, u0)
    A1 = weighted_inner(grid, u1, u1)
    if A0 == 0.0 and A1 == 0.0:
        raise PreconditionError("零初值不属于不稳定集")
    _, I0 = initial_functionals(grid, u0, u1, p)
    if classify(E0, I0, constants, mass_ok).tag != UNSTABLE_BLOWUP:
        raise PreconditionError(
            f"初值不属于不稳定集 (E0={E0:.6g}, I0={I0:.6g}, δd1={constants.delta * constants.d1:.6g}, mass_ok={mass_ok})"
        )

    if constants.delta <= 0:
        branch = BRANCH_NONPOSITIVE
        b = -2.0 * E0
    else:
        branch = BRANCH_POSITIVE
        b = 2.0 * (constants.delta * constants.d1 - E0)

    cross = weighted_inner(grid, u0, u1)
    growth = (p - 2.0 + 4.0 * a) * A0 + (p - 2.0) * A1
    T0 = THRESHOLD_MARGIN * growth / (2.0 * (p - 2.0) * b)
    denominator = 2.0 * (p - 2.0) * b * T0 - growth
    T = THRESHOLD_MARGIN * 4.0 * (A0 + b * T0 ** 2) / denominator

    L0 = A0 + a * T * A0 + b * T0 ** 2
    Lprime0 = 2.0 * cross + 2.0 * b * T0
    bound = tstar_bound(L0, Lprime0, p)

    return BlowupCertificate(
        b=b, T0=T0, T=T, L0=L0, Lprime0=Lprime0, Tstar_bound=bound,
        branch=branch, A0=A0, A1=A1, a=a, p=p,
    )


def assess_initial_data(
    grid: Grid,
    kernel: RelaxationKernel,
    p: float,
    a: float,
    u0,
    u1,
    delta: Optional[float] = None,
    starts: int = DEFAULT_CSTAR_STARTS,
    seed: int = DEFAULT_SEED,
    constants: Optional[WellConstants] = None,
) -> WellReport:
    """
    计算常数、分类初值，并在不稳定时给出证书

    Args:
        delta: 指定的 δ；None 时按本次 E0 用 default_delta 选取
        constants: 已计算的 (l, C_p, C_*, d1)，批量扫描时复用；其中的 δ 会按本次初值重选
    """
    E0, I0 = initial_functionals(grid, u0, u1, p)
    if constants is None:
        constants = compute_well_constants(grid, kernel, p, delta=delta, E0=E0, starts=starts, seed=seed)
    else:
        chosen = validate_delta(delta if delta is not None else default_delta(E0, constants.d1))
        constants = replace(constants, delta=chosen, delta_hat=max(0.0, chosen))
    mass_ok = check_mass_condition(kernel, p, constants.delta)
    classification = classify(E0, I0, constants, mass_ok)
    certificate = None
    if classification.tag == UNSTABLE_BLOWUP:
        certificate = blowup_bound(grid, u0, u1, E0, constants, a, mass_ok)
    logger.info("初值分类: %s (E0=%.6g, I0=%.6g, d1=%.6g)", classification.tag, E0, I0, constants.d1)
    return WellReport(
        constants=constants,
        classification=classification,
        mass_threshold=mass_condition_threshold(p, constants.delta),
        certificate=certificate,
    )


# ==================== 凸性诊断 ====================


@dataclass
class ConvexityReport:
    """L·L'' - (p+2)/4·L'² 沿轨迹的值"""

    min_value: float
    scale: float                        # max |L·L''|，容差 C·dt·scale 的基准
    times: List[float] = field(default_factory=list)
    values: List[float] = field(default_factory=list)

    def to_dict(self) -> Dict:
        return {"min_value": self.min_value, "scale": self.scale, "records_checked": len(self.values)}


def _convexity_values(t: np.ndarray, L: np.ndarray, p: float):
    Lp = np.gradient(L, t, edge_order=2)
    Lpp = np.gradient(Lp, t, edge_order=2)
    return L * Lpp - (p + 2.0) / 4.0 * Lp ** 2, L * Lpp


def convexity_diagnostic(trajectory: Trajectory, p: float, a: float, cert: BlowupCertificate,
                         growth_cap: float = 1e4) -> ConvexityReport:
    """
    沿轨迹重建 L(t) = ‖u‖² + a∫₀^t‖u‖² + a(T-t)‖u0‖² + b(t+T0)²，
    差分求 L'、L''，返回 L·L'' - (p+2)/4·L'² 的最小值

    只在 ‖u‖² ≤ growth_cap·‖u0‖² 的内部记录上取最小值（爆破前最后阶段的差分不可靠）。

    Raises:
        PreconditionError: 记录少于 5 个
    """
    if len(trajectory.records) < 5:
        raise PreconditionError(f"凸性诊断至少需要 5 个记录，实际 {len(trajectory.records)} 个")
    t = trajectory.times
    norm = trajectory.column("norm_H2")
    running = integrate.cumulative_trapezoid(norm, t, initial=0.0)
    L = norm + a * running + a * (cert.T - t) * cert.A0 + cert.b * (t + cert.T0) ** 2
    values, curvature = _convexity_values(t, L, p)

    window = np.isfinite(values) & (norm <= growth_cap * max(norm[0], np.finfo(float).tiny))
    window[0] = window[-1] = False
    if not np.any(window):
        raise PreconditionError("没有可用于凸性诊断的内部记录")
    report = ConvexityReport(
        min_value=float(np.min(values[window])),
        scale=float(np.max(np.abs(curvature[window]))),
        times=t[window].tolist(),
        values=values[window].tolist(),
    )
    logger.info("凸性诊断最小值 %.6g（基准 %.6g）", report.min_value, report.scale)
    return report


def convexity_negative_control(b: float, T0: float, p: float, t) -> np.ndarray:
    """
    只保留 b(t+T0)² 时的 L·L'' - (p+2)/4·L'²，闭式为 (2 - (p+2))·b²(t+T0)² < 0
    """
    t = np.asarray(t, dtype=float)
    if t.size < 3:
        raise PreconditionError("对照组至少需要 3 个时间点")
    values, _ = _convexity_values(t, b * (t + T0) ** 2, p)
    return values


# ==================== 沿轨迹检查 ====================


@dataclass
class ChainReport:
    """逐记录的通过/失败"""

    passed: List[bool]
    times: List[float]

    @property
    def all_passed(self) -> bool:
        return bool(self.passed) and all(self.passed)

    @property
    def first_failure(self) -> Optional[float]:
        for t, ok in zip(self.times, self.passed):
            if not ok:
                return t
        return None

    def to_dict(self) -> Dict:
        return {
            "all_passed": self.all_passed,
            "records_checked": len(self.passed),
            "first_failure": self.first_failure,
        }


def check_unstable_chain(trajectory: Trajectory, kernel: RelaxationKernel, constants: WellConstants) -> ChainReport:
    """
    每个记录检查 I < 0 以及
    d1 < (p-2)/(2p)[(1-∫₀^t g)‖u_x‖² + gcirc] < (p-2)/(2p)∫x|u|^p（相对容差 1e-8）
    """
    p = constants.p
    factor = (p - 2.0) / (2.0 * p)
    passed = []
    for record in trajectory.records:
        middle = factor * ((1.0 - record.kernel_mass) * record.norm_ux_H2 + record.gcirc)
        right = factor * record.norm_p_p
        ok = (
            record.I < 0
            and constants.d1 < middle * (1.0 + CHAIN_TOL)
            and middle < right * (1.0 + CHAIN_TOL)
        )
        passed.append(bool(ok))
    return ChainReport(passed=passed, times=trajectory.times.tolist())


def global_bound_coefficient(l: float, p: float) -> float:
    """2p/(l(p-2))"""
    return 2.0 * p / (l * (p - 2.0))


def check_global_bound(trajectory: Trajectory, constants: WellConstants) -> ChainReport:
    """每个记录检查 ‖u_x‖_H² ≤ 2p/(l(p-2))·E(0)·(1 + 1e-6)"""
    if not trajectory.records:
        return ChainReport(passed=[], times=[])
    coefficient = global_bound_coefficient(constants.l, constants.p)
    bound = coefficient * trajectory.records[0].E * (1.0 + GLOBAL_BOUND_TOL)
    passed = [bool(r.norm_ux_H2 <= bound) for r in trajectory.records]
    return ChainReport(passed=passed, times=trajectory.times.tolist())
