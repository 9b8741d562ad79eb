# coding=utf-8
"""
能量衰减拟合

两种包络模型：
- exponential:  E(t) ≤ K·exp(-κ∫_{t0}^t ξ)           （r = 1）
- polynomial:   E(t) ≤ K·(1 + ∫_{t0}^t ξ)^{-1/(r-1)}   （1 < r < 3/2）

拟合在对数变换后的线性模型上用最小二乘完成，R² 也在该线性模型上计算。
"""

import logging
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence

import numpy as np
from scipy import stats

from viscowell.core.errors import FitError, InvalidParameterError
from viscowell.core.validators import require_non_negative
from viscowell.physics.kernels import XiFunction

logger = logging.getLogger(__name__)

MODEL_EXPONENTIAL = "exponential"
MODEL_POLYNOMIAL = "polynomial"

DEFAULT_FIT_T0 = 1.0
MIN_FIT_POINTS = 10
UNDERFLOW_RATIO = 1e-14
ENVELOPE_RTOL = 1e-12


def xi_integral(xi: XiFunction, t0: float, t):
    """
    ∫_{t0}^t ξ(s) ds（闭式）

    Raises:
        InvalidParameterError: t < t0 或 t0 < 0

    Examples:
        xi_integral(ConstantXi(2.0), 0.0, 3.0) -> 6.0
    """
    require_non_negative(t0, "t0")
    t_arr = np.asarray(t, dtype=float)
    if np.any(t_arr < t0):
        raise InvalidParameterError(f"积分上限必须不小于 t0={t0}")
    return xi.integral(t0, t)


@dataclass
class DecayFit:
    """衰减包络拟合结果"""

    model: str                          # exponential / polynomial
    K: float
    rate: float                         # exponential: κ；polynomial: 拟合指数（负数）
    t0: float
    r_squared: float
    points: int                         # 参与拟合的记录数
    theoretical_exponent: Optional[float] = None
    violation_fraction: float = 0.0
    min_slack: float = 1.0
    xi: Optional[XiFunction] = field(default=None, repr=False)

    def to_dict(self) -> Dict:
        return {
            "model": self.model,
            "K": self.K,
            "rate": self.rate,
            "t0": self.t0,
            "r_squared": self.r_squared,
            "points": self.points,
            "theoretical_exponent": self.theoretical_exponent,
            "violation_fraction": self.violation_fraction,
            "min_slack": self.min_slack,
            "xi": self.xi.to_dict() if self.xi is not None else None,
        }


@dataclass
class EnvelopeCheck:
    fraction: float                     # E > slack·envelope 的记录比例
    min_slack: float                    # 使比例为 0 的最小 slack（≥ 1）
    violations: List[int] = field(default_factory=list)

    def to_dict(self) -> Dict:
        return {"fraction": self.fraction, "min_slack": self.min_slack, "violations": len(self.violations)}


def _fit_window(times: Sequence[float], energies: Sequence[float], t0: float):
    """
    取 t ≥ t0 的记录，排除下溢能量

    Raises:
        FitError: 窗口内存在非正能量，或可用记录少于 MIN_FIT_POINTS
    """
    t = np.asarray(times, dtype=float)
    e = np.asarray(energies, dtype=float)
    if t.shape != e.shape or t.ndim != 1:
        raise InvalidParameterError("times 与 energies 必须是等长一维序列")
    if t.size == 0:
        raise FitError("能量序列为空")

    in_window = np.flatnonzero(t >= t0)
    bad = [int(i) for i in in_window if not e[i] > 0]
    if bad:
        logger.warning("拟合窗口内有 %d 个非正能量，下标 %s", len(bad), bad[:10])
        raise FitError(f"拟合窗口内存在非正能量（{len(bad)} 个）", indices=bad)

    floor = UNDERFLOW_RATIO * e[0] if e[0] > 0 else 0.0
    keep = in_window[e[in_window] >= floor]
    if keep.size < in_window.size:
        logger.warning("排除 %d 个低于 %.1e·E(0) 的能量", in_window.size - keep.size, UNDERFLOW_RATIO)
    if keep.size < MIN_FIT_POINTS:
        raise FitError(f"t ≥ {t0} 的可用记录只有 {keep.size} 个，至少需要 {MIN_FIT_POINTS} 个")
    return t[keep], e[keep]


def _attach_envelope_stats(fit: DecayFit, t: np.ndarray, e: np.ndarray) -> DecayFit:
    check = check_envelope(t, e, fit, slack=1.0)
    fit.violation_fraction = check.fraction
    fit.min_slack = check.min_slack
    return fit


def fit_exponential(times: Sequence[float], energies: Sequence[float], xi: XiFunction,
                    t0: float = DEFAULT_FIT_T0) -> DecayFit:
    """
    log E = log K - κ·∫_{t0}^t ξ 的最小二乘拟合

    Args:
        times: 记录时间
        energies: 对应的 E(t)
        xi: 核对应的 ξ
        t0: 拟合窗口起点

    Returns:
        DecayFit(model="exponential", rate=κ)

    Raises:
        FitError: 窗口内有非正能量或记录不足
    """
    t, e = _fit_window(times, energies, t0)
    x = np.asarray(xi_integral(xi, t0, t), dtype=float)
    result = stats.linregress(x, np.log(e))
    fit = DecayFit(
        model=MODEL_EXPONENTIAL,
        K=float(np.exp(result.intercept)),
        rate=float(-result.slope),
        t0=t0,
        r_squared=float(result.rvalue ** 2),
        points=int(t.size),
        xi=xi,
    )
    logger.info("指数拟合: K=%.6g, κ=%.6g, R²=%.6f", fit.K, fit.rate, fit.r_squared)
    return _attach_envelope_stats(fit, t, e)


def fit_polynomial(times: Sequence[float], energies: Sequence[float], xi: XiFunction,
                   r: Optional[float] = None, t0: float = DEFAULT_FIT_T0) -> DecayFit:
    """
    log E = log K + k·log(1 + ∫_{t0}^t ξ) 的最小二乘拟合

    r 给定时同时报告理论指数 -1/(r-1)；r 为 None（如指数核）时只拟合指数。

    Raises:
        InvalidParameterError: r 不在 (1, 3/2) 内
        FitError: 同 fit_exponential
    """
    theoretical = None
    if r is not None:
        if not (1.0 < r < 1.5):
            raise InvalidParameterError(f"r={r} 不在 (1, 3/2) 内")
        theoretical = -1.0 / (r - 1.0)

    t, e = _fit_window(times, energies, t0)
    x = np.log1p(np.asarray(xi_integral(xi, t0, t), dtype=float))
    result = stats.linregress(x, np.log(e))
    fit = DecayFit(
        model=MODEL_POLYNOMIAL,
        K=float(np.exp(result.intercept)),
        rate=float(result.slope),
        t0=t0,
        r_squared=float(result.rvalue ** 2),
        points=int(t.size),
        theoretical_exponent=theoretical,
        xi=xi,
    )
    logger.info(
        "多项式拟合: K=%.6g, 指数=%.6g (理论 %s), R²=%.6f",
        fit.K, fit.rate, "-" if theoretical is None else f"{theoretical:.6g}", fit.r_squared,
    )
    return _attach_envelope_stats(fit, t, e)


def envelope(fit: DecayFit, t):
    """拟合包络 K·exp(-κΞ) 或 K·(1+Ξ)^k，Ξ = ∫_{t0}^t ξ"""
    if fit.xi is None:
        raise InvalidParameterError("DecayFit 缺少 ξ，无法计算包络")
    x = np.asarray(xi_integral(fit.xi, fit.t0, t), dtype=float)
    if fit.model == MODEL_EXPONENTIAL:
        values = fit.K * np.exp(-fit.rate * x)
    else:
        values = fit.K * (1.0 + x) ** fit.rate
    if np.ndim(t) == 0:
        return float(values)
    return values


def check_envelope(times: Sequence[float], energies: Sequence[float], fit: DecayFit,
                   slack: float = 1.0) -> EnvelopeCheck:
    """
    统计 E(t) > slack·envelope(t) 的记录比例，以及使比例为 0 的最小 slack

    只考虑 t ≥ fit.t0 的记录。
    """
    if slack < 1.0:
        raise InvalidParameterError(f"slack={slack} 必须 ≥ 1")
    t = np.asarray(times, dtype=float)
    e = np.asarray(energies, dtype=float)
    mask = t >= fit.t0
    if not np.any(mask):
        return EnvelopeCheck(fraction=0.0, min_slack=1.0)
    env = np.asarray(envelope(fit, t[mask]), dtype=float)
    exceed = e[mask] > slack * env * (1.0 + ENVELOPE_RTOL)
    indices = np.flatnonzero(mask)[exceed]
    ratios = e[mask] / env
    return EnvelopeCheck(
        fraction=float(np.count_nonzero(exceed) / exceed.size),
        min_slack=float(max(1.0, np.max(ratios))),
        violations=[int(i) for i in indices],
    )


def select_best_fit(fits: Sequence[DecayFit]) -> DecayFit:
    """按 R² 选择模型；R² 相同时保留先出现的"""
    if not fits:
        raise FitError("没有可供选择的拟合结果")
    best = fits[0]
    for fit in fits[1:]:
        if fit.r_squared > best.r_squared:
            best = fit
    return best
