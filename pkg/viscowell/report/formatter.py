# coding=utf-8
"""
控制台文本格式化模块

为各子命令生成横幅格式的文本块，由 CLI 打印。
"""

from typing import Dict, List, Optional

BANNER_WIDTH = 60

CLASSIFICATION_ICONS = {
    "Stable": "🟢",
    "UnstableBlowup": "🔴",
    "Indeterminate": "🟡",
    "Trivial": "⚪",
}


def _banner(title: str, lines: List[str]) -> str:
    rule = "=" * BANNER_WIDTH
    return "\n".join([rule, title, rule, *lines, rule])


def _fmt(value: Optional[float], digits: int = 6) -> str:
    if value is None:
        return "-"
    return f"{value:.{digits}g}"


def format_constants(data: Dict) -> str:
    """constants 子命令"""
    lines = [
        f"  l   = 1 - ∫g   : {_fmt(data['l'])}",
        f"  C_p (Poincaré) : {_fmt(data['C_p'])}",
        f"  C_* (嵌入)     : {_fmt(data['C_star'])}",
        f"  d1  (势阱深度) : {_fmt(data['d1'])}",
        f"  质量条件阈值   : {_fmt(data['mass_threshold'])} (δ={_fmt(data['delta'])}, 满足={data['mass_ok']})",
    ]
    return _banner("势阱常数", lines)


def format_classification(data: Dict) -> str:
    """classify 子命令，data 为 WellReport.to_dict()"""
    tag = data["classification"]
    lines = [
        f"  分类: {CLASSIFICATION_ICONS.get(tag, '')} {tag}",
        f"  E(0) = {_fmt(data['E0'])}    I(0) = {_fmt(data['I0'])}",
        f"  d1 = {_fmt(data['d1'])}    δ = {_fmt(data['delta'])}    质量条件: {'✅' if data['mass_ok'] else '❌'}",
    ]
    cert = data.get("certificate")
    if cert:
        lines.append("-" * BANNER_WIDTH)
        lines.append(f"  爆破证书 ({cert['branch']}): b={_fmt(cert['b'])}, T0={_fmt(cert['T0'])}, T={_fmt(cert['T'])}")
        lines.append(f"  T* ≤ {_fmt(cert['Tstar_bound'])}")
    return _banner("初值分类", lines)


def format_simulation(summary: Dict) -> str:
    """simulate 子命令"""
    run = summary["run"]
    status = {
        "completed": "✅ 正常结束",
        "blowup_detected": "💥 检测到爆破",
        "numeric_instability": "⚠️ 数值失稳",
    }.get(run["termination"], run["termination"])
    lines = [
        f"  终止原因: {status}",
        f"  结束时刻: {_fmt(run['final_time'])}（{run['steps']} 步，dt={_fmt(run['dt'])}）",
        f"  记录数: {run['records']}    约束残差: {_fmt(run['max_constraint_residual'], 3)}",
    ]
    if summary.get("energy_identity_max_residual") is not None:
        lines.append(f"  能量恒等式最大残差: {_fmt(summary['energy_identity_max_residual'], 3)}")
    if run.get("blowup_time") is not None:
        lines.append(f"  爆破时刻: {_fmt(run['blowup_time'])}    T* 上界: {_fmt(summary.get('Tstar_bound'))}")
    check = summary.get("blowup_check")
    if check:
        lines.append(f"  dt/2 复核: {'✅ 通过' if check['certified'] else '❌ 未通过'}")
    lines.append(f"  分类: {summary['classification']['classification']}")
    return _banner("模拟结果", lines)


def format_sweep(rows: List[Dict]) -> str:
    """sweep 子命令"""
    lines = [f"  {'A':>10}  {'E(0)':>12}  {'I(0)':>12}  {'分类':<15} {'结果':<20}"]
    for row in rows:
        tag = row.get("classification") or "-"
        outcome = row.get("outcome") or ("错误: " + row["error"] if row.get("error") else "-")
        lines.append(
            f"  {_fmt(row['amplitude'], 4):>10}  {_fmt(row.get('E0'), 4):>12}  "
            f"{_fmt(row.get('I0'), 4):>12}  {tag:<15} {outcome:<20}"
        )
    return _banner(f"振幅扫描（{len(rows)} 组）", lines)


def format_fit(data: Dict) -> str:
    """fit 子命令"""
    best = data["selected"]
    lines = [f"  选中模型: {best['model']}    R² = {_fmt(best['r_squared'])}"]
    for fit in data["fits"]:
        if fit["model"] == "exponential":
            lines.append(f"  exponential: K={_fmt(fit['K'])}, κ={_fmt(fit['rate'])}, R²={_fmt(fit['r_squared'])}")
        else:
            theory = _fmt(fit.get("theoretical_exponent"))
            lines.append(
                f"  polynomial:  K={_fmt(fit['K'])}, 指数={_fmt(fit['rate'])} (理论 {theory}), R²={_fmt(fit['r_squared'])}"
            )
    for failure in data.get("failures", []):
        lines.append(f"  ⚠️ {failure['model']} 拟合失败: {failure['message']}")
    envelope = data["envelope"]
    lines.append(f"  包络越界比例: {_fmt(envelope['fraction'], 3)} (slack={_fmt(data['slack'])})    最小 slack: {_fmt(envelope['min_slack'])}")
    return _banner("衰减拟合", lines)
