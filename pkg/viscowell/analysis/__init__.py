# coding=utf-8
"""
分析模块 - 势阱分类、爆破证书与衰减拟合
"""

from viscowell.analysis.potential_well import (
    BlowupCertificate,
    Classification,
    WellConstants,
    WellReport,
    assess_initial_data,
    blowup_bound,
    check_global_bound,
    check_unstable_chain,
    classify,
    compute_well_constants,
    convexity_diagnostic,
    lambda_bar2,
    mountain_pass_level,
    well_depth,
)
from viscowell.analysis.decay_fitter import (
    DecayFit,
    check_envelope,
    fit_exponential,
    fit_polynomial,
    select_best_fit,
    xi_integral,
)

__all__ = [
    "WellConstants",
    "Classification",
    "BlowupCertificate",
    "WellReport",
    "well_depth",
    "compute_well_constants",
    "lambda_bar2",
    "mountain_pass_level",
    "classify",
    "blowup_bound",
    "assess_initial_data",
    "convexity_diagnostic",
    "check_unstable_chain",
    "check_global_bound",
    "DecayFit",
    "xi_integral",
    "fit_exponential",
    "fit_polynomial",
    "check_envelope",
    "select_best_fit",
]
