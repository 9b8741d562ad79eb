# coding=utf-8
"""松弛核、ξ 函数与 (G1)/(G2)、质量条件"""

import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from viscowell.core.errors import (
    InvalidKernelError,
    InvalidParameterError,
    KernelRangeError,
    PreconditionError,
    UnsupportedOperationError,
)
from viscowell.physics.kernels import (
    ConstantXi,
    ExponentialKernel,
    LogMixedKernel,
    PolynomialKernel,
    PowerLawXi,
    PowerXiKernel,
    TabulatedKernel,
    ZeroKernel,
    check_mass_condition,
    create_kernel,
    eval_kernel,
    eval_kernel_derivative,
    kernel_complement,
    kernel_mass,
    mass_condition_threshold,
    verify_G1,
    verify_G2,
    xi_for_kernel,
)

TIMES = np.linspace(0.0, 30.0, 301)


def test_eval_kernel_values():
    assert eval_kernel(ExponentialKernel(0.4, 1.0), 0.0) == pytest.approx(0.4)
    assert eval_kernel(ExponentialKernel(0.4, 1.0), math.log(2.0)) == pytest.approx(0.2)
    assert eval_kernel(PolynomialKernel(0.3, 3.0), 1.0) == pytest.approx(0.0375)


def test_eval_kernel_derivative_values():
    assert eval_kernel_derivative(ExponentialKernel(0.4, 1.0), 0.0) == pytest.approx(-0.4)
    assert eval_kernel_derivative(PolynomialKernel(0.3, 3.0), 0.0) == pytest.approx(-0.9)
    assert eval_kernel_derivative(ZeroKernel(), 5.0) == 0.0


def test_eval_kernel_array_input_returns_array():
    values = eval_kernel(ExponentialKernel(0.4, 1.0), [0.0, 1.0])
    assert isinstance(values, np.ndarray)
    assert values.shape == (2,)


def test_negative_time_is_domain_error():
    with pytest.raises(InvalidParameterError):
        eval_kernel(ExponentialKernel(0.4, 1.0), -0.1)
    with pytest.raises(InvalidParameterError):
        eval_kernel_derivative(PolynomialKernel(0.3, 3.0), [0.0, -1.0])


def test_kernel_mass_and_complement():
    assert kernel_mass(ExponentialKernel(0.4, 1.0)) == pytest.approx(0.4)
    assert kernel_complement(ExponentialKernel(0.4, 1.0)) == pytest.approx(0.6)
    assert kernel_mass(PolynomialKernel(0.3, 3.0)) == pytest.approx(0.15)
    assert kernel_complement(PolynomialKernel(0.3, 3.0)) == pytest.approx(0.85)
    assert kernel_mass(ZeroKernel()) == 0.0
    assert kernel_complement(ZeroKernel()) == 1.0


def test_kernel_mass_finite_horizon():
    assert kernel_mass(ExponentialKernel(0.4, 1.0), 1.0) == pytest.approx(0.4 * (1.0 - math.exp(-1.0)))
    assert kernel_mass(PolynomialKernel(0.3, 3.0), 1.0) == pytest.approx(0.15 * (1.0 - 0.25))


def test_divergent_polynomial_mass():
    with pytest.raises(InvalidKernelError):
        kernel_mass(PolynomialKernel(0.3, 1.0))


def test_generated_kernel_mass_matches_analytic_limit():
    # r = 1 时 g = scale·e^{-∫ξ}，ξ ≡ (1+t)^{-m}
    k = PowerXiKernel(1.0, 0.5, 0.2)
    expected = 0.2 * math.exp(-2.0 * (math.sqrt(2.0) - 1.0))
    assert float(eval_kernel(k, 1.0)) == pytest.approx(expected)
    assert kernel_mass(k, 5.0) > 0.0


def test_tabulated_kernel():
    times = np.linspace(0.0, 30.0, 121)
    k = TabulatedKernel(times, 0.4 * np.exp(-times))
    assert eval_kernel(k, 0.0) == pytest.approx(0.4)
    assert kernel_mass(k, 30.0) == pytest.approx(0.4, rel=1e-2)
    with pytest.raises(KernelRangeError):
        eval_kernel(k, 31.0)
    with pytest.raises(UnsupportedOperationError):
        kernel_mass(k)
    with pytest.raises(UnsupportedOperationError):
        xi_for_kernel(k)


def test_tabulated_kernel_rejects_bad_tables():
    with pytest.raises(InvalidParameterError):
        TabulatedKernel(np.array([0.5, 1.0]), np.array([1.0, 0.5]))
    with pytest.raises(InvalidParameterError):
        TabulatedKernel(np.array([0.0, 1.0, 1.0]), np.array([1.0, 0.5, 0.2]))
    with pytest.raises(InvalidParameterError):
        TabulatedKernel(np.array([0.0, 1.0]), np.array([1.0, -0.5]))


def test_create_kernel_unknown_type():
    assert isinstance(create_kernel("Exponential", g0=0.4, eta=1.0), ExponentialKernel)
    with pytest.raises(InvalidParameterError):
        create_kernel("gaussian")


def test_xi_for_kernel_canonical_pairs():
    r, xi = xi_for_kernel(ExponentialKernel(0.4, 1.0))
    assert r == 1.0
    assert isinstance(xi, ConstantXi) and xi.xi0 == pytest.approx(1.0)

    r, xi = xi_for_kernel(PolynomialKernel(0.3, 3.0))
    assert r == pytest.approx(4.0 / 3.0)
    assert xi.xi0 == pytest.approx(3.0 * 0.3 ** (-1.0 / 3.0))
    assert xi.xi0 == pytest.approx(4.4814, abs=1e-4)

    with pytest.raises(InvalidKernelError):
        xi_for_kernel(PolynomialKernel(0.3, 2.0))


def test_verify_G1():
    report = verify_G1(ExponentialKernel(0.4, 1.0), TIMES)
    assert report.passed
    assert report.l == pytest.approx(0.6)

    heavy = verify_G1(ExponentialKernel(1.5, 1.0), TIMES)
    assert not heavy.passed
    assert heavy.l == pytest.approx(-0.5)

    zero = verify_G1(ZeroKernel(), TIMES)
    assert not zero.passed
    assert not zero.g0_positive


def test_verify_G1_detects_increase():
    times = np.array([0.0, 1.0, 2.0])
    k = TabulatedKernel(times, np.array([0.2, 0.3, 0.1]))
    report = verify_G1(k, times)
    assert not report.monotone
    assert report.violations


@pytest.mark.parametrize(
    "kernel",
    [
        ExponentialKernel(0.4, 1.0),
        PolynomialKernel(0.3, 3.0),
        LogMixedKernel(1.25, 0.2),
        PowerXiKernel(4.0 / 3.0, 0.2, 0.2),
    ],
)
def test_verify_G2_passes_for_canonical_pair(kernel):
    r, xi = xi_for_kernel(kernel)
    report = verify_G2(kernel, r, xi, TIMES)
    assert report.passed
    assert report.max_violation == 0.0


def test_verify_G2_rejects_wrong_pair():
    report = verify_G2(PolynomialKernel(0.3, 3.0), 1.0, ConstantXi(1.0), TIMES)
    assert not report.passed
    assert not report.inequality_ok
    assert report.max_violation > 0


def test_verify_G2_exponent_range():
    with pytest.raises(PreconditionError):
        verify_G2(ExponentialKernel(0.4, 1.0), 1.5, ConstantXi(1.0), TIMES)


def test_mass_condition_threshold():
    assert mass_condition_threshold(2.5, 0.0) == pytest.approx(5.0 / 9.0)
    assert mass_condition_threshold(2.5, 0.5) == pytest.approx(0.36)
    # δ < 0 按 δ̂ = 0 处理
    assert mass_condition_threshold(2.5, -0.3) == pytest.approx(5.0 / 9.0)


def test_check_mass_condition():
    assert check_mass_condition(ExponentialKernel(0.4, 1.0), 2.5, 0.0)
    assert not check_mass_condition(ExponentialKernel(0.4, 1.0), 2.5, 0.5)
    assert check_mass_condition(ZeroKernel(), 2.9, 0.9)
    with pytest.raises(InvalidParameterError):
        check_mass_condition(ExponentialKernel(0.4, 1.0), 3.5, 0.0)


def test_xi_integral_closed_forms():
    assert ConstantXi(2.0).integral(0.0, 3.0) == pytest.approx(6.0)
    assert PowerLawXi(0.5).integral(0.0, 3.0) == pytest.approx(2.0)


@given(st.floats(min_value=0.0, max_value=50.0), st.floats(min_value=0.1, max_value=3.0))
def test_exponential_kernel_satisfies_ode(t, eta):
    k = ExponentialKernel(0.4, eta)
    assert eval_kernel_derivative(k, t) == pytest.approx(-eta * eval_kernel(k, t), abs=1e-15)


@given(
    st.floats(min_value=0.0, max_value=100.0),
    st.floats(min_value=0.0, max_value=100.0),
)
def test_polynomial_kernel_is_non_increasing(t1, t2):
    k = PolynomialKernel(0.3, 3.0)
    low, high = min(t1, t2), max(t1, t2)
    assert eval_kernel(k, high) <= eval_kernel(k, low)
