# coding=utf-8
"""加权空间：求积、导数、Bessel 算子、投影与 C_p / C_* 估计"""

import math

import numpy as np
import pytest
from hypothesis import assume, given, settings, strategies as st
from scipy import special

from viscowell.core.errors import GridMismatchError, InvalidParameterError
from viscowell.physics.weighted_space import (
    Grid,
    bessel_operator,
    constraint_residual,
    derivative,
    dirichlet_form,
    embedding_ratio,
    estimate_Cp,
    estimate_Cstar,
    poincare_ground_state,
    project_mean_zero,
    weighted_inner,
    weighted_norm_p,
)

J01 = special.jn_zeros(0, 1)[0]
CP_16 = estimate_Cp(Grid(1.0, 16))


def test_grid_validation():
    with pytest.raises(InvalidParameterError):
        Grid(0.0, 32)
    with pytest.raises(InvalidParameterError):
        Grid(1.0, 4)
    assert Grid(2.0, 16).h == pytest.approx(0.125)


@pytest.mark.parametrize("ell,n", [(1.0, 8), (1.0, 33), (2.5, 64)])
def test_weights_sum_to_half_ell_squared(ell, n):
    grid = Grid(ell, n)
    assert grid.weights.sum() == pytest.approx(ell ** 2 / 2.0, rel=1e-13)
    assert grid.nodes[-1] == ell


def test_weighted_norms(grid):
    ones = np.ones(grid.size)
    assert weighted_norm_p(grid, ones, 2.0) == pytest.approx(math.sqrt(0.5), rel=1e-12)
    assert weighted_norm_p(grid, grid.nodes, 2.0) == pytest.approx(0.5, rel=1e-2)
    assert weighted_norm_p(grid, np.zeros(grid.size), 2.5) == 0.0
    with pytest.raises(InvalidParameterError):
        weighted_norm_p(grid, ones, 0.5)


def test_weighted_inner(grid):
    ones = np.ones(grid.size)
    assert weighted_inner(grid, ones, ones) == pytest.approx(0.5)
    assert weighted_inner(grid, ones, grid.nodes - 2.0 / 3.0) == pytest.approx(0.0, abs=1e-3)
    assert weighted_inner(grid, ones, np.zeros(grid.size)) == 0.0


def test_field_length_mismatch(grid):
    with pytest.raises(GridMismatchError):
        weighted_inner(grid, np.ones(grid.size), np.ones(grid.size + 1))


def test_derivative_exact_on_affine_and_quadratic(grid):
    x = grid.nodes
    np.testing.assert_allclose(derivative(grid, 3.0 * x), 3.0, atol=1e-12)
    np.testing.assert_allclose(derivative(grid, x ** 2)[1:-1], 2.0 * x[1:-1], atol=1e-12)
    np.testing.assert_allclose(derivative(grid, np.full(grid.size, 7.0)), 0.0, atol=1e-12)


def test_dirichlet_form_exact_on_linear(grid):
    # ∫₀¹ x·1² dx = 1/2
    assert dirichlet_form(grid, 1.0 - grid.nodes) == pytest.approx(0.5, rel=1e-12)


def test_bessel_operator_on_quadratic(grid):
    out = bessel_operator(grid, grid.nodes ** 2)
    np.testing.assert_allclose(out[:-1], 4.0, rtol=1e-10)
    assert out[-1] == 0.0
    np.testing.assert_allclose(bessel_operator(grid, np.full(grid.size, 2.0)), 0.0, atol=1e-12)


def test_bessel_operator_quartic_converges():
    errors = []
    for n in (32, 64):
        g = Grid(1.0, n)
        x = g.nodes
        out = bessel_operator(g, x ** 4)
        errors.append(np.max(np.abs(out[1:-1] - 16.0 * x[1:-1] ** 2)))
    assert errors[1] < errors[0] / 3.0


def test_project_mean_zero(grid):
    projected = project_mean_zero(grid, np.ones(grid.size))
    assert constraint_residual(grid, projected) <= 1e-12
    assert projected[-1] == pytest.approx(1.0)

    shape = (grid.ell - grid.nodes) * (grid.nodes - grid.ell / 2.0)
    np.testing.assert_allclose(project_mean_zero(grid, shape), shape, atol=1e-3)


def test_project_mean_zero_is_idempotent(grid):
    u = np.cos(3.0 * grid.nodes) + grid.nodes
    once = project_mean_zero(grid, u)
    np.testing.assert_allclose(project_mean_zero(grid, once), once, atol=1e-14)


def test_estimate_Cp_against_bessel_zero():
    assert estimate_Cp(Grid(1.0, 64)) == pytest.approx(1.0 / J01 ** 2, rel=3e-2)


def test_estimate_Cp_scales_with_ell_squared():
    cp1 = estimate_Cp(Grid(1.0, 32))
    cp2 = estimate_Cp(Grid(2.0, 32))
    assert cp2 == pytest.approx(4.0 * cp1, rel=1e-8)


def test_poincare_ground_state_normalization(grid):
    cp, v = poincare_ground_state(grid)
    assert v[-1] == 0.0
    assert v[0] > 0
    assert weighted_inner(grid, v, v) == pytest.approx(1.0)
    assert weighted_inner(grid, v, v) / dirichlet_form(grid, v) == pytest.approx(cp, rel=1e-8)


def test_estimate_Cstar_dominates_explicit_ratios(grid):
    cstar = estimate_Cstar(grid, 2.5, starts=4)
    x = grid.nodes
    for v in ((1.0 - x) * (x - 0.5), 1.0 - x, (1.0 - x) ** 2):
        assert embedding_ratio(grid, v, 2.5) <= cstar
    assert cstar > 0


def test_embedding_ratio_rejects_constant_zero(grid):
    with pytest.raises(InvalidParameterError):
        embedding_ratio(grid, np.zeros(grid.size), 2.5)


@settings(max_examples=25, deadline=None)
@given(st.floats(min_value=1e-3, max_value=1e3))
def test_embedding_ratio_is_scale_invariant(c):
    grid = Grid(1.0, 16)
    v = (1.0 - grid.nodes) * (grid.nodes + 0.3)
    assert embedding_ratio(grid, c * v, 2.5) == pytest.approx(embedding_ratio(grid, v, 2.5), rel=1e-10)


@settings(max_examples=50, deadline=None)
@given(st.lists(st.floats(min_value=-1.0, max_value=1.0), min_size=16, max_size=16))
def test_poincare_inequality_on_random_fields(values):
    grid = Grid(1.0, 16)
    v = np.append(np.asarray(values), 0.0)
    energy = dirichlet_form(grid, v)
    assume(energy > 1e-12)
    assert weighted_inner(grid, v, v) <= CP_16 * energy * (1.0 + 1e-6)
