# coding=utf-8
"""能量泛函、记忆项半范数与能量恒等式"""

import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from viscowell.core.errors import HistoryError, PreconditionError
from viscowell.physics.energetics import (
    energy_identity_residual,
    functional_E,
    functional_I,
    functional_J,
    g_circ,
    gprime_circ,
    make_record,
)
from viscowell.physics.kernels import ExponentialKernel, ZeroKernel, kernel_mass
from viscowell.physics.models import MemoryHistory, ProblemParams, SimState
from viscowell.physics.solver import make_initial_data, run
from viscowell.physics.weighted_space import Grid, dirichlet_form


def _state(params, u, v=None, t=0.0):
    size = params.grid.size
    return SimState(
        t=t,
        u=np.asarray(u, dtype=float),
        v=np.zeros(size) if v is None else np.asarray(v, dtype=float),
        accel=np.zeros(size),
        history=MemoryHistory(params.kernel, size),
    )


def _smooth(grid, amplitude=1.0):
    return make_initial_data(grid, family="smooth", amplitude=amplitude)


def test_g_circ_vanishes_at_t0(grid, kernel):
    gradients = [np.ones(grid.n)]
    assert g_circ(grid, [0.0], gradients, kernel, 0.0) == 0.0


def test_g_circ_vanishes_for_constant_history(grid, kernel):
    times = np.linspace(0.0, 1.0, 11)
    gradients = np.tile(np.linspace(-1.0, 1.0, grid.n), (times.size, 1))
    assert g_circ(grid, times, gradients, kernel, 1.0) == pytest.approx(0.0, abs=1e-15)


def test_g_circ_two_snapshot_quadrature(grid, kernel):
    # 梯度差 ≡ 1，∫x·1 dx = 1/2；两点梯形公式给出 t/2·g(t)·1/2
    t = 1.0
    gradients = np.array([np.zeros(grid.n), np.ones(grid.n)])
    expected = 0.5 * t * (0.4 * math.exp(-t) * 0.5)
    assert g_circ(grid, [0.0, t], gradients, kernel, t) == pytest.approx(expected, rel=1e-12)
    assert gprime_circ(grid, [0.0, t], gradients, kernel, t) == pytest.approx(-expected, rel=1e-12)


def test_g_circ_rejects_incomplete_history(grid, kernel):
    gradients = np.zeros((2, grid.n))
    with pytest.raises(HistoryError):
        g_circ(grid, [0.1, 1.0], gradients, kernel, 1.0)
    with pytest.raises(HistoryError):
        g_circ(grid, [0.0, 0.5], gradients, kernel, 1.0)
    with pytest.raises(HistoryError):
        g_circ(grid, [], [], kernel, 1.0)


def test_g_circ_zero_kernel(grid):
    gradients = np.array([np.zeros(grid.n), np.ones(grid.n)])
    assert g_circ(grid, [0.0, 1.0], gradients, ZeroKernel(), 1.0) == 0.0


def test_functionals_of_zero_state(params):
    zeros = np.zeros(params.grid.size)
    state = _state(params, zeros)
    assert functional_I(state, params) == 0.0
    assert functional_J(state, params) == 0.0
    assert functional_E(state, params) == 0.0


def test_functional_E_kinetic_only(params):
    grid = params.grid
    v = (1.0 - grid.nodes) * 2.0
    state = _state(params, np.zeros(grid.size), v)
    expected = 0.5 * float(grid.weights @ (v * v))
    assert functional_E(state, params) == pytest.approx(expected)


def test_functional_J_unit_gradient_without_source(grid):
    params = ProblemParams(p=2.5, a=0.0, kernel=ZeroKernel(), grid=grid, source_enabled=False)
    u = math.sqrt(2.0) * (1.0 - grid.nodes)
    assert functional_J(_state(params, u), params) == pytest.approx(0.5, rel=1e-12)


def test_functional_I_sign_depends_on_amplitude(params):
    small, _ = make_initial_data(params.grid, amplitude=1.0)
    large, _ = make_initial_data(params.grid, amplitude=20000.0)
    assert functional_I(_state(params, small), params) > 0
    assert functional_I(_state(params, large), params) < 0


@settings(max_examples=30, deadline=None)
@given(
    st.floats(min_value=0.01, max_value=100.0),
    st.floats(min_value=0.0, max_value=5.0),
    st.floats(min_value=0.0, max_value=2.0),
    st.floats(min_value=0.0, max_value=1.0),
)
def test_record_identities(amplitude, t, gcirc, speed):
    grid = Grid(1.0, 16)
    params = ProblemParams(p=2.5, a=0.1, kernel=ExponentialKernel(0.4, 1.0), grid=grid)
    u0, u1 = make_initial_data(grid, amplitude=amplitude, velocity_scale=speed)
    record = make_record(_state(params, u0, u1, t=t), params, gcirc=gcirc)

    scale = abs(record.E) + abs(record.J) + record.kinetic + record.norm_ux_H2 + record.norm_p_p + gcirc
    assert record.E - record.J - record.kinetic == pytest.approx(0.0, abs=1e-10 * scale)
    p = params.p
    middle = (p - 2.0) / (2.0 * p) * ((1.0 - record.kernel_mass) * record.norm_ux_H2 + gcirc)
    assert record.J - record.I / p - middle == pytest.approx(0.0, abs=1e-10 * scale)


def _identity_residual(params, dt_fraction, T=1.0):
    u0, u1 = _smooth(params.grid)
    trajectory = run(params, u0, u1, T=T, dt=dt_fraction * params.grid.h, record_every=1)
    return energy_identity_residual(trajectory, params.kernel, params.a), trajectory


def test_identity_requires_three_records(params):
    zeros = np.zeros(params.grid.size)
    trajectory = run(params, zeros, zeros, T=0.5 * params.grid.h, dt=0.5 * params.grid.h)
    with pytest.raises(PreconditionError):
        energy_identity_residual(trajectory, params.kernel, params.a)


def test_identity_conservative_case(grid):
    params = ProblemParams(p=2.5, a=0.0, kernel=ZeroKernel(), grid=grid, source_enabled=False)
    coarse, trajectory = _identity_residual(params, 0.25)
    fine, _ = _identity_residual(params, 0.125)
    energy0 = trajectory.records[0].E
    assert len(coarse.residuals) == len(trajectory.records) - 2
    # 残差 O(dt²)：dt 减半缩小约 4 倍
    assert coarse.max_residual / fine.max_residual >= 3.5
    assert fine.max_residual <= 1e-3 * energy0


def test_identity_damped_case_converges(grid):
    params = ProblemParams(p=2.5, a=0.5, kernel=ZeroKernel(), grid=grid, source_enabled=False)
    coarse, trajectory = _identity_residual(params, 0.25)
    fine, _ = _identity_residual(params, 0.125)
    assert coarse.max_residual / fine.max_residual >= 3.5
    assert fine.max_residual <= 1e-3 * trajectory.records[0].E


def test_identity_with_memory_converges(params):
    coarse, trajectory = _identity_residual(params, 0.25)
    fine, _ = _identity_residual(params, 0.125)
    assert np.all(trajectory.column("gprime_circ") <= 0.0)
    # 记忆项、阻尼与源项同时存在时仍接近二阶
    assert coarse.max_residual / fine.max_residual >= 3.2
    assert fine.max_residual <= 1e-3 * trajectory.records[0].E


def test_functionals_require_gcirc_after_t0(params):
    u0, _ = _smooth(params.grid)
    state = _state(params, u0, t=0.5)
    with pytest.raises(PreconditionError):
        functional_I(state, params)
    with pytest.raises(PreconditionError):
        functional_E(state, params)
    with pytest.raises(PreconditionError):
        make_record(state, params)
    mass = kernel_mass(params.kernel, 0.5)
    expected = functional_I(_state(params, u0), params) - mass * dirichlet_form(params.grid, u0)
    assert functional_I(state, params, gcirc=0.0) == pytest.approx(expected, rel=1e-12)


def test_functionals_without_memory_need_no_gcirc(free_params):
    u0, _ = _smooth(free_params.grid)
    late = _state(free_params, u0, t=3.0)
    early = _state(free_params, u0)
    assert functional_I(late, free_params) == pytest.approx(functional_I(early, free_params), rel=1e-14)
    assert functional_J(late, free_params) == pytest.approx(functional_J(early, free_params), rel=1e-14)


def test_make_record_agrees_with_functionals(params):
    u0, u1 = make_initial_data(params.grid, amplitude=3.0, velocity_scale=0.7)
    state = _state(params, u0, u1, t=0.8)
    gcirc = 0.125
    record = make_record(state, params, gcirc=gcirc, gprime=-0.05)
    assert record.I == functional_I(state, params, gcirc)
    assert record.J == functional_J(state, params, gcirc)
    assert record.E == functional_E(state, params, gcirc)
    assert record.gcirc == gcirc
    assert record.gprime_circ == -0.05
