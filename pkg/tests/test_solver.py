# coding=utf-8
"""初值、记忆项、单步推进与整段模拟"""

import math

import numpy as np
import pytest

from viscowell.analysis.potential_well import UNSTABLE_BLOWUP, assess_initial_data
from viscowell.core.errors import (
    HistoryError,
    InvalidParameterError,
    KernelRangeError,
    NumericInstabilityError,
    PreconditionError,
)
from viscowell.physics.kernels import (
    ExponentialKernel,
    PolynomialKernel,
    TabulatedKernel,
    ZeroKernel,
    kernel_mass,
)
from viscowell.physics.models import (
    TERMINATION_BLOWUP,
    TERMINATION_COMPLETED,
    MemoryHistory,
    ProblemParams,
    SimState,
)
from viscowell.physics.solver import (
    certify_blowup,
    detect_blowup,
    direct_memory,
    initial_state,
    make_initial_data,
    memory_term,
    run,
    step,
)
from viscowell.physics.weighted_space import Grid, bessel_operator, constraint_residual


def smooth_data(grid, amplitude=1.0):
    return make_initial_data(grid, family="smooth", amplitude=amplitude)


def compatible_data(grid):
    """-1/2 + 5x²/2 - 3x⁴ + x⁶（ℓ = 1）：u(1) = 0、∫x·u = 0、x=0 处偶对称，且 B u0(1) = 2u0'(1)"""
    x = grid.nodes
    shape = -0.5 + 2.5 * x ** 2 - 3.0 * x ** 4 + x ** 6
    return make_initial_data(grid, family="custom", custom=shape)


def _linear_params(grid):
    return ProblemParams(p=2.5, a=0.0, kernel=ZeroKernel(), grid=grid, source_enabled=False)


def _final_u(params, u0, u1, T, dt):
    trajectory = run(params, u0, u1, T=T, dt=dt, record_every=10 ** 6)
    assert trajectory.final_time == pytest.approx(T)
    return trajectory.snapshots[-1].u


def test_make_initial_data_zero_amplitude(grid):
    u0, u1 = make_initial_data(grid, amplitude=0.0, velocity_scale=2.0)
    assert not np.any(u0)
    assert not np.any(u1)


def test_make_initial_data_projects_custom_field(grid):
    custom = np.cos(grid.nodes) - math.cos(1.0)
    u0, u1 = make_initial_data(grid, family="custom", custom=custom, velocity_scale=0.5)
    assert constraint_residual(grid, u0) <= 1e-10
    assert u0[-1] == 0.0
    np.testing.assert_allclose(u1, 0.5 * u0)


def test_make_initial_data_rejects_unknown_family(grid):
    with pytest.raises(InvalidParameterError):
        make_initial_data(grid, family="gaussian")
    with pytest.raises(InvalidParameterError):
        make_initial_data(grid, family="custom")


def test_initial_state_rejects_unconstrained_data(params):
    u0 = params.grid.ell - params.grid.nodes
    with pytest.raises(InvalidParameterError):
        initial_state(params, u0, np.zeros(params.grid.size))


def test_memory_term_zero_kernel(free_params):
    u0, u1 = smooth_data(free_params.grid)
    state = initial_state(free_params, u0, u1)
    assert not np.any(memory_term(state, ZeroKernel(), 0.0))


def test_memory_term_constant_history_factorizes(grid):
    kernel = PolynomialKernel(0.3, 3.0)
    x = grid.nodes
    image = bessel_operator(grid, (1.0 - x ** 2) * (x ** 2 - 1.0 / 3.0))
    history = MemoryHistory(kernel, grid.size)
    dt = 0.01
    for k in range(101):
        history.append(k * dt, image)
    state = SimState(t=1.0, u=np.zeros(grid.size), v=np.zeros(grid.size),
                     accel=np.zeros(grid.size), history=history)
    memory = memory_term(state, kernel, 1.0, dt=dt)
    np.testing.assert_allclose(memory, kernel_mass(kernel, 1.0) * image, rtol=1e-4, atol=1e-10)


def test_recursive_memory_matches_direct_quadrature(grid):
    kernel = ExponentialKernel(0.4, 1.0)
    rng = np.random.default_rng(7)
    history = MemoryHistory(kernel, grid.size, keep_images=True)
    t = 0.0
    history.append(t, rng.normal(size=grid.size))
    for _ in range(1000):
        t += rng.uniform(0.005, 0.02)
        history.append(t, rng.normal(size=grid.size))
    assert history.count == 1001
    direct = direct_memory(history.times, history.images, kernel, t)
    np.testing.assert_allclose(history.memory, direct, rtol=1e-9, atol=1e-12)


def test_memory_term_rejects_gap(grid):
    kernel = PolynomialKernel(0.3, 3.0)
    history = MemoryHistory(kernel, grid.size)
    history.append(0.0, np.zeros(grid.size))
    history.append(0.5, np.zeros(grid.size))
    state = SimState(t=0.5, u=np.zeros(grid.size), v=np.zeros(grid.size),
                     accel=np.zeros(grid.size), history=history)
    with pytest.raises(HistoryError):
        memory_term(state, kernel, 0.5, dt=0.01)
    with pytest.raises(HistoryError):
        memory_term(state, kernel, 0.7)


def test_history_times_must_increase(grid):
    history = MemoryHistory(PolynomialKernel(0.3, 3.0), grid.size)
    history.append(0.0, np.zeros(grid.size))
    with pytest.raises(InvalidParameterError):
        history.append(0.0, np.zeros(grid.size))


def test_step_keeps_zero_state(params):
    zeros = np.zeros(params.grid.size)
    state = initial_state(params, zeros, zeros)
    dt = 0.5 * params.grid.h
    for _ in range(3):
        state = step(state, params, dt)
    assert not np.any(state.u)
    assert not np.any(state.v)
    assert state.t == pytest.approx(3 * dt)


def test_step_rejects_cfl_violation(params):
    zeros = np.zeros(params.grid.size)
    state = initial_state(params, zeros, zeros)
    with pytest.raises(InvalidParameterError):
        step(state, params, 0.9 * params.grid.h)
    with pytest.raises(InvalidParameterError):
        step(state, params, -0.1 * params.grid.h)


def test_time_reversibility_without_memory(grid):
    params = ProblemParams(p=2.5, a=0.0, kernel=ZeroKernel(), grid=grid, source_enabled=False)
    u0, u1 = smooth_data(grid)
    state = initial_state(params, u0, u1)
    dt = 0.5 * grid.h
    for _ in range(40):
        state = step(state, params, dt)
    for _ in range(40):
        state = step(state, params, -dt)
    np.testing.assert_allclose(state.u, u0, atol=1e-9)
    np.testing.assert_allclose(state.v, u1, atol=1e-9)


def test_run_zero_data_completes(params):
    zeros = np.zeros(params.grid.size)
    trajectory = run(params, zeros, zeros, T=0.5, dt=0.5 * params.grid.h, record_every=4)
    assert trajectory.termination == TERMINATION_COMPLETED
    assert trajectory.final_time == pytest.approx(0.5)
    assert all(r.E == 0.0 and r.norm_H2 == 0.0 for r in trajectory.records)
    assert detect_blowup(trajectory) is None


def test_run_validates_arguments(params):
    u0, u1 = smooth_data(params.grid)
    with pytest.raises(InvalidParameterError):
        run(params, u0, u1, T=0.0, dt=0.01)
    with pytest.raises(InvalidParameterError):
        run(params, u0, u1, T=1.0, dt=0.01, record_every=0)
    with pytest.raises(InvalidParameterError):
        run(params, u0, u1, T=1.0, dt=params.grid.h)


def test_run_preserves_constraint(params):
    u0, u1 = make_initial_data(params.grid, amplitude=1.0, velocity_scale=0.3)
    trajectory = run(params, u0, u1, T=1.0, dt=0.5 * params.grid.h, record_every=2)
    for record, snapshot in zip(trajectory.records, trajectory.snapshots):
        assert record.constraint <= 1e-10 * (1.0 + math.sqrt(record.norm_H2))
        assert snapshot.u[-1] == 0.0


def test_energy_conserved_without_memory_or_damping(grid):
    params = _linear_params(grid)
    u0, u1 = smooth_data(grid)
    drifts = []
    for fraction in (0.25, 0.125):
        trajectory = run(params, u0, u1, T=1.0, dt=fraction * grid.h, record_every=1)
        energy = trajectory.column("E")
        drifts.append(np.max(np.abs(energy - energy[0])) / energy[0])
    # 速度 Verlet 的能量漂移为 O(dt²)
    assert drifts[1] <= 1e-3
    assert drifts[0] / drifts[1] >= 3.5


def test_time_step_convergence_is_second_order(grid):
    params = _linear_params(grid)
    u0, u1 = smooth_data(grid)
    T = 0.5
    reference = _final_u(params, u0, u1, T, grid.h / 32.0)
    errors = [
        np.max(np.abs(_final_u(params, u0, u1, T, fraction * grid.h) - reference))
        for fraction in (0.25, 0.125)
    ]
    assert errors[0] / errors[1] >= 2.0 ** 1.8


def test_grid_convergence_is_second_order():
    T = 0.5
    fields = {}
    for n in (32, 64, 256):
        grid = Grid(1.0, n)
        u0, u1 = compatible_data(grid)
        fields[n] = _final_u(_linear_params(grid), u0, u1, T, 0.25 * grid.h)
    # 在最粗网格的节点上比较
    reference = fields[256][::8]
    errors = [
        np.max(np.abs(fields[32] - reference)),
        np.max(np.abs(fields[64][::2] - reference)),
    ]
    assert errors[0] / errors[1] >= 2.0 ** 1.8


def test_damping_dissipates_energy(grid):
    params = ProblemParams(p=2.5, a=1.0, kernel=ZeroKernel(), grid=grid, source_enabled=False)
    u0, u1 = smooth_data(grid)
    trajectory = run(params, u0, u1, T=2.0, dt=0.5 * grid.h, record_every=1)
    energy = trajectory.column("E")
    assert np.all(np.diff(energy) <= 1e-3 * energy[0])
    assert energy[-1] < 0.9 * energy[0]


def test_stable_run_energy_non_increasing(params):
    u0, u1 = smooth_data(params.grid, amplitude=0.5)
    trajectory = run(params, u0, u1, T=1.0, dt=0.5 * params.grid.h, record_every=1)
    energy = trajectory.column("E")
    assert trajectory.termination == TERMINATION_COMPLETED
    assert np.all(np.diff(energy) <= 1e-3 * energy[0])
    assert np.all(trajectory.column("gcirc") >= 0.0)


def test_unstable_run_blows_up_before_bound():
    grid = Grid(1.0, 256)
    params = ProblemParams(p=2.5, a=0.1, kernel=ExponentialKernel(0.4, 1.0), grid=grid)
    u0, u1 = make_initial_data(grid, amplitude=20000.0)
    report = assess_initial_data(grid, params.kernel, params.p, params.a, u0, u1, starts=4)
    assert report.classification.tag == UNSTABLE_BLOWUP

    dt = 0.25 * grid.h
    trajectory = run(params, u0, u1, T=2.0, dt=dt, record_every=4)
    assert trajectory.termination == TERMINATION_BLOWUP
    assert trajectory.blowup_time <= report.certificate.Tstar_bound
    assert detect_blowup(trajectory) == pytest.approx(trajectory.blowup_time)

    check = certify_blowup(params, u0, u1, 2.0, dt, 4, detected_time=trajectory.blowup_time)
    assert check.coarse_time == trajectory.blowup_time
    assert check.certified
    assert check.relative_change < 0.05
    assert check.refined_time <= report.certificate.Tstar_bound


def test_step_rolls_back_history_on_instability(params):
    # 初始加速度有限，推进一步后 |u|^{p-2}u 溢出
    u0, u1 = smooth_data(params.grid, amplitude=1e100)
    state = initial_state(params, u0, u1)
    assert np.all(np.isfinite(state.accel))
    history = state.history
    memory_before = history.memory.copy()
    with pytest.raises(NumericInstabilityError):
        step(state, params, 0.5 * params.grid.h)
    assert history.count == 1
    assert history.last_time == 0.0
    np.testing.assert_array_equal(history.memory, memory_before)


def test_step_only_from_latest_state(params):
    u0, u1 = smooth_data(params.grid)
    start = initial_state(params, u0, u1)
    dt = 0.5 * params.grid.h
    latest = step(start, params, dt)
    with pytest.raises(HistoryError):
        step(start, params, dt)
    assert start.history.count == 2
    assert step(latest, params, dt).t == pytest.approx(2 * dt)


def test_run_rejects_horizon_beyond_table(grid):
    kernel = TabulatedKernel([0.0, 0.5, 1.0], [0.4, 0.3, 0.2])
    params = ProblemParams(p=2.5, a=0.1, kernel=kernel, grid=grid)
    u0, u1 = smooth_data(grid)
    with pytest.raises(KernelRangeError):
        run(params, u0, u1, T=2.0, dt=0.5 * grid.h)
    trajectory = run(params, u0, u1, T=1.0, dt=0.5 * grid.h, record_every=4)
    assert trajectory.termination == TERMINATION_COMPLETED


def test_detect_blowup_rejects_ratio_one(params):
    zeros = np.zeros(params.grid.size)
    trajectory = run(params, zeros, zeros, T=0.1, dt=0.5 * params.grid.h)
    with pytest.raises(PreconditionError):
        detect_blowup(trajectory, threshold_ratio=1.0)


def test_run_on_polynomial_kernel():
    params = ProblemParams(p=2.5, a=0.1, kernel=PolynomialKernel(0.3, 3.0), grid=Grid(1.0, 16))
    u0, u1 = smooth_data(params.grid, amplitude=0.5)
    trajectory = run(params, u0, u1, T=0.5, dt=0.5 * params.grid.h, record_every=2)
    assert trajectory.termination == TERMINATION_COMPLETED
    assert trajectory.records[-1].E <= trajectory.records[0].E + 1e-3 * trajectory.records[0].E
