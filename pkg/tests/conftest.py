# coding=utf-8
"""公共夹具：小网格、默认指数核与方程参数"""

import pytest

from viscowell.physics.kernels import ExponentialKernel, ZeroKernel
from viscowell.physics.models import ProblemParams
from viscowell.physics.weighted_space import Grid


@pytest.fixture(autouse=True)
def _clean_env(monkeypatch):
    for key in ("VISCOWELL_SEED", "CONFIG_PATH", "DEBUG", "LOG_LEVEL", "TIMEZONE"):
        monkeypatch.delenv(key, raising=False)


@pytest.fixture
def grid():
    return Grid(1.0, 32)


@pytest.fixture
def kernel():
    return ExponentialKernel(0.4, 1.0)


@pytest.fixture
def params(grid, kernel):
    return ProblemParams(p=2.5, a=0.1, kernel=kernel, grid=grid)


@pytest.fixture
def free_params(grid):
    """无记忆、无阻尼"""
    return ProblemParams(p=2.5, a=0.0, kernel=ZeroKernel(), grid=grid)
