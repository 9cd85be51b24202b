import sys
from pathlib import Path

import pytest

sys.path.append(str(Path(__file__).resolve().parent.parent))

from thirdassay import conditional
from thirdassay.distributions import ErrorModel
from thirdassay.utils import make_grid


@pytest.fixture(autouse=True)
def _no_seed_env(monkeypatch):
    monkeypatch.delenv('THIRDASSAY_SEED', raising=False)


@pytest.fixture(scope='session')
def normal_spec():
    return conditional.ConditionalSpec.from_alpha(ErrorModel.NORMAL, 0.05)


@pytest.fixture(scope='session')
def laplace_spec():
    return conditional.ConditionalSpec.from_alpha(ErrorModel.LAPLACE, 0.05)


@pytest.fixture(scope='session')
def grid():
    return make_grid(-4.0, 4.0, 0.01)


@pytest.fixture(scope='session')
def normal_curve(normal_spec, grid):
    return conditional.curve(normal_spec, grid)


@pytest.fixture(scope='session')
def laplace_curve(laplace_spec, grid):
    return conditional.curve(laplace_spec, grid)
