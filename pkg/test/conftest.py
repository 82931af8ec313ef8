import numpy as np
import pytest

from core.assembly import assemble
from core.mesh import build_mesh
from core.model import ControlInterval, HestonParams, TruncatedDomain
from core.payoff import Payoff
from core.transform import CoordinateMap, build_trapezoid

SMALL_MESH = (16, 12)


@pytest.fixture(scope='session')
def params():
    return HestonParams.case_study()


@pytest.fixture(scope='session')
def domain():
    return TruncatedDomain.case_study()


@pytest.fixture(scope='session')
def cmap(params):
    return CoordinateMap.from_params(params)


@pytest.fixture(scope='session')
def trapezoid(domain, cmap):
    return build_trapezoid(domain, cmap)


@pytest.fixture(scope='session')
def small_mesh(trapezoid):
    return build_mesh(trapezoid, *SMALL_MESH)


@pytest.fixture(scope='session')
def butterfly():
    return Payoff.butterfly(50.0, 20.0)


@pytest.fixture(scope='session')
def control():
    return ControlInterval(-2.4, -1.6)


@pytest.fixture(scope='session')
def butterfly_op(small_mesh, params, butterfly, cmap, control):
    return assemble(small_mesh, params, butterfly, cmap, control)


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)
