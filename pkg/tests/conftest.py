import numpy as np
import pytest

from linconn.expr import parse
from linconn.model import BundleModel, ConnectionModel


@pytest.fixture
def line_bundle():
    return BundleModel("vector", ("x1",), ("u1",))


@pytest.fixture
def flat_model():
    b = BundleModel("vector", ("x1", "x2"), ("u1", "u2"))
    zero = parse("0")
    return ConnectionModel(b, [[zero, zero], [zero, zero]])


@pytest.fixture
def linear_model(line_bundle):
    return ConnectionModel(line_bundle, [[parse("x1*u1")]])


@pytest.fixture
def quadratic_model(line_bundle):
    return ConnectionModel(line_bundle, [[parse("u1^2")]])


@pytest.fixture
def m4_model():
    b = BundleModel("vector", ("x1", "x2"), ("u1", "u2"))
    return ConnectionModel(
        b, [[parse("u2^2"), parse("u1*u2")],
            [parse("x2*u1"), parse("0")]])


@pytest.fixture
def rng():
    return np.random.default_rng(20240801)


def eval_or_zero(e, env):
    from linconn.expr import ZERO, evaluate

    return 0.0 if e == ZERO else evaluate(e, env)
