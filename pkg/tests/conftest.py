import math

import numpy as np
import pytest

from moistsolve import Grid1D, GridFunction, make_analytic_preset, make_preset


@pytest.fixture(scope="session")
def synthetic_a():
    return make_preset("synthetic-A")


@pytest.fixture(scope="session")
def paper_regularized():
    return make_preset("paper-regularized")


@pytest.fixture(scope="session")
def sin_pressure():
    return make_analytic_preset("separable_sin",
                                {"amplitude": 1.0, "omega": 2.0 * math.pi},
                                horizon=1.0)


@pytest.fixture(scope="session")
def zero_pressure():
    return make_analytic_preset("zero", horizon=1.0)


@pytest.fixture()
def grid64():
    return Grid1D(64)


@pytest.fixture()
def u0_cosine(grid64):
    return GridFunction.from_callable(
        grid64, lambda x: 1.0 + 0.5 * np.cos(math.pi * x))
