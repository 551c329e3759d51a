"""Shared fixtures: canonical models, grids, and cached pipeline solutions.

The heavier grid solutions are session-scoped; tests treat them as
read-only.
"""
import numpy as np
import pytest

from oscphase.grid import build_grid
from oscphase.models import (LinearFocusParams, StuartLandauParams,
                             make_linear_focus, make_stuart_landau)
from oscphase.pipeline import solve_phase

# canonical configurations used throughout the suite
SL_PARAMS = dict(a=1.0, b=1.0, sigma=0.3)
LF_A = np.array([[-1.0, -2.0], [2.0, -1.0]])        # normal, eigenvalues -1 +- 2i
NN_A = np.array([[-1.0, -3.0], [1.0, -1.0]])        # non-normal, -1 +- sqrt(3) i
LF_SIGMA = 0.5


@pytest.fixture(scope="session")
def sl_model():
    return make_stuart_landau(StuartLandauParams(**SL_PARAMS))


@pytest.fixture(scope="session")
def lf_model():
    return make_linear_focus(LinearFocusParams(A=LF_A, sigma=LF_SIGMA))


@pytest.fixture(scope="session")
def nn_model():
    return make_linear_focus(LinearFocusParams(A=NN_A, sigma=LF_SIGMA))


@pytest.fixture(scope="session")
def sl_grid():
    return build_grid(0.2, 2.5, 128, 64)


@pytest.fixture(scope="session")
def lf_grid():
    # small r_in keeps the inner-boundary truncation error subdominant
    return build_grid(0.005, 2.0, 128, 64)


@pytest.fixture(scope="session")
def sl_sol(sl_model, sl_grid):
    return solve_phase(sl_model, sl_grid)


@pytest.fixture(scope="session")
def lf_sol(lf_model, lf_grid):
    return solve_phase(lf_model, lf_grid)


@pytest.fixture(scope="session")
def nn_sol(nn_model, lf_grid):
    return solve_phase(nn_model, lf_grid)
