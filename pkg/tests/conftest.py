import numpy as np
import pytest

from spherecov.models import ModelA, ModelB, ModelC, ModelD
# Reference CL estimates for temperature and precipitation residuals, used as

# Published CL estimates for the temperature/precipitation residuals, used as
# realistic parameter fixtures.
@pytest.fixture
def ref_a():
    return ModelA(1.85, 4.71e-5, 0.28, 102.0, 11.88)


@pytest.fixture
def ref_b():
    return ModelB(1.84, 4.72e-5, 0.28, 2602.0, 22.58)


@pytest.fixture
def ref_c():
    return ModelC(1.85, 4.69e-5, 0.28, 2901.0, 2245.0, 22.92)


@pytest.fixture
def ref_d():
    return ModelD(1.38, 3.98e-3, 5.58e-3, 47133.0, 30805.0, 41.36, 4.03, 1.66)


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)
