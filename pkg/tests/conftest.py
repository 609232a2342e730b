import numpy as np
import pytest

from hopfstraight import constants
from hopfstraight.fibration import LinearJ, conjugated, hopf, perturbed_hopf
from tests.helpers import unimodular


PERTURBATION = [(2, 1.0 + 0.0j)]


@pytest.fixture(autouse=True)
def _restore_tolerances():
    yield
    constants.reset_tolerances()


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(1234)


@pytest.fixture
def J_s3() -> LinearJ:
    return LinearJ.standard(1)


@pytest.fixture
def J_s5() -> LinearJ:
    return LinearJ.standard(2)


@pytest.fixture
def hopf_s3(J_s3):
    return hopf(J_s3)


@pytest.fixture
def hopf_s5(J_s5):
    return hopf(J_s5)


@pytest.fixture
def g_s3() -> np.ndarray:
    return unimodular(np.random.default_rng(7), 4)


@pytest.fixture
def conjugated_s3(g_s3, hopf_s3):
    return conjugated(g_s3, hopf_s3)


@pytest.fixture
def perturbed_s3(J_s3):
    return perturbed_hopf(J_s3, PERTURBATION, 0.05)
