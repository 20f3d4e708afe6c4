import numpy as np
import pytest

from entbound.qmath import PureStateVector


@pytest.fixture
def bell():
    return PureStateVector(np.array([1, 0, 0, 1]) / np.sqrt(2), (2, 2))


@pytest.fixture
def hadamard():
    return np.array([[1, 1], [1, -1]]) / np.sqrt(2)
