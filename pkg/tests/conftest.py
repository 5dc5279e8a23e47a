from pathlib import Path

import numpy as np
import pytest

from wayaudit.tensor import FactorLayout

FIXTURES = Path(__file__).parent / "fixtures"

SX = np.array([[0.0, 1.0], [1.0, 0.0]])
SY = np.array([[0.0, -1j], [1j, 0.0]])
SZ = np.diag([1.0, -1.0])


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def qubit():
    return FactorLayout.of(("S", 2))


@pytest.fixture
def fixtures_dir():
    return FIXTURES
