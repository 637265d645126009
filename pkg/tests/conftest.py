import numpy as np
import pytest

from trafficlab import GreenshieldsDiagram, TriangularDiagram

# Binary-friendly canonical diagram: S_j = 5 m and time gap = 1 s exactly.
TRI = dict(v_f=20.0, w=5.0, k_j=0.2)
GS = dict(v_f=20.0, k_j=0.2)


@pytest.fixture
def tri():
    return TriangularDiagram(**TRI)


@pytest.fixture
def gs():
    return GreenshieldsDiagram(**GS)


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)
