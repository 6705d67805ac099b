# tests/conftest.py
import pytest
from loguru import logger

from src.circuit import Circuit, cx
from src.metrics import TimingErrorModel
from src.topology import CouplingMap, Layout


@pytest.fixture(autouse=True)
def quiet_logs():
    logger.remove()
    yield


@pytest.fixture
def model():
    return TimingErrorModel()


@pytest.fixture
def square_map():
    """4-cycle: data on 0-1-2, qubit 3 is the only auxiliary."""
    return CouplingMap.from_edges(4, [(0, 1), (1, 2), (2, 3), (3, 0)], name="square")


@pytest.fixture
def square_layout():
    return Layout((0, 1, 2))


@pytest.fixture
def long_cnot():
    return Circuit(3, 0, (cx(0, 2),))


@pytest.fixture
def nine_vertex_map():
    """Data line 0-4 with an auxiliary ladder 5-6-7 and a spur 8 off qubit 2."""
    edges = [(0, 1), (1, 2), (2, 3), (3, 4), (0, 5), (5, 6), (6, 7), (7, 4), (2, 8), (8, 6)]
    return CouplingMap.from_edges(9, edges, name="nine")


@pytest.fixture
def five_data_layout():
    return Layout((0, 1, 2, 3, 4))
