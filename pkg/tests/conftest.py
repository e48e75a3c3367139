import pytest

from elsim.dynamics import derive_o_params
from elsim.engine import Simulation, warmup_kernels
from elsim.verify import (reference_config, reference_gains, reference_physical,
                          reference_topology)


@pytest.fixture(scope="session", autouse=True)
def _warm():
    # compile the numba kernels once so timed tests measure integration only
    warmup_kernels()


@pytest.fixture(scope="session")
def params():
    return derive_o_params(reference_physical())


@pytest.fixture(scope="session")
def topology():
    return reference_topology()


@pytest.fixture(scope="session")
def gains():
    return reference_gains()


@pytest.fixture(scope="session")
def benchmark_log():
    """The bundled four-follower scenario, shared by the figure criteria."""
    return Simulation(reference_config()).run()
