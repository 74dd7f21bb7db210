import sys

import numpy as np
import pytest

from mixmom import _accel


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture(params=["numpy", "numba"])
def each_backend(request):
    """Run a test once per kernel backend, restoring the active one afterwards."""
    if request.param == "numba" and not _accel.HAVE_NUMBA:
        pytest.skip("numba not installed")
    saved = _accel.backend()
    _accel.set_backend(request.param)
    yield request.param
    _accel.set_backend(saved)


def random_stochastic(rng, d, k, conc=1.0):
    return rng.dirichlet(np.full(d, conc), size=k).T


def pytest_terminal_summary(terminalreporter):
    acceptance = sys.modules.get("test_acceptance")
    if acceptance is None or not acceptance.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for line in acceptance.summary_lines():
        terminalreporter.write_line(line)
