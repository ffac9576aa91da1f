import numpy as np
import pytest

from strongfaith import kernels

_ACCEPTANCE = {}


@pytest.fixture
def criterion():
    """Record a one-line verdict for an acceptance criterion."""

    def record(number, passed, detail):
        _ACCEPTANCE.setdefault(number, []).append((bool(passed), detail))

    return record


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_ACCEPTANCE):
        for passed, detail in _ACCEPTANCE[number]:
            terminalreporter.write_line(f"criterion {number}: {'PASS' if passed else 'FAIL'} {detail}")


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(params=["numba", "numpy"])
def backend(request):
    with kernels.using_backend(request.param):
        yield request.param
