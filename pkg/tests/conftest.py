import numpy as np
import pytest

from sqkd import kernels

ACCEPTANCE_RESULTS = []


@pytest.fixture(params=kernels.available_backends())
def backend(request):
    return request.param


class FedStream:
    """Stand-in for a Generator that replays fixed uniforms."""

    def __init__(self, values):
        self.values = list(values)

    def random(self):
        return self.values.pop(0)


@pytest.fixture
def fed():
    return FedStream


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for name, ok, detail in ACCEPTANCE_RESULTS:
        terminalreporter.write_line(f"[{'PASS' if ok else 'FAIL'}] {name}: {detail}")
