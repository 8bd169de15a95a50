import numpy as np
import pytest

from dpswarm import Dataset, fork_stream, synth_linear


class ScriptedRng:
    """Stands in for an RngStream and replays fixed uniform draws."""

    def __init__(self, values):
        self.values = list(values)
        self.position = 0

    def uniform(self):
        v = self.values[self.position]
        self.position += 1
        return v

    def uniforms(self, size):
        n = int(np.prod(size))
        out = np.array([self.uniform() for _ in range(n)], dtype=float)
        return out.reshape(size)

    def integer(self, high):
        return int(self.uniform() * high)


@pytest.fixture
def scripted():
    return ScriptedRng


@pytest.fixture
def small_data():
    return synth_linear(100, 2, [0.3, -0.4], 0.05, fork_stream(7, "data"))


@pytest.fixture
def tiny_data():
    return Dataset([[1.0], [0.5], [-0.5]], [1.0, 0.0, -0.25])


_ACCEPTANCE = {}


@pytest.fixture
def criterion():
    """Record one acceptance line, then assert it."""

    def check(number, title, ok, detail=""):
        _ACCEPTANCE[number] = (title, bool(ok), detail)
        assert ok, f"criterion {number} ({title}): {detail}"

    return check


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_ACCEPTANCE):
        title, ok, detail = _ACCEPTANCE[number]
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'}  {number:2d}. {title}  {detail}")
