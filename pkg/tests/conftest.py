import numpy as np
import pytest

from hamstab import analyze, make_system, stabilize

_ACCEPTANCE = {}


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(_ACCEPTANCE, key=lambda k: (int(k.split(".")[0]), k)):
        ok, detail = _ACCEPTANCE[key]
        terminalreporter.write_line(f"criterion {key:<5} {'PASS' if ok else 'FAIL'}  {detail}")


@pytest.fixture
def record():
    """Record one acceptance line; the terminal summary prints them all."""

    def _record(key, ok, detail):
        _ACCEPTANCE[str(key)] = (bool(ok), detail)
        print(f"criterion {key}: {'PASS' if ok else 'FAIL'}  {detail}")
        return ok

    return _record


class Pipeline:
    def __init__(self, name, params=None):
        self.H, self.guess = make_system(name, params or {})
        self.z0, self.cls, self.T = analyze(self.H, self.guess)
        self.CL = stabilize(self.H, self.T)

    @property
    def n(self):
        return self.H.n


@pytest.fixture(scope="session")
def hydrogen_pipeline():
    return Pipeline("hydrogen")


@pytest.fixture(scope="session")
def model_pipeline():
    return Pipeline("model", {"a": 2.0, "b": 1.0})


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
