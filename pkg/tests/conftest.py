import numpy as np
import pytest

from susplab.dynamics import SuspensionParams
from susplab.fuzzy import FuzzySystem
from susplab.road import RoadSpec, generate_profile

_CRITERIA = {}


def record_criterion(number: int, passed: bool, detail: str):
    _CRITERIA[number] = (passed, detail)


@pytest.fixture
def criterion():
    return record_criterion


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_CRITERIA):
        passed, detail = _CRITERIA[n]
        terminalreporter.write_line(f"criterion {n:2d}: {'PASS' if passed else 'FAIL'}  {detail}")


@pytest.fixture(scope="session")
def params():
    return SuspensionParams()


@pytest.fixture(scope="session")
def fuzzy():
    return FuzzySystem.default()


@pytest.fixture(scope="session")
def road10():
    return generate_profile(RoadSpec(seed=0), 20.0, 1e-3, 10.0)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
