import numpy as np
import pytest

from hopflink import BeltramiField, RotationField
from hopflink.spectral import SpectrumConfig, generate_ensemble

# criterion lines collected by test_acceptance.py, echoed in the summary
ACCEPTANCE_LINES = []


@pytest.fixture(scope="session")
def abc():
    return BeltramiField(1.0, 1.0, 1.0, 1.0)


@pytest.fixture(scope="session")
def rotation():
    return RotationField(1.0, 1.0)


@pytest.fixture(scope="session")
def small_ensemble():
    return generate_ensemble(SpectrumConfig(1.0, 1.0, 3.0, 6, "random", seed=5))


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
