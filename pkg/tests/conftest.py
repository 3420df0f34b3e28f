import numpy as np
import pytest

from ris_secrecy.ris_model import load_fixture

from helpers import cn, random_channels, random_feasible_theta  # noqa: F401


@pytest.fixture(scope="session")
def lossy():
    return load_fixture(2.0)


@pytest.fixture(scope="session")
def lossless():
    return load_fixture(0.0)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    from helpers import ACCEPTANCE

    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for n in sorted(ACCEPTANCE):
            terminalreporter.write_line(ACCEPTANCE[n])
