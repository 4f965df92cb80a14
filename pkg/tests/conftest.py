import numpy as np
import pytest

from wicksell.models import FLAT_DEFAULT, FlatMixture, GammaModel, ObservationModel, Uniform01


@pytest.fixture(scope="session")
def uniform():
    return Uniform01()


@pytest.fixture(scope="session")
def uniform_obs(uniform):
    return ObservationModel(uniform)


@pytest.fixture(scope="session")
def flat():
    return FlatMixture(FLAT_DEFAULT)


@pytest.fixture(scope="session")
def flat_obs(flat):
    return ObservationModel(flat)


@pytest.fixture(scope="session")
def gamma2():
    return GammaModel(2.0, 1.0)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if not RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(RESULTS):
        ok, detail = RESULTS[k]
        terminalreporter.write_line(f"ACCEPTANCE-{k} {'PASS' if ok else 'FAIL'}: {detail}")
