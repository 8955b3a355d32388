import numpy as np
import pytest

from martcurtain.measures import DiscreteMeasure


@pytest.fixture
def spread():
    """Two-atom source spread onto three targets."""
    mu = DiscreteMeasure([-1.0, 1.0], [0.5, 0.5])
    nu = DiscreteMeasure([-2.0, 0.0, 2.0], [0.25, 0.5, 0.25])
    return mu, nu


@pytest.fixture
def dilation():
    return DiscreteMeasure.dirac(0.0), DiscreteMeasure([-1.0, 1.0], [0.5, 0.5])


@pytest.fixture
def rng():
    return np.random.default_rng(20261016)


def pytest_terminal_summary(terminalreporter):
    from test_acceptance import LINES
    if LINES:
        terminalreporter.section("acceptance criteria")
        for line in LINES:
            terminalreporter.write_line(line)
