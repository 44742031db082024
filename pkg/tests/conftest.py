import numpy as np
import pytest

from sdbounds.harness import build_fig1_instance

#: Lines printed by the acceptance suite, echoed in the terminal summary.
ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


@pytest.fixture(scope="session")
def fig1_instances():
    return {s: build_fig1_instance(s) for s in range(1, 6)}


def random_psd(rng, d, rank=None):
    rank = d if rank is None else rank
    G = rng.standard_normal((d, rank))
    return G @ G.T


def random_pd(rng, d):
    return random_psd(rng, d) + 0.1 * np.eye(d)
