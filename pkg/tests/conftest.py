import numpy as np
import pytest

from soficize.harness import RunConfig, generate_test_approx

# Lines recorded by the acceptance suite, echoed in the terminal summary so
# they show up without -s.
ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def make_alpha(kind="perturbed-shift", dim=64, noise=0.05, rank=1, e_radius=3, seed=0):
    return generate_test_approx(RunConfig(kind=kind, rank=rank, dim=dim, noise=noise,
                                          e_radius=e_radius, seed=seed))
