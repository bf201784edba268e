import random

import pytest

from hsecagg.builder import build_scheme
from hsecagg.fixtures import example_scheme
from hsecagg.topology import Assignment, random_instance

# one line per acceptance criterion, printed in the terminal summary
ACCEPTANCE_LINES: dict[int, str] = {}

EXAMPLE_HOLDS = [
    [[1, 3, 4, 6], [1, 2, 6]],
    [[2, 3, 5], [2, 3, 4, 5], [2, 3, 4], [3, 4, 5]],
]


@pytest.fixture(scope="session")
def example_assignment():
    return Assignment.from_lists(6, EXAMPLE_HOLDS)


@pytest.fixture(scope="session")
def example_built(example_assignment):
    """Example instance built from seed 0 at the default prime."""
    return build_scheme(example_assignment, (0, 1), (1, 1), seed=0)


@pytest.fixture(scope="session")
def example_fixture_scheme():
    """Example instance assembled from the published matrices, q = 101."""
    return example_scheme()


def sweep_instances(n: int = 100, seed: int = 2024):
    rng = random.Random(seed)
    return [random_instance(rng, max_U=3, max_V=4, max_K=6) for _ in range(n)]


@pytest.fixture(scope="session")
def sweep_schemes():
    return [build_scheme(a, s2, T, seed=i) for i, (a, s2, T) in enumerate(sweep_instances())]


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for k in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(ACCEPTANCE_LINES[k])
