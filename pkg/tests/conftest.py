from fractions import Fraction

import numpy as np
import pytest
from hypothesis import settings

from gamedyn.game import RPSSpec, build_game_66, build_game_77, build_rps

settings.register_profile("default", deadline=None, max_examples=60)
settings.load_profile("default")

ACCEPTANCE_LINES: list[str] = []


@pytest.fixture(scope="session")
def g66():
    return build_game_66()


@pytest.fixture(scope="session")
def g77():
    return build_game_77(Fraction(1, 50))


@pytest.fixture
def rng():
    return np.random.default_rng(20240607)


def rps_eps(eps):
    return build_rps(RPSSpec.epsilon(Fraction(eps)))


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
