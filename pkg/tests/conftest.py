import numpy as np
import pytest

from pwlcf.pwl_law import PwlLaw, min_plus_law, table_law

ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def mp_law():
    return min_plus_law(2.0, 1.0)


@pytest.fixture
def six_law():
    return table_law()


def random_stable_law(rng: np.random.Generator, max_groups: int = 4, max_pieces: int = 4) -> PwlLaw:
    groups = [
        [(rng.uniform(0.0, 1.0), rng.uniform(-10.0, 15.0)) for _ in range(rng.integers(1, max_pieces + 1))]
        for _ in range(rng.integers(1, max_groups + 1))
    ]
    return PwlLaw.from_groups(groups)


def brute_evaluate(law: PwlLaw, y: float) -> float:
    return min(max(p.alpha * y + p.beta for p in g) for g in law.groups)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
