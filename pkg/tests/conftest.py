import random

import pytest

from rexmap.numerics import Scalar
from rexmap.sequences import SeqWindow


def random_window(rng: random.Random, length: int = 200, lo: int = -100) -> SeqWindow:
    return SeqWindow.explicit([rng.choice((1, -1)) for _ in range(length)], lo)


def random_unit(rng: random.Random, bits: int = 40) -> Scalar:
    return Scalar(rng.randrange(0, 2**bits), 2**bits)


def random_open_half(rng: random.Random, bits: int = 40) -> Scalar:
    """Random dyadic rational in (0, 1/2)."""
    return Scalar(rng.randrange(1, 2 ** (bits - 1)), 2**bits)


@pytest.fixture
def rng():
    return random.Random(20240611)


# one summary line per acceptance criterion, printed at the end of the run
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
