import itertools
import sys

import numpy as np
import pytest

from dpkemeny.local import UserPopulation
from dpkemeny.ranking import Ranking, as_profile

# Items M, S, N, C, A of the four-voter worked example, encoded as 0..4.
WORKED_ORDERS = [[0, 1, 2, 3, 4], [4, 0, 2, 3, 1], [2, 3, 1, 0, 4], [0, 1, 3, 2, 4]]


def brute_kendall(a: Ranking, b: Ranking) -> int:
    """Pairwise disagreement count written out with plain loops."""
    count = 0
    for i, j in itertools.combinations(range(a.m), 2):
        if (a.positions[i] < a.positions[j]) != (b.positions[i] < b.positions[j]):
            count += 1
    return count


def brute_opt(w) -> float:
    """Minimum Kemeny cost over every permutation via itertools."""
    best = float("inf")
    for order in itertools.permutations(range(w.m)):
        cost = sum(w[order[b], order[a]] for a in range(w.m) for b in range(a + 1, w.m))
        best = min(best, cost)
    return best


@pytest.fixture
def worked():
    return as_profile(WORKED_ORDERS)


@pytest.fixture
def rng():
    return np.random.default_rng(20240521)


def unanimous(order, n):
    return as_profile([list(order)] * n)


class AccessLoggingPopulation(UserPopulation):
    """Records which population entry point led to every read of the raw rankings."""

    def __init__(self, profile):
        super().__init__(profile)
        self.readers = []

    @property
    def _positions(self):
        frame = sys._getframe(1)
        outermost = None
        while frame is not None and frame.f_locals.get("self") is self:
            outermost = frame.f_code.co_name
            frame = frame.f_back
        self.readers.append(outermost)
        return super()._positions


def definitional_embed(x, d, t):
    """Position array written straight from the swap rule, 1-based then shifted."""
    m = 2 * d + t
    pos = {}
    for j in range(1, m + 1):
        if j <= d:
            pos[j] = j if x[j - 1] == 1 else j + d + t
        elif j > d + t:
            pos[j] = j if x[j - d - t - 1] == 1 else j - d - t
        else:
            pos[j] = j
    return Ranking(tuple(pos[j] - 1 for j in range(1, m + 1)))


# One line per acceptance criterion, filled by test_acceptance and shown in the summary.
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[2].rstrip(":"))):
            terminalreporter.write_line(line)
