import pytest

from carlab.core import LearningSample, LearningSet

# Acceptance tests append their PASS/FAIL lines here; the summary hook
# replays them so they survive pytest's output capture.
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture
def two_band_set() -> LearningSet:
    """1-D set with class 0 at {2, 4} and class 1 at {7}."""
    return LearningSet.build(
        [
            LearningSample("a", (2.0,), 0),
            LearningSample("b", (4.0,), 0),
            LearningSample("c", (7.0,), 1),
        ],
        mode="real",
    )


@pytest.fixture
def corner_set() -> LearningSet:
    """2-D set with class 0 at the origin and class 1 at (1, 1)."""
    return LearningSet.build(
        [
            LearningSample("a", (0.0, 0.0), 0),
            LearningSample("b", (1.0, 1.0), 1),
        ],
        mode="real",
    )
