"""Acceptance criteria, one test each; a PASS/FAIL line per criterion is printed in the session summary."""

import pytest

from martcurtain.acceptance import CRITERIA

LINES = []


@pytest.mark.parametrize("criterion", CRITERIA, ids=[f"criterion_{i + 1}" for i in range(len(CRITERIA))])
def test_criterion(criterion):
    result = criterion(seed=0)
    LINES.append(result.line())
    print(result.line())
    assert result.seconds < 60
    assert result.passed, result.detail
