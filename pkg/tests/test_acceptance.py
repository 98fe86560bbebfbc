"""Acceptance criteria 1-11 at their stated tolerances.

Each test prints one ``[PASS]``/``[FAIL]`` line; the lines are collected and
repeated in an "acceptance criteria" section at the end of the run.
"""

import pytest

from surface_maryland.acceptance import ALL_CHECKS, run_check

pytestmark = pytest.mark.slow


@pytest.mark.parametrize("number", range(1, len(ALL_CHECKS) + 1))
def test_criterion(number, acceptance_log):
    res = run_check(number)
    print(res.line())
    acceptance_log.append(res.line())
    assert res.passed, res.line()
