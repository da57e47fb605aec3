"""One test per acceptance criterion; each prints its PASS/FAIL line."""

import pytest

from arclosure.acceptance import CRITERIA


@pytest.mark.parametrize("check", CRITERIA, ids=[f"criterion_{i}" for i in range(1, len(CRITERIA) + 1)])
def test_criterion(check, capsys):
    result = check()
    with capsys.disabled():
        print("\n" + result.line())
        if not result.passed:
            for d in result.details:
                print("    " + d)
    assert result.passed, "\n".join(result.details)
