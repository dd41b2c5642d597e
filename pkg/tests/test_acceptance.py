"""End-to-end acceptance gate.

Each test runs one numbered criterion from :mod:`atomfringe.acceptance`
at its fixed tolerance and prints a PASS/FAIL line; the CLI ``check``
verb runs the same list.
"""

import pytest

from atomfringe import acceptance


@pytest.mark.parametrize(
    "criterion", acceptance.ALL_CRITERIA, ids=lambda fn: fn.__name__
)
def test_criterion(criterion):
    result = criterion()
    print(f"{'PASS' if result.passed else 'FAIL'}  {result.number:2d}  "
          f"{result.name}: {result.detail}")
    assert result.passed, f"criterion {result.number} ({result.name}): {result.detail}"


def test_check_verb_runs_everything(capsys):
    from atomfringe.cli import main

    assert main(["check"]) == 0
    out = capsys.readouterr().out
    assert out.count("PASS") >= 14
    assert "FAIL" not in out
