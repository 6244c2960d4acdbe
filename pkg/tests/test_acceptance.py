"""Acceptance criteria 1-10, one PASS/FAIL line each.

Run ``pytest tests/test_acceptance.py -v`` or ``python tests/test_acceptance.py``.
Details of a failing criterion are printed below its line.
"""
import json
import sys

import pytest

from tronquee.checks import ALL_CHECKS, CheckResult
from tronquee.cli import to_jsonable


def _report(res: CheckResult, out=None):
    out = out or sys.stdout
    print(res.line(), file=out)
    if not res.passed:
        print(json.dumps(to_jsonable(res.detail), indent=1, sort_keys=True), file=out)


@pytest.mark.parametrize("check", ALL_CHECKS, ids=[f"criterion_{i}" for i in range(1, 11)])
def test_criterion(check, capsys):
    res = check()
    with capsys.disabled():
        print()
        _report(res)
    assert res.passed, res.line()


if __name__ == "__main__":
    results = [c() for c in ALL_CHECKS]
    for r in results:
        _report(r)
    print(f"{sum(r.passed for r in results)}/{len(results)} criteria passed")
    sys.exit(0 if all(r.passed for r in results) else 1)
